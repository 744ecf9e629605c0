#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mtp {

enum class MatchingMode { iou3d, center2d };

inline std::string to_string(MatchingMode m) {
    return m == MatchingMode::iou3d ? "iou3d" : "center2d";
}
inline MatchingMode matching_mode_from_string(const std::string& s) {
    if (s == "iou3d") return MatchingMode::iou3d;
    if (s == "center2d") return MatchingMode::center2d;
    throw std::invalid_argument("unknown matching mode: " + s);
}

/// Knobs for the whole tracking-prediction pipeline. H is the hypothesis
/// count, k the prediction sample count per object.
struct PipelineConfig {
    int hypotheses = 1;             // H
    int samples = 20;               // k
    int children_per_parent = 0;    // 0 means "same as H"
    MatchingMode matching = MatchingMode::center2d;
    double gate_threshold = 2.0;    // IoU >= gate (iou3d) or dist <= gate (center2d)
    int past_len = 10;
    int horizon = 10;
    int max_age = 2;
    int min_hits = 3;
    double unmatched_penalty = 1.0; // cumulative-cost charge per unmatched entity
    double sigma_speed = 0.3;       // m/frame, predictor sample perturbation
    double sigma_heading = 0.15;    // rad
    std::uint64_t rng_seed = 0;

    // Kalman noise (diagonal).
    double init_pos_var = 1.0;
    double init_dim_var = 0.1;
    double init_yaw_var = 0.5;
    double init_vel_var = 4.0;
    double process_pos_var = 0.01;
    double process_vel_var = 0.04;
    double obs_pos_var = 0.09;
    double obs_dim_var = 0.01;
    double obs_yaw_var = 0.04;

    int effective_children() const {
        return children_per_parent > 0 ? children_per_parent : hypotheses;
    }

    void validate() const {
        if (hypotheses < 1) throw std::invalid_argument("config: H must be >= 1");
        if (samples < 1) throw std::invalid_argument("config: k must be >= 1");
        if (horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
        if (past_len < 1) throw std::invalid_argument("config: past_len must be >= 1");
        if (!(gate_threshold > 0.0))
            throw std::invalid_argument("config: gate_threshold must be > 0");
    }

    /// 10 past / 10 future frames at 10 FPS, IoU gating at 0.5.
    static PipelineConfig kitti_style() {
        PipelineConfig c;
        c.matching = MatchingMode::iou3d;
        c.gate_threshold = 0.5;
        c.past_len = 10;
        c.horizon = 10;
        return c;
    }

    /// 4 past / 12 future frames at 2 FPS, 2 m center-distance gating.
    static PipelineConfig nuscenes_style() {
        PipelineConfig c;
        c.matching = MatchingMode::center2d;
        c.gate_threshold = 2.0;
        c.past_len = 4;
        c.horizon = 12;
        return c;
    }
};

}  // namespace mtp
