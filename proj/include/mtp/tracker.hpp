#pragma once

#include <mtp/assignment.hpp>
#include <mtp/config.hpp>
#include <mtp/kalman.hpp>
#include <mtp/scenario.hpp>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mtp {

enum class TrackStatus { tentative, confirmed, dead };

inline std::string to_string(TrackStatus s) {
    switch (s) {
        case TrackStatus::tentative: return "tentative";
        case TrackStatus::confirmed: return "confirmed";
        default: return "dead";
    }
}

/// One tracked object: filtered state history plus identity and lifecycle.
struct Tracklet {
    std::int64_t track_id = 0;
    int birth_frame = 0;
    std::vector<TrackState> states;  // one per frame from birth to last live frame
    std::optional<std::int64_t> last_detection_id;
    int last_match_frame = -1;
    int hits = 0;    // consecutive hits
    int misses = 0;  // consecutive misses
    TrackStatus status = TrackStatus::tentative;

    bool live() const { return status != TrackStatus::dead; }
    const TrackState& current() const { return states.back(); }
};

/// One complete set of tracklets with its cumulative association cost.
struct Hypothesis {
    std::int64_t hypothesis_id = 0;
    std::optional<std::int64_t> parent_id;
    std::vector<Tracklet> tracklets;
    double cumulative_cost = 0.0;
};

/// Track ids are derived from (birth frame, detection id) so that births are
/// identical across hypotheses and runs.
inline std::int64_t make_track_id(int frame, std::int64_t detection_id) {
    return (static_cast<std::int64_t>(frame + 1) << 32) |
           (detection_id & 0xffffffff);
}

/// Gated cost matrix between predicted tracklet boxes (rows) and detections
/// (cols).
inline CostMatrix build_cost_matrix(const std::vector<Box3D>& predicted,
                                    const std::vector<Detection>& dets,
                                    const PipelineConfig& cfg) {
    CostMatrix m(static_cast<int>(predicted.size()),
                 static_cast<int>(dets.size()));
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) {
            if (cfg.matching == MatchingMode::iou3d) {
                const double iou = iou3d(predicted[r], dets[c].box);
                if (iou >= cfg.gate_threshold) m.set(r, c, 1.0 - iou);
            } else {
                const double d = center_distance_2d(predicted[r], dets[c].box);
                if (d <= cfg.gate_threshold) m.set(r, c, d);
            }
        }
    }
    return m;
}

namespace detail {

/// Advance one hypothesis by one frame given a solved assignment over
/// (live tracklet rows, detection cols).
inline void apply_assignment(Hypothesis& hyp, int frame,
                             const std::vector<Detection>& dets,
                             const std::vector<int>& live_idx,
                             const std::vector<TrackState>& predicted,
                             const Assignment& a, const PipelineConfig& cfg) {
    std::vector<char> row_matched(live_idx.size(), 0);
    for (const auto& [r, c] : a.matches) {
        Tracklet& t = hyp.tracklets[static_cast<std::size_t>(live_idx[r])];
        t.states.push_back(kf_update(predicted[static_cast<std::size_t>(r)],
                                     dets[static_cast<std::size_t>(c)].box, cfg));
        t.last_detection_id = dets[static_cast<std::size_t>(c)].detection_id;
        t.last_match_frame = frame;
        t.misses = 0;
        ++t.hits;
        if (t.status == TrackStatus::tentative && t.hits >= cfg.min_hits)
            t.status = TrackStatus::confirmed;
        row_matched[static_cast<std::size_t>(r)] = 1;
    }
    for (std::size_t r = 0; r < live_idx.size(); ++r) {
        if (row_matched[r]) continue;
        Tracklet& t = hyp.tracklets[static_cast<std::size_t>(live_idx[r])];
        t.states.push_back(predicted[r]);
        ++t.misses;
        if (t.status == TrackStatus::tentative) t.hits = 0;
        if (t.misses > cfg.max_age) t.status = TrackStatus::dead;
    }
    for (int c : a.unmatched_cols) {
        const Detection& d = dets[static_cast<std::size_t>(c)];
        Tracklet t;
        t.track_id = make_track_id(frame, d.detection_id);
        t.birth_frame = frame;
        t.states.push_back(kf_init(d.box, cfg));
        t.last_detection_id = d.detection_id;
        t.last_match_frame = frame;
        t.hits = 1;
        t.status = cfg.min_hits <= 1 ? TrackStatus::confirmed
                                     : TrackStatus::tentative;
        hyp.tracklets.push_back(std::move(t));
    }
    hyp.cumulative_cost +=
        a.total_cost +
        cfg.unmatched_penalty * static_cast<double>(a.unmatched_rows.size() +
                                                    a.unmatched_cols.size());
}

struct FramePrediction {
    std::vector<int> live_idx;
    std::vector<TrackState> predicted;
    std::vector<Box3D> boxes;
};

inline FramePrediction predict_live(const Hypothesis& hyp,
                                    const PipelineConfig& cfg) {
    FramePrediction fp;
    for (std::size_t i = 0; i < hyp.tracklets.size(); ++i) {
        if (!hyp.tracklets[i].live()) continue;
        fp.live_idx.push_back(static_cast<int>(i));
        fp.predicted.push_back(kf_predict(hyp.tracklets[i].current(), cfg));
        fp.boxes.push_back(fp.predicted.back().box());
    }
    return fp;
}

/// Deduplication key: current-frame match-set plus the tracklet identity
/// lineage of the child.
inline std::vector<std::int64_t> child_key(const Hypothesis& child, int frame) {
    std::vector<std::int64_t> key;
    for (const auto& t : child.tracklets) {
        if (t.last_match_frame == frame && t.last_detection_id) {
            key.push_back(t.track_id);
            key.push_back(*t.last_detection_id);
        }
    }
    key.push_back(-1);
    for (const auto& t : child.tracklets) key.push_back(t.track_id);
    return key;
}

}  // namespace detail

/// Single-hypothesis (STP) frame update: Hungarian assignment, Kalman
/// update, lifecycle bookkeeping.
inline Hypothesis step_single(const Hypothesis& hyp, int frame,
                              const std::vector<Detection>& dets,
                              const PipelineConfig& cfg) {
    Hypothesis out = hyp;
    out.parent_id = hyp.hypothesis_id;
    const auto fp = detail::predict_live(out, cfg);
    const CostMatrix m = build_cost_matrix(fp.boxes, dets, cfg);
    const Assignment a = hungarian(m);
    detail::apply_assignment(out, frame, dets, fp.live_idx, fp.predicted, a, cfg);
    return out;
}

/// Multi-hypothesis (MTP) frame update: each parent expands into its
/// children_per_parent best assignments, the pooled children are
/// deduplicated, cost-ranked, and pruned to H.
inline std::vector<Hypothesis> step_multi(const std::vector<Hypothesis>& hyps,
                                          int frame,
                                          const std::vector<Detection>& dets,
                                          const PipelineConfig& cfg) {
    if (hyps.empty())
        throw std::invalid_argument("step_multi: no parent hypotheses");
    struct Child {
        Hypothesis hyp;
        std::vector<std::int64_t> key;
    };
    std::vector<Child> children;
    for (const auto& parent : hyps) {
        const auto fp = detail::predict_live(parent, cfg);
        const CostMatrix m = build_cost_matrix(fp.boxes, dets, cfg);
        const auto assignments = murty_h_best(m, cfg.effective_children());
        for (const auto& a : assignments) {
            Hypothesis child = parent;
            child.parent_id = parent.hypothesis_id;
            detail::apply_assignment(child, frame, dets, fp.live_idx,
                                     fp.predicted, a, cfg);
            std::vector<std::int64_t> key = detail::child_key(child, frame);
            children.push_back(Child{std::move(child), std::move(key)});
        }
    }
    std::stable_sort(children.begin(), children.end(),
                     [](const Child& a, const Child& b) {
                         if (a.hyp.cumulative_cost != b.hyp.cumulative_cost)
                             return a.hyp.cumulative_cost < b.hyp.cumulative_cost;
                         return a.key < b.key;
                     });
    std::vector<Hypothesis> out;
    std::vector<std::vector<std::int64_t>> seen;
    for (auto& c : children) {
        if (static_cast<int>(out.size()) >= cfg.hypotheses) break;
        if (std::find(seen.begin(), seen.end(), c.key) != seen.end()) continue;
        seen.push_back(c.key);
        c.hyp.hypothesis_id = static_cast<std::int64_t>(out.size());
        out.push_back(std::move(c.hyp));
    }
    return out;
}

}  // namespace mtp
