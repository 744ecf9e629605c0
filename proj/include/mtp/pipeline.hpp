#pragma once

#include <mtp/evaluation.hpp>
#include <mtp/prediction.hpp>
#include <mtp/scenario.hpp>
#include <mtp/tracker.hpp>

#include <chrono>
#include <cstdint>
#include <cstring>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace mtp {

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(v));
    return std::string(buf);
}

struct RunOptions {
    bool use_gt_past = false;  // idealized baseline: predict from GT pasts
    bool sampling = false;     // reduce the pooled set to k via k-means++
    bool force_multi = false;  // run the multi-hypothesis path even at H=1
};

struct RunResult {
    std::vector<EvalFrame> eval_frames;       // final predictions per frame
    std::vector<EvalFrame> eval_frames_full;  // pre-sampling pooled predictions
    // Per-hypothesis confirmed-track observations per frame, for error
    // classification. Index [h][frame].
    std::vector<std::vector<FrameObservation>> observations;
    // Same observations indexed [frame][slot], plus each slot's parent slot
    // in the previous frame, for lineage reconstruction. Hypotheses are
    // re-ranked every frame, so a fixed slot does not follow one lineage.
    std::vector<std::vector<FrameObservation>> frame_observations;
    std::vector<std::vector<int>> parent_slots;
    double tracking_ms_per_frame = 0.0;
    double prediction_ms_per_frame = 0.0;
    double sampling_ms_per_frame = 0.0;
    std::int64_t predictor_rollouts = 0;  // memoized rollouts actually run
    std::string tracks_log;
    std::string predictions_log;
};

namespace detail {

/// Predictor seed derived from the position window itself: identical pasts
/// give identical rollouts, so hypotheses that only permute object
/// identities share prediction work.
inline std::uint64_t position_seed(
    std::uint64_t base, const std::vector<std::array<double, 2>>& pts) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& p : pts) {
        for (double v : p) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xff;
                h *= 1099511628211ull;
            }
        }
    }
    return mix_seed(base, h);
}

inline nlohmann::json sample_to_json(const TrajectorySample& s) {
    nlohmann::json wp = nlohmann::json::array();
    for (const auto& w : s.waypoints)
        wp.push_back(nlohmann::json::array({w[0], w[1]}));
    return wp;
}

/// Predict k samples for every confirmed tracklet of every hypothesis.
/// Rollouts are memoized on the position window: seed and samples depend
/// only on the window content, so hypotheses sharing a past (or permuting
/// identities over the same pasts) share prediction work. `rollout_ms`
/// accumulates predictor compute time only; distributing shared rollouts to
/// hypotheses is bookkeeping, not prediction.
inline std::vector<PredictionSet> predict_hypotheses(
    const std::vector<Hypothesis>& hyps, int frame, const PipelineConfig& cfg,
    double& rollout_ms, std::int64_t& rollouts) {
    using clock = std::chrono::steady_clock;
    std::vector<PredictionSet> out(hyps.size());
    std::map<std::vector<std::array<double, 2>>, std::vector<TrajectorySample>>
        memo;
    const ConstantVelocityPredictor predictor(cfg.sigma_speed,
                                              cfg.sigma_heading);
    std::vector<double> scratch;
    for (std::size_t h = 0; h < hyps.size(); ++h) {
        out[h].frame = frame;
        for (const auto& t : hyps[h].tracklets) {
            if (!t.live() || t.status != TrackStatus::confirmed) continue;
            std::string key;
            if (t.last_match_frame == frame && t.last_detection_id) {
                key = "d" + std::to_string(*t.last_detection_id);
            } else if (h == 0) {
                // Unmatched tracklets have no cross-hypothesis detection
                // anchor; keep them in hypothesis 0 only.
                key = "t" + std::to_string(t.track_id);
            } else {
                continue;
            }
            auto memo_key = tracklet_positions(t, cfg.past_len);
            auto it = memo.find(memo_key);
            if (it == memo.end()) {
                const auto t0 = clock::now();
                predictor.predict_into(memo_key, cfg.horizon, cfg.samples,
                                       position_seed(cfg.rng_seed, memo_key),
                                       scratch);
                rollout_ms += std::chrono::duration<double, std::milli>(
                                  clock::now() - t0).count();
                ++rollouts;
                std::vector<TrajectorySample> samples;
                samples.reserve(static_cast<std::size_t>(cfg.samples));
                std::size_t w = 0;
                for (int j = 0; j < cfg.samples; ++j) {
                    TrajectorySample ts;
                    ts.waypoints.reserve(static_cast<std::size_t>(cfg.horizon));
                    for (int i = 0; i < cfg.horizon; ++i) {
                        ts.waypoints.push_back({scratch[w], scratch[w + 1]});
                        w += 2;
                    }
                    samples.push_back(std::move(ts));
                }
                it = memo.emplace(std::move(memo_key), std::move(samples)).first;
            }
            std::vector<TrajectorySample> samples = it->second;
            for (auto& s : samples) {
                s.object_key = key;
                s.source_hypothesis = static_cast<std::int64_t>(h);
            }
            out[h].samples[key] = std::move(samples);
        }
    }
    return out;
}

/// Current box for an object key: the tracklet in the lowest-index
/// hypothesis that carries it.
inline std::optional<Box3D> current_box_for_key(
    const std::vector<Hypothesis>& hyps, int frame, const std::string& key) {
    for (const auto& hyp : hyps) {
        for (const auto& t : hyp.tracklets) {
            if (!t.live() || t.status != TrackStatus::confirmed) continue;
            if (t.last_match_frame == frame && t.last_detection_id &&
                key == "d" + std::to_string(*t.last_detection_id))
                return t.current().box();
            if (key == "t" + std::to_string(t.track_id))
                return t.current().box();
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Run the full tracking-prediction pipeline on one scenario.
inline RunResult run_pipeline(const Scenario& scenario,
                              const PipelineConfig& cfg,
                              const RunOptions& opt = {}) {
    cfg.validate();
    using clock = std::chrono::steady_clock;
    RunResult res;
    std::ostringstream tracks_log, pred_log;

    const int n_frames = scenario.frames;
    double track_ms = 0.0, pred_ms = 0.0, sample_ms = 0.0;

    std::vector<Hypothesis> hyps{Hypothesis{}};
    res.observations.assign(static_cast<std::size_t>(cfg.hypotheses), {});

    ConstantVelocityPredictor gt_predictor(cfg.sigma_speed, cfg.sigma_heading);

    for (int f = 0; f < n_frames; ++f) {
        const auto& dets = scenario.detections[static_cast<std::size_t>(f)];

        if (!opt.use_gt_past) {
            const auto t0 = clock::now();
            if (!opt.force_multi && cfg.hypotheses == 1 &&
                cfg.effective_children() == 1) {
                hyps = {step_single(hyps[0], f, dets, cfg)};
            } else {
                hyps = step_multi(hyps, f, dets, cfg);
            }
            track_ms += std::chrono::duration<double, std::milli>(clock::now() -
                                                                  t0).count();

            res.frame_observations.emplace_back();
            res.parent_slots.emplace_back();
            for (std::size_t h = 0; h < hyps.size(); ++h) {
                res.parent_slots.back().push_back(
                    static_cast<int>(hyps[h].parent_id.value_or(0)));
                FrameObservation obs;
                obs.frame = f;
                for (const auto& t : hyps[h].tracklets) {
                    if (!t.live() || t.status != TrackStatus::confirmed)
                        continue;
                    obs.tracks.emplace_back(t.track_id, t.current().box());
                    nlohmann::json rec = {
                        {"frame", f},
                        {"hyp", static_cast<std::int64_t>(h)},
                        {"parent", hyps[h].parent_id ? nlohmann::json(*hyps[h].parent_id)
                                                     : nlohmann::json()},
                        {"cost", hyps[h].cumulative_cost},
                        {"track", t.track_id},
                        {"det", t.last_match_frame == f && t.last_detection_id
                                    ? nlohmann::json(*t.last_detection_id)
                                    : nlohmann::json()},
                        {"status", to_string(t.status)},
                        {"box", detail::box_to_json(t.current().box())}};
                    tracks_log << rec.dump() << "\n";
                }
                for (const auto& g : scenario.gt)
                    if (auto b = g.box_at(f)) obs.gts.emplace_back(g.gt_id, *b);
                res.frame_observations.back().push_back(obs);
                if (h < res.observations.size())
                    res.observations[h].push_back(std::move(obs));
            }
        }

        // Prediction.
        PredictionSet pooled;
        EvalFrame ef, ef_full;
        ef.frame = ef_full.frame = f;
        if (opt.use_gt_past) {
            const auto t0 = clock::now();
            pooled.frame = f;
            for (const auto& g : scenario.gt) {
                auto cur = g.box_at(f);
                if (!cur) continue;
                std::vector<std::array<double, 2>> past;
                for (int i = f - cfg.past_len + 1; i <= f; ++i)
                    if (auto b = g.box_at(i)) past.push_back({b->cx, b->cy});
                if (past.empty()) continue;
                const std::string key = "g" + std::to_string(g.gt_id);
                auto samples = gt_predictor.predict(
                    past, cfg.horizon, cfg.samples,
                    detail::position_seed(cfg.rng_seed, past));
                for (auto& s : samples) s.object_key = key;
                pooled.samples[key] = std::move(samples);
                ef.objects.push_back(
                    PredictedObject{key, *cur, pooled.samples[key]});
            }
            pred_ms += std::chrono::duration<double, std::milli>(clock::now() -
                                                                 t0).count();
            ef_full = ef;
        } else {
            auto per_hyp = detail::predict_hypotheses(hyps, f, cfg, pred_ms,
                                                      res.predictor_rollouts);
            pooled = pool_predictions(per_hyp);
            for (const auto& [key, samples] : pooled.samples) {
                auto box = detail::current_box_for_key(hyps, f, key);
                if (!box) continue;
                ef_full.objects.push_back(PredictedObject{key, *box, samples});
                std::vector<TrajectorySample> final_samples = samples;
                if (opt.sampling &&
                    static_cast<int>(samples.size()) > cfg.samples) {
                    const auto s0 = clock::now();
                    final_samples = kmeanspp_sample(
                        samples, cfg.samples,
                        mix_seed(cfg.rng_seed, fnv1a64(key)));
                    sample_ms += std::chrono::duration<double, std::milli>(
                                     clock::now() - s0).count();
                }
                ef.objects.push_back(
                    PredictedObject{key, *box, std::move(final_samples)});
            }
        }

        for (const auto& obj : ef_full.objects) {
            const PredictedObject* final_obj = nullptr;
            for (const auto& o : ef.objects)
                if (o.key == obj.key) final_obj = &o;
            nlohmann::json pre = nlohmann::json::array();
            for (const auto& s : obj.samples)
                pre.push_back(detail::sample_to_json(s));
            nlohmann::json post = nlohmann::json::array();
            if (final_obj)
                for (const auto& s : final_obj->samples)
                    post.push_back(detail::sample_to_json(s));
            nlohmann::json rec = {{"frame", f},
                                  {"key", obj.key},
                                  {"box", detail::box_to_json(obj.current_box)},
                                  {"pre", pre},
                                  {"post", post}};
            pred_log << rec.dump() << "\n";
        }

        res.eval_frames.push_back(std::move(ef));
        res.eval_frames_full.push_back(std::move(ef_full));
    }

    const double nf = std::max(1, n_frames);
    res.tracking_ms_per_frame = track_ms / nf;
    res.prediction_ms_per_frame = pred_ms / nf;
    res.sampling_ms_per_frame = sample_ms / nf;
    res.tracks_log = tracks_log.str();
    res.predictions_log = pred_log.str();
    return res;
}

/// Error events of one run hypothesis, from its recorded observations.
inline std::vector<ErrorEvent> classify_run_errors(
    const std::vector<FrameObservation>& observations,
    const PipelineConfig& cfg) {
    std::vector<FramePairing> pairings;
    pairings.reserve(observations.size());
    for (const auto& obs : observations)
        pairings.push_back(match_frame(obs, cfg.matching, cfg.gate_threshold));
    return classify_errors(observations, pairings, cfg.matching,
                           cfg.gate_threshold);
}

/// Error events along each surviving hypothesis lineage. The sequence for a
/// final hypothesis is rebuilt by following parent slots back through the
/// frames, so re-ranking between frames does not mix lineages.
inline std::vector<std::vector<ErrorEvent>> classify_lineage_errors(
    const RunResult& res, const PipelineConfig& cfg) {
    std::vector<std::vector<ErrorEvent>> out;
    if (res.frame_observations.empty()) return out;
    const int last = static_cast<int>(res.frame_observations.size()) - 1;
    const std::size_t n_final = res.frame_observations[static_cast<std::size_t>(
        last)].size();
    for (std::size_t slot = 0; slot < n_final; ++slot) {
        std::vector<FrameObservation> seq(
            static_cast<std::size_t>(last) + 1);
        std::size_t s = slot;
        for (int f = last; f >= 0; --f) {
            const auto& frame_obs =
                res.frame_observations[static_cast<std::size_t>(f)];
            if (s >= frame_obs.size()) s = 0;  // lineage predates expansion
            seq[static_cast<std::size_t>(f)] = frame_obs[s];
            s = static_cast<std::size_t>(
                res.parent_slots[static_cast<std::size_t>(f)][s]);
        }
        out.push_back(classify_run_errors(seq, cfg));
    }
    return out;
}

/// Reproducible description of one pipeline invocation.
inline nlohmann::json make_manifest(const PipelineConfig& cfg,
                                    const RunOptions& opt,
                                    const std::string& scenario_path,
                                    const std::string& scenario_hash,
                                    const RunResult& res) {
    return nlohmann::json{
        {"config",
         {{"hypotheses", cfg.hypotheses},
          {"samples", cfg.samples},
          {"children_per_parent", cfg.effective_children()},
          {"matching", to_string(cfg.matching)},
          {"gate_threshold", cfg.gate_threshold},
          {"past_len", cfg.past_len},
          {"horizon", cfg.horizon},
          {"max_age", cfg.max_age},
          {"min_hits", cfg.min_hits},
          {"unmatched_penalty", cfg.unmatched_penalty},
          {"sigma_speed", cfg.sigma_speed},
          {"sigma_heading", cfg.sigma_heading},
          {"rng_seed", cfg.rng_seed}}},
        {"options",
         {{"use_gt_past", opt.use_gt_past},
          {"sampling", opt.sampling},
          {"force_multi", opt.force_multi}}},
        {"scenario", {{"path", scenario_path}, {"hash", scenario_hash}}},
        {"timing",
         {{"tracking_ms_per_frame", res.tracking_ms_per_frame},
          {"prediction_ms_per_frame", res.prediction_ms_per_frame},
          {"sampling_ms_per_frame", res.sampling_ms_per_frame}}}};
}

}  // namespace mtp
