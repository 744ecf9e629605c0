#pragma once

#include <json.hpp>

#include <mtp/assignment.hpp>
#include <mtp/config.hpp>
#include <mtp/prediction.hpp>
#include <mtp/scenario.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mtp {

enum class ErrorKind { IDS, FRAG_wrong, FRAG_under, SPURIOUS };

inline std::string to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::IDS: return "IDS";
        case ErrorKind::FRAG_wrong: return "FRAG_wrong";
        case ErrorKind::FRAG_under: return "FRAG_under";
        default: return "SPURIOUS";
    }
}

/// One classified tracking error at one frame.
struct ErrorEvent {
    ErrorKind kind = ErrorKind::IDS;
    int frame = 0;
    std::optional<std::int64_t> gt_id;  // absent for SPURIOUS
    std::vector<std::int64_t> track_ids;
    double ego_distance = 0.0;  // object distance from the ego origin
};

/// Boxes observed at one frame, for GT matching.
struct FrameObservation {
    int frame = 0;
    std::vector<std::pair<std::int64_t, Box3D>> tracks;
    std::vector<std::pair<std::int64_t, Box3D>> gts;
};

/// Per-frame GT pairing produced by match_frame.
struct FramePairing {
    int frame = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> matches;  // (gt, track)
    std::vector<std::int64_t> unmatched_gt;
    std::vector<std::int64_t> unmatched_tracks;
};

/// Hungarian matching of tracked boxes to GT boxes under the standard gate.
inline FramePairing match_frame(const FrameObservation& obs, MatchingMode mode,
                                double threshold) {
    PipelineConfig gate_cfg;
    gate_cfg.matching = mode;
    gate_cfg.gate_threshold = threshold;
    CostMatrix m(static_cast<int>(obs.gts.size()),
                 static_cast<int>(obs.tracks.size()));
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) {
            const Box3D& g = obs.gts[static_cast<std::size_t>(r)].second;
            const Box3D& t = obs.tracks[static_cast<std::size_t>(c)].second;
            if (mode == MatchingMode::iou3d) {
                const double iou = iou3d(g, t);
                if (iou >= threshold) m.set(r, c, 1.0 - iou);
            } else {
                const double d = center_distance_2d(g, t);
                if (d <= threshold) m.set(r, c, d);
            }
        }
    }
    const Assignment a = hungarian(m);
    FramePairing out;
    out.frame = obs.frame;
    for (const auto& [r, c] : a.matches)
        out.matches.emplace_back(obs.gts[static_cast<std::size_t>(r)].first,
                                 obs.tracks[static_cast<std::size_t>(c)].first);
    for (int r : a.unmatched_rows)
        out.unmatched_gt.push_back(obs.gts[static_cast<std::size_t>(r)].first);
    for (int c : a.unmatched_cols)
        out.unmatched_tracks.push_back(
            obs.tracks[static_cast<std::size_t>(c)].first);
    return out;
}

/// IDS / FRAG / SPURIOUS classification over a sequence of frame pairings.
/// `observations` must be aligned with `pairings` (same frames, same order).
inline std::vector<ErrorEvent> classify_errors(
    const std::vector<FrameObservation>& observations,
    const std::vector<FramePairing>& pairings, MatchingMode mode,
    double threshold) {
    std::vector<ErrorEvent> events;
    std::map<std::int64_t, std::int64_t> last_track_of_gt;
    std::map<std::int64_t, bool> gt_ever_matched;

    for (std::size_t i = 0; i < pairings.size(); ++i) {
        const FramePairing& p = pairings[i];
        const FrameObservation& obs = observations[i];
        auto gt_box = [&](std::int64_t gid) -> const Box3D* {
            for (const auto& [id, b] : obs.gts)
                if (id == gid) return &b;
            return nullptr;
        };
        for (const auto& [gid, tid] : p.matches) {
            auto it = last_track_of_gt.find(gid);
            if (it != last_track_of_gt.end() && it->second != tid) {
                ErrorEvent e;
                e.kind = ErrorKind::IDS;
                e.frame = p.frame;
                e.gt_id = gid;
                e.track_ids = {it->second, tid};
                if (const Box3D* b = gt_box(gid))
                    e.ego_distance = std::hypot(b->cx, b->cy);
                events.push_back(std::move(e));
            }
            last_track_of_gt[gid] = tid;
            gt_ever_matched[gid] = true;
        }
        for (std::int64_t gid : p.unmatched_gt) {
            if (!gt_ever_matched[gid]) continue;  // not yet tracked at all
            const Box3D* b = gt_box(gid);
            // Wrongly-tracked if some track lies within twice the gate:
            // the association drifted rather than the detection missing.
            bool nearby = false;
            if (b) {
                for (const auto& [tid, tb] : obs.tracks) {
                    if (mode == MatchingMode::iou3d) {
                        if (iou3d(*b, tb) >= 0.5 * threshold) nearby = true;
                    } else {
                        if (center_distance_2d(*b, tb) <= 2.0 * threshold)
                            nearby = true;
                    }
                }
            }
            ErrorEvent e;
            e.kind = nearby ? ErrorKind::FRAG_wrong : ErrorKind::FRAG_under;
            e.frame = p.frame;
            e.gt_id = gid;
            if (b) e.ego_distance = std::hypot(b->cx, b->cy);
            events.push_back(std::move(e));
        }
        for (std::int64_t tid : p.unmatched_tracks) {
            ErrorEvent e;
            e.kind = ErrorKind::SPURIOUS;
            e.frame = p.frame;
            e.track_ids = {tid};
            for (const auto& [id, tb] : obs.tracks)
                if (id == tid) e.ego_distance = std::hypot(tb.cx, tb.cy);
            events.push_back(std::move(e));
        }
    }
    return events;
}

/// Best-of-k mean displacement error over (x, y) waypoints.
inline double min_ade(const std::vector<TrajectorySample>& samples,
                      const std::vector<std::array<double, 2>>& gt_future) {
    if (samples.empty()) throw std::invalid_argument("min_ade: no samples");
    if (gt_future.empty()) throw std::invalid_argument("min_ade: empty gt");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        if (s.waypoints.size() != gt_future.size())
            throw std::invalid_argument("min_ade: horizon mismatch");
        double sum = 0.0;
        for (std::size_t i = 0; i < gt_future.size(); ++i)
            sum += std::hypot(s.waypoints[i][0] - gt_future[i][0],
                              s.waypoints[i][1] - gt_future[i][1]);
        best = std::min(best, sum / static_cast<double>(gt_future.size()));
    }
    return best;
}

/// Best-of-k displacement error at the final waypoint.
inline double min_fde(const std::vector<TrajectorySample>& samples,
                      const std::vector<std::array<double, 2>>& gt_future) {
    if (samples.empty()) throw std::invalid_argument("min_fde: no samples");
    if (gt_future.empty()) throw std::invalid_argument("min_fde: empty gt");
    double best = std::numeric_limits<double>::infinity();
    const std::size_t last = gt_future.size() - 1;
    for (const auto& s : samples) {
        if (s.waypoints.size() != gt_future.size())
            throw std::invalid_argument("min_fde: horizon mismatch");
        best = std::min(best, std::hypot(s.waypoints[last][0] - gt_future[last][0],
                                         s.waypoints[last][1] - gt_future[last][1]));
    }
    return best;
}

/// One object's final prediction at one frame, with the current tracked box
/// used to establish GT correspondence.
struct PredictedObject {
    std::string key;
    Box3D current_box;
    std::vector<TrajectorySample> samples;
};

struct EvalFrame {
    int frame = 0;
    std::vector<PredictedObject> objects;
};

struct SubsetMetrics {
    int objects = 0;
    double minade_k = 0.0;
    double minfde_k = 0.0;
};

/// Shared-vs-hypothesis-0 error counts for multi-hypothesis runs.
struct MultiHypothesisErrorStats {
    int hyp0_ids = 0, shared_ids = 0;
    int hyp0_frag = 0, shared_frag = 0;
};

/// Errors present in every hypothesis, identified by (kind, gt id, frame).
inline MultiHypothesisErrorStats shared_error_stats(
    const std::vector<std::vector<ErrorEvent>>& per_hypothesis) {
    MultiHypothesisErrorStats out;
    if (per_hypothesis.empty()) return out;
    using Key = std::tuple<int, std::int64_t, int>;
    auto keys = [](const std::vector<ErrorEvent>& evs) {
        std::set<Key> s;
        for (const auto& e : evs) {
            if (e.kind == ErrorKind::SPURIOUS || !e.gt_id) continue;
            s.insert({static_cast<int>(e.kind), *e.gt_id, e.frame});
        }
        return s;
    };
    std::set<Key> shared = keys(per_hypothesis[0]);
    for (std::size_t h = 1; h < per_hypothesis.size(); ++h) {
        std::set<Key> k = keys(per_hypothesis[h]);
        std::set<Key> inter;
        std::set_intersection(shared.begin(), shared.end(), k.begin(), k.end(),
                              std::inserter(inter, inter.begin()));
        shared = std::move(inter);
    }
    for (const auto& e : per_hypothesis[0]) {
        if (e.kind == ErrorKind::IDS) ++out.hyp0_ids;
        if (e.kind == ErrorKind::FRAG_wrong || e.kind == ErrorKind::FRAG_under)
            ++out.hyp0_frag;
    }
    for (const auto& [kind, gid, frame] : shared) {
        if (kind == static_cast<int>(ErrorKind::IDS)) ++out.shared_ids;
        else ++out.shared_frag;
    }
    return out;
}

/// Aggregated evaluation output; serializes to JSON and CSV.
struct MetricsReport {
    SubsetMetrics global;
    SubsetMetrics ids_subset;
    SubsetMetrics frag_subset;
    std::map<std::string, int> error_counts;           // per kind
    std::map<std::int64_t, int> per_gt_error_frequency;
    std::vector<int> ego_distance_histogram;           // 5 m bins
    int spurious_predictions = 0;
    int truncated_objects = 0;  // GT future shorter than horizon
    std::optional<MultiHypothesisErrorStats> multi_hypothesis;

    nlohmann::json to_json() const {
        auto subset = [](const SubsetMetrics& s) {
            return nlohmann::json{{"objects", s.objects},
                                  {"minade_k", s.minade_k},
                                  {"minfde_k", s.minfde_k}};
        };
        nlohmann::json j = {
            {"global", subset(global)},
            {"ids_subset", subset(ids_subset)},
            {"frag_subset", subset(frag_subset)},
            {"error_counts", error_counts},
            {"ego_distance_histogram_5m", ego_distance_histogram},
            {"spurious_predictions", spurious_predictions},
            {"truncated_objects", truncated_objects},
        };
        nlohmann::json freq = nlohmann::json::object();
        for (const auto& [gid, n] : per_gt_error_frequency)
            freq[std::to_string(gid)] = n;
        j["per_gt_error_frequency"] = freq;
        if (multi_hypothesis) {
            j["multi_hypothesis"] = {{"hyp0_ids", multi_hypothesis->hyp0_ids},
                                     {"shared_ids", multi_hypothesis->shared_ids},
                                     {"hyp0_frag", multi_hypothesis->hyp0_frag},
                                     {"shared_frag", multi_hypothesis->shared_frag}};
        }
        return j;
    }

    /// CSV rows: dataset/subset/method layout.
    std::string to_csv(const std::string& dataset,
                       const std::string& method) const {
        std::ostringstream out;
        out << "dataset,subset,method,objects,minade_k,minfde_k\n";
        auto row = [&](const char* name, const SubsetMetrics& s) {
            out << dataset << ',' << name << ',' << method << ',' << s.objects
                << ',' << s.minade_k << ',' << s.minfde_k << "\n";
        };
        row("all", global);
        row("ids", ids_subset);
        row("frag", frag_subset);
        return out.str();
    }
};

/// Targeted and global prediction evaluation against GT futures.
inline MetricsReport evaluate(const std::vector<EvalFrame>& predictions,
                              const std::vector<GtTrajectory>& gt,
                              const std::vector<ErrorEvent>& error_events,
                              const PipelineConfig& cfg) {
    MetricsReport report;
    report.error_counts = {{"IDS", 0}, {"FRAG_wrong", 0}, {"FRAG_under", 0},
                           {"SPURIOUS", 0}};
    for (const auto& e : error_events) {
        ++report.error_counts[to_string(e.kind)];
        if (e.gt_id) ++report.per_gt_error_frequency[*e.gt_id];
        const int bin = static_cast<int>(e.ego_distance / 5.0);
        if (bin >= static_cast<int>(report.ego_distance_histogram.size()))
            report.ego_distance_histogram.resize(
                static_cast<std::size_t>(bin) + 1, 0);
        ++report.ego_distance_histogram[static_cast<std::size_t>(bin)];
    }

    auto has_event_in_window = [&](std::int64_t gid, int frame, bool ids) {
        for (const auto& e : error_events) {
            const bool is_ids = e.kind == ErrorKind::IDS;
            const bool is_frag = e.kind == ErrorKind::FRAG_wrong ||
                                 e.kind == ErrorKind::FRAG_under;
            if (ids ? !is_ids : !is_frag) continue;
            if (!e.gt_id || *e.gt_id != gid) continue;
            if (e.frame > frame - cfg.past_len && e.frame <= frame) return true;
        }
        return false;
    };

    double g_ade = 0.0, g_fde = 0.0;
    double i_ade = 0.0, i_fde = 0.0;
    double f_ade = 0.0, f_fde = 0.0;

    for (const auto& ef : predictions) {
        // Prediction-frame correspondence: match current boxes against GT
        // boxes under the same gates as tracking evaluation.
        FrameObservation obs;
        obs.frame = ef.frame;
        for (std::size_t i = 0; i < ef.objects.size(); ++i)
            obs.tracks.emplace_back(static_cast<std::int64_t>(i),
                                    ef.objects[i].current_box);
        for (const auto& t : gt)
            if (auto b = t.box_at(ef.frame)) obs.gts.emplace_back(t.gt_id, *b);
        const FramePairing pairing =
            match_frame(obs, cfg.matching, cfg.gate_threshold);

        report.spurious_predictions +=
            static_cast<int>(pairing.unmatched_tracks.size());

        for (const auto& [gid, obj_idx] : pairing.matches) {
            const PredictedObject& obj =
                ef.objects[static_cast<std::size_t>(obj_idx)];
            const GtTrajectory* traj = nullptr;
            for (const auto& t : gt)
                if (t.gt_id == gid) traj = &t;
            std::vector<std::array<double, 2>> future;
            for (int i = 1; i <= cfg.horizon; ++i)
                if (auto b = traj->box_at(ef.frame + i))
                    future.push_back({b->cx, b->cy});
            if (static_cast<int>(future.size()) < cfg.horizon) {
                ++report.truncated_objects;
                continue;
            }
            if (obj.samples.empty()) continue;
            const double ade = min_ade(obj.samples, future);
            const double fde = min_fde(obj.samples, future);
            ++report.global.objects;
            g_ade += ade;
            g_fde += fde;
            if (has_event_in_window(gid, ef.frame, /*ids=*/true)) {
                ++report.ids_subset.objects;
                i_ade += ade;
                i_fde += fde;
            }
            if (has_event_in_window(gid, ef.frame, /*ids=*/false)) {
                ++report.frag_subset.objects;
                f_ade += ade;
                f_fde += fde;
            }
        }
    }
    auto finish = [](SubsetMetrics& s, double ade, double fde) {
        if (s.objects > 0) {
            s.minade_k = ade / s.objects;
            s.minfde_k = fde / s.objects;
        }
    };
    finish(report.global, g_ade, g_fde);
    finish(report.ids_subset, i_ade, i_fde);
    finish(report.frag_subset, f_ade, f_fde);
    return report;
}

}  // namespace mtp
