#pragma once

#include <mtp/config.hpp>
#include <mtp/random.hpp>
#include <mtp/tracker.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtp {

/// One predicted future for one object: (x, y) waypoints, one per frame of
/// the prediction horizon.
struct TrajectorySample {
    std::string object_key;
    std::vector<std::array<double, 2>> waypoints;
    std::int64_t source_hypothesis = -1;
};

/// All samples produced at one frame, grouped by object.
struct PredictionSet {
    int frame = 0;
    std::map<std::string, std::vector<TrajectorySample>> samples;
};

/// Pluggable predictor: past (x, y) positions in, k future samples out.
class Predictor {
  public:
    virtual ~Predictor() = default;
    virtual std::vector<TrajectorySample> predict(
        const std::vector<std::array<double, 2>>& past, int horizon, int k,
        std::uint64_t seed) const = 0;
};

namespace detail {

/// Least-squares velocity over the position window; zero for a single point.
inline std::array<double, 2> ls_velocity(
    const std::vector<std::array<double, 2>>& pts) {
    const std::size_t n = pts.size();
    if (n < 2) return {0.0, 0.0};
    const double tbar = 0.5 * static_cast<double>(n - 1);
    double sxx = 0.0, sxy0 = 0.0, sxy1 = 0.0;
    double mx = 0.0, my = 0.0;
    for (const auto& p : pts) {
        mx += p[0];
        my += p[1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = static_cast<double>(i) - tbar;
        sxx += dt * dt;
        sxy0 += dt * (pts[i][0] - mx);
        sxy1 += dt * (pts[i][1] - my);
    }
    return {sxy0 / sxx, sxy1 / sxx};
}

}  // namespace detail

/// Constant-velocity sampling predictor. Sample 0 is the deterministic
/// rollout; the rest perturb speed and heading with Gaussian noise.
class ConstantVelocityPredictor : public Predictor {
  public:
    ConstantVelocityPredictor(double sigma_speed, double sigma_heading)
        : sigma_speed_(sigma_speed), sigma_heading_(sigma_heading) {}

    /// Allocation-free core: fills `flat` (resized to 2*k*horizon) with the
    /// rollout waypoints, sample-major, (x, y) interleaved. The buffer can be
    /// reused across calls.
    void predict_into(const std::vector<std::array<double, 2>>& past,
                      int horizon, int k, std::uint64_t seed,
                      std::vector<double>& flat) const {
        if (horizon < 1)
            throw std::invalid_argument("predict: horizon must be >= 1");
        if (k < 1) throw std::invalid_argument("predict: k must be >= 1");
        if (past.empty())
            throw std::invalid_argument("predict: empty position history");

        const auto [vx, vy] = detail::ls_velocity(past);
        const auto& origin = past.back();
        const double speed = std::hypot(vx, vy);
        const double heading = speed > 0.0 ? std::atan2(vy, vx) : 0.0;

        flat.resize(static_cast<std::size_t>(2 * k * horizon));
        std::mt19937_64 rng(seed);
        std::size_t w = 0;
        for (int j = 0; j < k; ++j) {
            double sx = vx, sy = vy;
            if (j > 0) {
                const double sp =
                    std::max(0.0, speed + sigma_speed_ * rand_gaussian(rng));
                const double hd = heading + sigma_heading_ * rand_gaussian(rng);
                sx = sp * std::cos(hd);
                sy = sp * std::sin(hd);
            }
            for (int i = 1; i <= horizon; ++i) {
                flat[w++] = origin[0] + sx * i;
                flat[w++] = origin[1] + sy * i;
            }
        }
    }

    std::vector<TrajectorySample> predict(
        const std::vector<std::array<double, 2>>& past, int horizon, int k,
        std::uint64_t seed) const override {
        std::vector<double> flat;
        predict_into(past, horizon, k, seed, flat);
        std::vector<TrajectorySample> out;
        out.reserve(static_cast<std::size_t>(k));
        std::size_t w = 0;
        for (int j = 0; j < k; ++j) {
            TrajectorySample ts;
            ts.waypoints.reserve(static_cast<std::size_t>(horizon));
            for (int i = 0; i < horizon; ++i) {
                ts.waypoints.push_back({flat[w], flat[w + 1]});
                w += 2;
            }
            out.push_back(std::move(ts));
        }
        return out;
    }

  private:
    double sigma_speed_;
    double sigma_heading_;
};

/// Position window of the last `past_len` filtered states.
inline std::vector<std::array<double, 2>> tracklet_positions(
    const Tracklet& t, int past_len) {
    const std::size_t n = t.states.size();
    const std::size_t w = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::max(1, past_len)));
    std::vector<std::array<double, 2>> out;
    out.reserve(w);
    for (std::size_t i = n - w; i < n; ++i)
        out.push_back({t.states[i].mean(0), t.states[i].mean(1)});
    return out;
}

/// Constant-velocity samples for one tracklet.
inline std::vector<TrajectorySample> predict_cv(const Tracklet& t, int horizon,
                                                int k, std::uint64_t seed,
                                                const PipelineConfig& cfg) {
    if (t.states.empty())
        throw std::invalid_argument("predict_cv: tracklet has no states");
    ConstantVelocityPredictor p(cfg.sigma_speed, cfg.sigma_heading);
    return p.predict(tracklet_positions(t, cfg.past_len), horizon, k, seed);
}

/// Concatenate per-hypothesis prediction sets per object.
inline PredictionSet pool_predictions(
    const std::vector<PredictionSet>& per_hypothesis) {
    if (per_hypothesis.empty())
        throw std::invalid_argument("pool_predictions: no prediction sets");
    PredictionSet out;
    out.frame = per_hypothesis.front().frame;
    for (const auto& ps : per_hypothesis) {
        if (ps.frame != out.frame)
            throw std::invalid_argument(
                "pool_predictions: mismatched frames across hypotheses");
        for (const auto& [key, samples] : ps.samples) {
            auto& dst = out.samples[key];
            dst.insert(dst.end(), samples.begin(), samples.end());
        }
    }
    return out;
}

/// Reduce a sample pool to k_out diverse trajectories: k-means++ seeding,
/// Lloyd iterations, centroids returned as trajectories.
inline std::vector<TrajectorySample> kmeanspp_sample(
    const std::vector<TrajectorySample>& samples, int k_out,
    std::uint64_t seed) {
    if (samples.empty())
        throw std::invalid_argument("kmeanspp_sample: empty sample list");
    if (k_out < 1)
        throw std::invalid_argument("kmeanspp_sample: k_out must be >= 1");
    const std::size_t horizon = samples.front().waypoints.size();
    for (const auto& s : samples)
        if (s.waypoints.size() != horizon)
            throw std::invalid_argument(
                "kmeanspp_sample: inconsistent horizons");

    // Distinct samples, first-occurrence order.
    std::vector<const TrajectorySample*> distinct;
    for (const auto& s : samples) {
        bool dup = false;
        for (const auto* d : distinct)
            if (d->waypoints == s.waypoints) dup = true;
        if (!dup) distinct.push_back(&s);
    }
    if (static_cast<int>(distinct.size()) <= k_out) {
        std::vector<TrajectorySample> out;
        for (const auto* d : distinct) out.push_back(*d);
        while (static_cast<int>(out.size()) < k_out) out.push_back(out.back());
        return out;
    }

    const std::size_t dim = 2 * horizon;
    const std::size_t n = samples.size();
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t w = 0; w < horizon; ++w) {
            pts[i][2 * w] = samples[i].waypoints[w][0];
            pts[i][2 * w + 1] = samples[i].waypoints[w][1];
        }
    auto sqdist = [&](const std::vector<double>& a,
                      const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double t = a[d] - b[d];
            s += t * t;
        }
        return s;
    };

    // k-means++ seeding.
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> centroids;
    centroids.push_back(
        pts[static_cast<std::size_t>(rand_uniform(rng, 0.0, 1.0) * n) % n]);
    std::vector<double> d2(n);
    while (static_cast<int>(centroids.size()) < k_out) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = sqdist(pts[i], centroids[0]);
            for (std::size_t c = 1; c < centroids.size(); ++c)
                best = std::min(best, sqdist(pts[i], centroids[c]));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) break;  // all remaining points coincide with centers
        const double r = rand_uniform(rng, 0.0, 1.0) * total;
        double acc = 0.0;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (acc >= r) {
                pick = i;
                break;
            }
        }
        centroids.push_back(pts[pick]);
    }
    // Duplicated inputs can exhaust distinct seeds; top up from the distinct
    // list (distinct.size() > k_out here, so this always fills).
    for (std::size_t i = 0;
         static_cast<int>(centroids.size()) < k_out && i < distinct.size();
         ++i) {
        std::vector<double> cand(dim);
        for (std::size_t w = 0; w < horizon; ++w) {
            cand[2 * w] = distinct[i]->waypoints[w][0];
            cand[2 * w + 1] = distinct[i]->waypoints[w][1];
        }
        bool present = false;
        for (const auto& c : centroids)
            if (c == cand) present = true;
        if (!present) centroids.push_back(std::move(cand));
    }

    // Lloyd iterations.
    std::vector<std::size_t> owner(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double best = sqdist(pts[i], centroids[0]);
            owner[i] = 0;
            for (std::size_t c = 1; c < centroids.size(); ++c) {
                const double d = sqdist(pts[i], centroids[c]);
                if (d < best) {
                    best = d;
                    owner[i] = c;
                }
            }
        }
        std::vector<std::vector<double>> next(centroids.size(),
                                              std::vector<double>(dim, 0.0));
        std::vector<std::size_t> count(centroids.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < dim; ++d) next[owner[i]][d] += pts[i][d];
            ++count[owner[i]];
        }
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            if (count[c] == 0) {
                // Re-seed an empty cluster at the point farthest from its
                // current centroid.
                std::size_t far = 0;
                double fd = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = sqdist(pts[i], centroids[owner[i]]);
                    if (d > fd) {
                        fd = d;
                        far = i;
                    }
                }
                next[c] = pts[far];
            } else {
                for (std::size_t d = 0; d < dim; ++d)
                    next[c][d] /= static_cast<double>(count[c]);
            }
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < centroids.size(); ++c)
            shift = std::max(shift, std::sqrt(sqdist(centroids[c], next[c])));
        centroids = std::move(next);
        if (shift < 1e-6) break;
    }

    std::vector<TrajectorySample> out;
    out.reserve(centroids.size());
    for (const auto& c : centroids) {
        TrajectorySample ts;
        ts.object_key = samples.front().object_key;
        ts.waypoints.resize(horizon);
        for (std::size_t w = 0; w < horizon; ++w)
            ts.waypoints[w] = {c[2 * w], c[2 * w + 1]};
        out.push_back(std::move(ts));
    }
    return out;
}

}  // namespace mtp
