#pragma once

#include <Eigen/Dense>

#include <mtp/config.hpp>
#include <mtp/geometry.hpp>

namespace mtp {

// State layout: [cx, cy, cz, yaw, length, width, height, vx, vy, vz].
// Velocities are per frame. Observation covers the first 7 entries.
inline constexpr int kStateDim = 10;
inline constexpr int kObsDim = 7;

using StateVec = Eigen::Matrix<double, kStateDim, 1>;
using StateMat = Eigen::Matrix<double, kStateDim, kStateDim>;
using ObsVec = Eigen::Matrix<double, kObsDim, 1>;

struct TrackState {
    StateVec mean = StateVec::Zero();
    StateMat covariance = StateMat::Zero();

    Box3D box() const {
        return Box3D(mean(0), mean(1), mean(2), mean(4), mean(5), mean(6),
                     mean(3));
    }
};

namespace detail {

inline StateMat transition_matrix() {
    StateMat f = StateMat::Identity();
    f(0, 7) = 1.0;
    f(1, 8) = 1.0;
    f(2, 9) = 1.0;
    return f;
}

inline StateMat process_noise(const PipelineConfig& cfg) {
    StateMat q = StateMat::Zero();
    for (int i = 0; i < 3; ++i) q(i, i) = cfg.process_pos_var;
    for (int i = 7; i < 10; ++i) q(i, i) = cfg.process_vel_var;
    return q;
}

inline Eigen::Matrix<double, kObsDim, kObsDim> obs_noise(
    const PipelineConfig& cfg) {
    Eigen::Matrix<double, kObsDim, kObsDim> r =
        Eigen::Matrix<double, kObsDim, kObsDim>::Zero();
    for (int i = 0; i < 3; ++i) r(i, i) = cfg.obs_pos_var;
    r(3, 3) = cfg.obs_yaw_var;
    for (int i = 4; i < 7; ++i) r(i, i) = cfg.obs_dim_var;
    return r;
}

}  // namespace detail

inline TrackState kf_init(const Box3D& d, const PipelineConfig& cfg) {
    TrackState s;
    s.mean << d.cx, d.cy, d.cz, d.yaw, d.length, d.width, d.height, 0, 0, 0;
    StateVec diag;
    diag << cfg.init_pos_var, cfg.init_pos_var, cfg.init_pos_var,
        cfg.init_yaw_var, cfg.init_dim_var, cfg.init_dim_var, cfg.init_dim_var,
        cfg.init_vel_var, cfg.init_vel_var, cfg.init_vel_var;
    s.covariance = diag.asDiagonal();
    return s;
}

/// Constant-velocity prediction step.
inline TrackState kf_predict(const TrackState& s, const PipelineConfig& cfg) {
    const StateMat f = detail::transition_matrix();
    TrackState out;
    out.mean = f * s.mean;
    out.mean(3) = wrap_angle(out.mean(3));
    out.covariance = f * s.covariance * f.transpose() + detail::process_noise(cfg);
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose().eval());
    return out;
}

/// Measurement update with the observed box. Yaw innovation is wrapped.
inline TrackState kf_update(const TrackState& s, const Box3D& d,
                            const PipelineConfig& cfg) {
    using ObsMat = Eigen::Matrix<double, kObsDim, kStateDim>;
    ObsMat h = ObsMat::Zero();
    for (int i = 0; i < kObsDim; ++i) h(i, i) = 1.0;

    ObsVec z;
    z << d.cx, d.cy, d.cz, d.yaw, d.length, d.width, d.height;
    ObsVec innovation = z - h * s.mean;
    innovation(3) = wrap_angle(innovation(3));

    const auto r = detail::obs_noise(cfg);
    const Eigen::Matrix<double, kObsDim, kObsDim> S =
        h * s.covariance * h.transpose() + r;
    const Eigen::Matrix<double, kStateDim, kObsDim> gain =
        s.covariance * h.transpose() * S.ldlt().solve(
            Eigen::Matrix<double, kObsDim, kObsDim>::Identity());

    TrackState out;
    out.mean = s.mean + gain * innovation;
    out.mean(3) = wrap_angle(out.mean(3));
    // Joseph form keeps the covariance positive semidefinite.
    const StateMat ikh = StateMat::Identity() - gain * h;
    out.covariance = ikh * s.covariance * ikh.transpose() +
                     gain * r * gain.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose().eval());
    return out;
}

}  // namespace mtp
