#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mtp {

inline constexpr double kPi = 3.14159265358979323846;

/// Wrap an angle to [-pi, pi).
inline double wrap_angle(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    return a - kPi;
}

/// Oriented 3D bounding box: center, dimensions, and yaw about the vertical axis.
struct Box3D {
    double cx = 0.0, cy = 0.0, cz = 0.0;
    double length = 1.0, width = 1.0, height = 1.0;
    double yaw = 0.0;

    Box3D() = default;
    Box3D(double cx_, double cy_, double cz_, double length_, double width_,
          double height_, double yaw_)
        : cx(cx_), cy(cy_), cz(cz_), length(length_), width(width_),
          height(height_), yaw(wrap_angle(yaw_)) {
        if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0))
            throw std::invalid_argument("Box3D: dimensions must be positive");
    }

    double volume() const { return length * width * height; }

    /// Corners of the box footprint in the ground plane, counter-clockwise.
    std::array<std::array<double, 2>, 4> bev_corners() const {
        const double c = std::cos(yaw), s = std::sin(yaw);
        const double hl = 0.5 * length, hw = 0.5 * width;
        std::array<std::array<double, 2>, 4> out{};
        const double lx[4] = {hl, -hl, -hl, hl};
        const double ly[4] = {hw, hw, -hw, -hw};
        for (int i = 0; i < 4; ++i) {
            out[i][0] = cx + c * lx[i] - s * ly[i];
            out[i][1] = cy + s * lx[i] + c * ly[i];
        }
        return out;
    }

    bool operator==(const Box3D&) const = default;
};

namespace detail {

/// Area of a simple polygon (shoelace). Vertices in order.
inline double polygon_area(const std::vector<std::array<double, 2>>& p) {
    double a = 0.0;
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& u = p[i];
        const auto& v = p[(i + 1) % n];
        a += u[0] * v[1] - v[0] * u[1];
    }
    return 0.5 * std::abs(a);
}

/// Sutherland-Hodgman clip of a convex polygon against the half-plane left of (a, b).
inline std::vector<std::array<double, 2>> clip_halfplane(
    const std::vector<std::array<double, 2>>& poly,
    const std::array<double, 2>& a, const std::array<double, 2>& b) {
    std::vector<std::array<double, 2>> out;
    const std::size_t n = poly.size();
    if (n == 0) return out;
    auto side = [&](const std::array<double, 2>& p) {
        return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    };
    for (std::size_t i = 0; i < n; ++i) {
        const auto& cur = poly[i];
        const auto& nxt = poly[(i + 1) % n];
        const double sc = side(cur), sn = side(nxt);
        if (sc >= 0.0) out.push_back(cur);
        if ((sc > 0.0 && sn < 0.0) || (sc < 0.0 && sn > 0.0)) {
            const double t = sc / (sc - sn);
            out.push_back({cur[0] + t * (nxt[0] - cur[0]),
                           cur[1] + t * (nxt[1] - cur[1])});
        }
    }
    return out;
}

/// Intersection area of two convex polygons given in counter-clockwise order.
inline double convex_intersection_area(
    const std::vector<std::array<double, 2>>& p,
    const std::vector<std::array<double, 2>>& q) {
    std::vector<std::array<double, 2>> poly = p;
    const std::size_t n = q.size();
    for (std::size_t i = 0; i < n && !poly.empty(); ++i)
        poly = clip_halfplane(poly, q[i], q[(i + 1) % n]);
    if (poly.size() < 3) return 0.0;
    return polygon_area(poly);
}

}  // namespace detail

/// Intersection area of the two box footprints in the ground plane.
inline double bev_intersection_area(const Box3D& a, const Box3D& b) {
    const auto ca = a.bev_corners();
    const auto cb = b.bev_corners();
    std::vector<std::array<double, 2>> pa(ca.begin(), ca.end());
    std::vector<std::array<double, 2>> pb(cb.begin(), cb.end());
    return detail::convex_intersection_area(pa, pb);
}

/// Rotated 3D IoU: footprint intersection area times vertical interval overlap,
/// divided by the union volume.
inline double iou3d(const Box3D& a, const Box3D& b) {
    if (a == b) return 1.0;
    // Canonical argument order makes the result exactly symmetric.
    auto key = [](const Box3D& x) {
        return std::array<double, 7>{x.cx, x.cy, x.cz, x.length,
                                     x.width, x.height, x.yaw};
    };
    if (key(b) < key(a)) return iou3d(b, a);
    const double inter_area = bev_intersection_area(a, b);
    if (inter_area <= 0.0) return 0.0;
    const double za0 = a.cz - 0.5 * a.height, za1 = a.cz + 0.5 * a.height;
    const double zb0 = b.cz - 0.5 * b.height, zb1 = b.cz + 0.5 * b.height;
    const double zo = std::min(za1, zb1) - std::max(za0, zb0);
    if (zo <= 0.0) return 0.0;
    const double inter = inter_area * zo;
    const double uni = a.volume() + b.volume() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

/// Euclidean distance between box centers in the ground plane.
inline double center_distance_2d(const Box3D& a, const Box3D& b) {
    return std::hypot(a.cx - b.cx, a.cy - b.cy);
}

}  // namespace mtp
