#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "vflow/geom.hpp"

namespace vflow::test {

/// Unit-speed-free sampling of a circle: theta_j = 2 pi (j + amp sin(2 pi j / m)) / m.
inline Manifold uneven_circle(int m, double R = 1.0, double amp = 0.3) {
    std::vector<Vec> pts(m);
    for (int j = 0; j < m; ++j) {
        const double u = j + amp * std::sin(2.0 * std::numbers::pi * j / m);
        const double th = 2.0 * std::numbers::pi * u / m;
        pts[j] = Vec(R * std::cos(th), R * std::sin(th), 0.0);
    }
    return make_polyline(std::move(pts), 2, true);
}

/// Star-shaped closed polyline with random radii in [0.5, 1.5] and random
/// angular jitter; never self-degenerate.
inline Manifold random_closed_polyline(std::mt19937_64& rng, int m, int dim = 2) {
    std::uniform_real_distribution<double> radius(0.5, 1.5), jitter(-0.3, 0.3), z(-0.5, 0.5);
    std::vector<Vec> pts(m);
    for (int j = 0; j < m; ++j) {
        const double th = 2.0 * std::numbers::pi * (j + jitter(rng)) / m;
        const double r = radius(rng);
        pts[j] = Vec(r * std::cos(th), r * std::sin(th), dim == 3 ? z(rng) : 0.0);
    }
    return make_polyline(std::move(pts), dim, true);
}

inline Eigen::Matrix3d rotation(double a, double b, double c) {
    return (Eigen::AngleAxisd(a, Vec::UnitZ()) * Eigen::AngleAxisd(b, Vec::UnitY()) * Eigen::AngleAxisd(c, Vec::UnitX()))
        .toRotationMatrix();
}

inline Manifold transformed(const Manifold& m, const Eigen::Matrix3d& Q, const Vec& shift) {
    std::vector<Vec> pts(m.size());
    for (int i = 0; i < m.size(); ++i) pts[i] = Q * m.points[i] + shift;
    return with_points(m, std::move(pts));
}

inline double max_abs_diff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a[i] - b[i]).cwiseAbs().maxCoeff());
    return d;
}

} // namespace vflow::test
