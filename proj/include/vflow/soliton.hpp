#pragma once

// Reference shapes: exact and ODE-generated translators, shrinking spheres and
// the limacon seed whose inner loop collapses into a cusp.

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vflow/errors.hpp"
#include "vflow/geom.hpp"

namespace vflow {

/// A constructed shape, the spec string that produced it and the translation
/// velocity it is a soliton for (when it is one).
struct Seed {
    FlowState state;
    std::string spec;
    std::optional<Vec> velocity;
};

/// Grim reaper y = -(1/c) log cos(c x) sampled uniformly in x on
/// [-pi/(2c) + delta, pi/(2c) - delta] with m + 1 vertices. Translates with V = (0, c).
/// The sample abscissae are exactly mirror-symmetric about x = 0.
inline Seed grim_reaper(double c, double delta, int m) {
    if (!(c > 0.0)) throw InvalidInput("grim reaper needs c > 0");
    const double half = std::numbers::pi / (2.0 * c);
    if (!(delta > 0.0 && delta < half)) throw InvalidInput("grim reaper needs 0 < delta < pi/(2c)");
    if (m < 8) throw InvalidInput("grim reaper needs m >= 8");
    const double xmax = half - delta;
    std::vector<Vec> pts(m + 1);
    for (int i = 0; i <= m; ++i) {
        const double x = xmax * static_cast<double>(2 * i - m) / static_cast<double>(m);
        pts[i] = Vec(x, -std::log(std::cos(c * x)) / c, 0.0);
    }
    std::ostringstream spec;
    spec << "grim-reaper c=" << c << " delta=" << delta << " m=" << m;
    return Seed{make_state(make_polyline(std::move(pts), 2, false)), spec.str(), Vec(0.0, c, 0.0)};
}

/// Grim reaper with every vertex pushed along its discrete unit normal by
/// amplitude * exp(-(x / width)^2). Endpoints are left on the exact profile.
inline Seed perturbed_grim_reaper(double c, double delta, int m, double amplitude, double width = 0.3) {
    Seed seed = grim_reaper(c, delta, m);
    if (!(width > 0.0)) throw InvalidInput("bump width must be positive");
    const auto tangent = vertex_frames(seed.state);
    auto pts = seed.state.manifold.points;
    for (int i = 1; i < m; ++i) {
        const Vec normal(-tangent[i].y(), tangent[i].x(), 0.0);
        const double x = pts[i].x() / width;
        pts[i] += amplitude * std::exp(-x * x) * normal;
    }
    seed.state = make_state(with_points(seed.state.manifold, std::move(pts)));
    std::ostringstream spec;
    spec << seed.spec << " bump=" << amplitude << " width=" << width;
    seed.spec = spec.str();
    return seed;
}

/// Profile u(r) of the rotationally symmetric translator graph over R^n moving
/// with unit speed along the last axis:
///   u'' = (1 + u'^2)(1 - (n - 1) u'/r),  u(0) = u'(0) = 0.
/// The series u = r^2/(2n) + O(r^4) covers [0, r_series]; beyond it a classical
/// fourth-order Runge-Kutta march with step at most r_max / 1e4 lands exactly
/// on every requested radius.
struct BowlProfile {
    std::vector<double> radius;
    std::vector<double> height;
    std::vector<double> slope;
};

namespace detail {

struct BowlSeries {
    int n;
    // u = r^2/(2n) + c4 r^4, u' = r/n + 4 c4 r^3; c4 from matching the r^2 term of the ODE.
    double c4() const {
        const double nn = n;
        return 1.0 / (4.0 * nn * nn * nn * (nn + 2.0));
    }
    double u(double r) const { return r * r / (2.0 * n) + c4() * r * r * r * r; }
    double du(double r) const { return r / n + 4.0 * c4() * r * r * r; }
};

} // namespace detail

inline BowlProfile bowl_profile(const std::vector<double>& radii, double r_max, int n = 2) {
    if (!(r_max > 0.0)) throw InvalidInput("bowl needs r_max > 0");
    if (n < 1) throw InvalidInput("bowl needs n >= 1");
    constexpr double r_series = 1e-3;
    const double max_step = r_max / 1e4;
    const detail::BowlSeries series{n};

    auto rhs = [n](double r, double p) { return (1.0 + p * p) * (1.0 - (n - 1) * p / r); };

    BowlProfile out;
    double r = r_series;
    double u = series.u(r_series);
    double p = series.du(r_series);
    double prev = -1.0;
    for (double target : radii) {
        if (!(target >= 0.0) || target <= prev) throw InvalidInput("bowl radii must be increasing and >= 0");
        prev = target;
        if (target <= r_series) {
            out.radius.push_back(target);
            out.height.push_back(series.u(target));
            out.slope.push_back(series.du(target));
            continue;
        }
        const double span = target - r;
        const int steps = static_cast<int>(std::ceil(span / max_step));
        const double h = span / steps;
        for (int k = 0; k < steps; ++k) {
            const double r0 = r + k * h;
            const double k1u = p, k1p = rhs(r0, p);
            const double k2u = p + 0.5 * h * k1p, k2p = rhs(r0 + 0.5 * h, p + 0.5 * h * k1p);
            const double k3u = p + 0.5 * h * k2p, k3p = rhs(r0 + 0.5 * h, p + 0.5 * h * k2p);
            const double k4u = p + h * k3p, k4p = rhs(r0 + h, p + h * k3p);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            if (!std::isfinite(u) || !std::isfinite(p)) {
                throw NumericalFailure("bowl profile integration failed at r = " + std::to_string(r0 + h));
            }
        }
        r = target;
        out.radius.push_back(target);
        out.height.push_back(u);
        out.slope.push_back(p);
    }
    return out;
}

/// Bowl soliton in R^3 (V = (0,0,1)) as a disk mesh: a centre vertex, m rings at
/// radii r_max * j / m with `az` vertices each, fan triangles around the centre
/// and split quads between rings. Faces are oriented counter-clockwise seen from +z.
inline Seed bowl_soliton(double r_max, int m, int az) {
    if (!(r_max > 0.0)) throw InvalidInput("bowl needs rmax > 0");
    if (m < 16) throw InvalidInput("bowl needs m >= 16");
    if (az < 3) throw InvalidInput("bowl needs az >= 3");
    std::vector<double> radii(m);
    for (int j = 1; j <= m; ++j) radii[j - 1] = r_max * j / m;
    const auto prof = bowl_profile(radii, r_max, 2);

    std::vector<Vec> pts;
    pts.reserve(1 + m * az);
    pts.emplace_back(0.0, 0.0, 0.0);
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < az; ++k) {
            const double phi = 2.0 * std::numbers::pi * k / az;
            pts.emplace_back(radii[j] * std::cos(phi), radii[j] * std::sin(phi), prof.height[j]);
        }
    }
    auto ring = [az](int j, int k) { return 1 + j * az + (k % az); };
    std::vector<Face> faces;
    for (int k = 0; k < az; ++k) faces.push_back({0, ring(0, k), ring(0, k + 1)});
    for (int j = 0; j + 1 < m; ++j) {
        for (int k = 0; k < az; ++k) {
            faces.push_back({ring(j, k), ring(j + 1, k), ring(j + 1, k + 1)});
            faces.push_back({ring(j, k), ring(j + 1, k + 1), ring(j, k + 1)});
        }
    }
    std::ostringstream spec;
    spec << "bowl rmax=" << r_max << " m=" << m << " az=" << az;
    return Seed{make_state(make_trimesh(std::move(pts), std::move(faces))), spec.str(), Vec(0.0, 0.0, 1.0)};
}

/// Icosahedron refined `subdivisions` times by edge midpoints, every vertex
/// projected onto the sphere of the given radius. Outward-oriented faces.
inline Manifold icosphere(double radius, int subdivisions) {
    if (subdivisions < 0) throw InvalidInput("subdivision level must be >= 0");
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec> pts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    std::vector<Face> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };
    for (auto& p : pts) p.normalize();
    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::make_pair(std::min(a, b), std::max(a, b));
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            pts.push_back((0.5 * (pts[a] + pts[b])).normalized());
            const int idx = static_cast<int>(pts.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<Face> refined;
        refined.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            refined.push_back({f[0], ab, ca});
            refined.push_back({f[1], bc, ab});
            refined.push_back({f[2], ca, bc});
            refined.push_back({ab, bc, ca});
        }
        faces = std::move(refined);
    }
    for (auto& p : pts) p *= radius;
    return make_trimesh(std::move(pts), std::move(faces));
}

/// Regular m-gon inscribed in the circle of radius R about `center`.
inline Manifold regular_polygon(int m, double R = 1.0, const Vec& center = Vec::Zero(), double phase = 0.0) {
    if (m < 3) throw InvalidInput("polygon needs m >= 3");
    std::vector<Vec> pts(m);
    for (int i = 0; i < m; ++i) {
        const double th = 2.0 * std::numbers::pi * i / m + phase;
        pts[i] = center + Vec(R * std::cos(th), R * std::sin(th), 0.0);
    }
    return make_polyline(std::move(pts), 2, true);
}

/// Round sphere (n = 2, icosphere) or circle (n = 1, regular polygon with
/// `resolution` vertices) together with its exact radius law
/// R(t) = sqrt(R0^2 - 2 n t), singular at T = R0^2 / (2n).
struct ShrinkingSphere {
    Seed seed;
    double R0 = 1.0;
    int n = 1;

    double singular_time() const { return R0 * R0 / (2.0 * n); }
    double radius(double t) const { return std::sqrt(std::max(0.0, R0 * R0 - 2.0 * n * t)); }
    /// |A|^2 = n / R^2.
    double a_sq(double t) const {
        const double R = radius(t);
        return n / (R * R);
    }
};

inline ShrinkingSphere shrinking_sphere(double R0, int n, int resolution) {
    if (!(R0 > 0.0)) throw InvalidInput("sphere needs R0 > 0");
    std::ostringstream spec;
    spec << "sphere R0=" << R0 << " n=" << n << " res=" << resolution;
    if (n == 1) {
        if (resolution < 3) throw InvalidInput("circle needs res >= 3");
        return {Seed{make_state(regular_polygon(resolution, R0)), spec.str(), std::nullopt}, R0, 1};
    }
    if (n == 2) {
        if (resolution < 0 || resolution > 7) throw InvalidInput("icosphere needs 0 <= res <= 7");
        return {Seed{make_state(icosphere(R0, resolution)), spec.str(), std::nullopt}, R0, 2};
    }
    throw InvalidInput("sphere needs n = 1 or n = 2");
}

/// Limacon ((a + b cos t) cos t, (a + b cos t) sin t) for t uniform on [0, 2 pi):
/// a closed immersed curve with one inner loop when 0 < a < b.
inline Seed loop_curve(double a, double b, int m) {
    if (!(a > 0.0) || !(a < b)) throw InvalidInput("loop curve needs 0 < a < b");
    if (m < 8) throw InvalidInput("loop curve needs m >= 8");
    std::vector<Vec> pts(m);
    for (int i = 0; i < m; ++i) {
        const double th = 2.0 * std::numbers::pi * i / m;
        const double r = a + b * std::cos(th);
        pts[i] = Vec(r * std::cos(th), r * std::sin(th), 0.0);
    }
    std::ostringstream spec;
    spec << "loop a=" << a << " b=" << b << " m=" << m;
    return Seed{make_state(make_polyline(std::move(pts), 2, true)), spec.str(), std::nullopt};
}

struct TranslatorResidual {
    double max_residual = 0.0;
    double weighted_l2 = 0.0;
};

/// max_i |H_i - V^perp_i| and the measure-weighted RMS of the same quantity over `dom`.
inline TranslatorResidual translator_residual(const FlowState& s, const Vec& V, const Subdomain& dom) {
    dom.validate(s.manifold);
    const auto H = mean_curvature(s);
    const auto proj = project_field(s, V);
    TranslatorResidual r;
    double num = 0.0, den = 0.0;
    for (int i : dom.indices) {
        const double d = (H[i] - proj.normal[i]).norm();
        r.max_residual = std::max(r.max_residual, d);
        num += s.measure[i] * d * d;
        den += s.measure[i];
    }
    r.weighted_l2 = std::sqrt(num / den);
    return r;
}

inline TranslatorResidual translator_residual(const FlowState& s, const Vec& V) {
    return translator_residual(s, V, Subdomain::interior(s.manifold));
}

/// Parses `key=value` tokens after the shape name, e.g.
/// `grim-reaper c=1 delta=0.1 m=200`, `bowl rmax=3 m=64 az=64`,
/// `sphere R0=1 n=2 res=3`, `loop a=0.5 b=1 m=512`.
inline Seed make_from_spec(const std::string& spec) {
    std::istringstream in(spec);
    std::string name;
    if (!(in >> name)) throw InvalidInput("empty shape spec");
    std::map<std::string, double> kv;
    std::string tok;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidInput("bad token '" + tok + "' (expected key=value)");
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        try {
            std::size_t used = 0;
            const double v = std::stod(val, &used);
            if (used != val.size()) throw std::invalid_argument(val);
            kv[key] = v;
        } catch (const std::logic_error&) {
            throw InvalidInput("bad token '" + tok + "' (value is not a number)");
        }
    }
    auto take = [&](const std::string& key, std::optional<double> fallback = std::nullopt) {
        auto it = kv.find(key);
        if (it == kv.end()) {
            if (fallback) return *fallback;
            throw InvalidInput("missing key '" + key + "' in shape spec '" + name + "'");
        }
        const double v = it->second;
        kv.erase(it);
        return v;
    };
    auto as_int = [](double v, const std::string& key) {
        if (v != std::floor(v)) throw InvalidInput("bad token '" + key + "' (expected an integer)");
        return static_cast<int>(v);
    };

    Seed seed;
    if (name == "grim-reaper") {
        const double c = take("c", 1.0), delta = take("delta"), bump = take("bump", 0.0), width = take("width", 0.3);
        const int m = as_int(take("m"), "m");
        seed = bump != 0.0 ? perturbed_grim_reaper(c, delta, m, bump, width) : grim_reaper(c, delta, m);
    } else if (name == "bowl") {
        const double rmax = take("rmax");
        const int m = as_int(take("m"), "m");
        const int az = as_int(take("az"), "az");
        seed = bowl_soliton(rmax, m, az);
    } else if (name == "sphere") {
        const double R0 = take("R0", 1.0);
        const int n = as_int(take("n"), "n");
        const int res = as_int(take("res"), "res");
        seed = shrinking_sphere(R0, n, res).seed;
    } else if (name == "loop") {
        const double a = take("a"), b = take("b");
        const int m = as_int(take("m"), "m");
        seed = loop_curve(a, b, m);
    } else {
        throw InvalidInput("bad token '" + name + "' (unknown shape; expected grim-reaper, bowl, sphere or loop)");
    }
    if (!kv.empty()) throw InvalidInput("bad token '" + kv.begin()->first + "' (unknown key for " + name + ")");
    return seed;
}

} // namespace vflow
