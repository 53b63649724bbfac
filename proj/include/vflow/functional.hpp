#pragma once

// The weighted functional Phi_V = sum_i w_i exp(<x_i - tV, V>) over a material
// vertex set, its dissipation sum_i w_i |H_i - V^perp_i|^2 exp(...), and the
// numerical checks of the identities that tie them together along the V-flow.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vflow/errors.hpp"
#include "vflow/flow.hpp"
#include "vflow/geom.hpp"

namespace vflow {

/// Largest |<x - tV, V>| accepted before exp() is considered meaningless.
inline constexpr double kMaxExponent = 700.0;

/// exp(<x - tV, V>), rejecting exponents beyond kMaxExponent.
inline double translator_weight(const Vec& x, double t, const Vec& V, int vertex) {
    const double e = (x - t * V).dot(V);
    if (!(std::abs(e) <= kMaxExponent)) throw OverflowError("weight exponent out of range", vertex);
    return std::exp(e);
}

inline double phi(const FlowState& s, const Vec& V, const Subdomain& dom) {
    dom.validate(s.manifold);
    double sum = 0.0;
    for (int i : dom.indices) sum += s.measure[i] * translator_weight(s.x(i), s.t, V, i);
    return sum;
}

/// Per-vertex |H_i - V^perp_i|^2.
inline std::vector<double> soliton_defect(const FlowState& s, const Vec& V) {
    const auto H = mean_curvature(s);
    const auto proj = project_field(s, V);
    std::vector<double> d(H.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (H[i] - proj.normal[i]).squaredNorm();
    return d;
}

inline double dissipation(const FlowState& s, const Vec& V, const Subdomain& dom) {
    dom.validate(s.manifold);
    const auto defect = soliton_defect(s, V);
    double sum = 0.0;
    for (int i : dom.indices) sum += s.measure[i] * defect[i] * translator_weight(s.x(i), s.t, V, i);
    return sum;
}

struct MonotonicitySample {
    double t = 0.0;
    double phi = 0.0;
    double dissipation = 0.0;
};

struct FdResidual {
    double t_mid = 0.0;
    double residual = 0.0;
};

struct MonotonicityReport {
    std::vector<MonotonicitySample> samples;
    std::vector<FdResidual> fd_residuals; // one per consecutive snapshot pair
    double max_residual = 0.0;
    std::optional<double> convergence_order;
};

/// Observed order p from residuals at spacing h and h / refinement.
inline double convergence_order(double coarse, double fine, double refinement = 2.0) {
    return std::log(coarse / fine) / std::log(refinement);
}

namespace detail {

inline bool same_vector(const Vec& a, const Vec& b) { return (a - b).cwiseAbs().maxCoeff() == 0.0; }

inline bool covers_all(const Subdomain& dom, const Manifold& m) {
    return static_cast<int>(dom.indices.size()) == m.size();
}

/// The local identities hold along the V-flow with the same V. On a closed
/// manifold with the full vertex set Phi is parametrization independent, so
/// any flow of the same shapes qualifies.
inline void require_vflow(const Trajectory& traj, const Vec& V, const Subdomain& dom) {
    const auto& m = traj.state(0).manifold;
    const bool global = m.closed() && covers_all(dom, m);
    const bool vflow = traj.config.kind == FlowKind::VFlow && same_vector(traj.config.V, V);
    if (!vflow && !global) {
        throw InvalidInput("check requires a V-flow trajectory with the same V (got flow.kind = " +
                           std::string(to_string(traj.config.kind)) + ")");
    }
    if (!m.closed()) {
        for (int i : dom.indices) {
            if (m.topo().on_boundary(i)) throw InvalidInput("subdomain of an open manifold must exclude the boundary");
        }
    }
}

} // namespace detail

/// Phi and D at every snapshot.
inline std::vector<MonotonicitySample> sample_functional(const Trajectory& traj, const Vec& V, const Subdomain& dom) {
    std::vector<MonotonicitySample> out;
    out.reserve(traj.size());
    for (const auto& snap : traj.snapshots) {
        out.push_back({snap.t(), phi(snap.state, V, dom), dissipation(snap.state, V, dom)});
    }
    return out;
}

/// Forward difference of Phi between consecutive snapshots against the
/// trapezoid average of D; the residual is |dPhi/dt + D|.
inline MonotonicityReport check_monotonicity(const Trajectory& traj, const Vec& V, const Subdomain& dom) {
    if (traj.size() < 2) throw InvalidInput("monotonicity check needs at least 2 snapshots");
    detail::require_vflow(traj, V, dom);
    MonotonicityReport rep;
    rep.samples = sample_functional(traj, V, dom);
    for (std::size_t k = 0; k + 1 < rep.samples.size(); ++k) {
        const auto& a = rep.samples[k];
        const auto& b = rep.samples[k + 1];
        const double rate = (b.phi - a.phi) / (b.t - a.t);
        const double r = std::abs(rate + 0.5 * (a.dissipation + b.dissipation));
        rep.fd_residuals.push_back({0.5 * (a.t + b.t), r});
        rep.max_residual = std::max(rep.max_residual, r);
    }
    return rep;
}

struct MeasureEvolutionPair {
    double t_mid = 0.0;
    double max_residual = 0.0;
    double spread = 0.0; // max - min of the vertex residuals
};

struct MeasureEvolutionReport {
    std::vector<MeasureEvolutionPair> pairs;
    double max_residual = 0.0;
    double max_spread = 0.0;
};

/// Per vertex, q_i = w_i exp(<x_i - tV, V>) should decay at rate
/// |H_i - V^perp_i|^2 q_i. The residual is reported per unit measure:
///   | (q_i(t1) - q_i(t0)) / dt + avg(|H - V^perp|^2 q) | / avg(q).
inline MeasureEvolutionReport check_measure_evolution(const Trajectory& traj, const Vec& V, const Subdomain& dom) {
    if (traj.config.kind != FlowKind::VFlow) {
        throw InvalidInput("pointwise measure identity holds only along the V-flow (got flow.kind = mcf)");
    }
    if (!detail::same_vector(traj.config.V, V)) throw InvalidInput("V does not match the trajectory's flow.V");
    if (traj.size() < 2) throw InvalidInput("measure check needs at least 2 snapshots");
    dom.validate(traj.state(0).manifold);

    auto sample = [&](const FlowState& s, std::vector<double>& q, std::vector<double>& loss) {
        const auto defect = soliton_defect(s, V);
        q.resize(dom.indices.size());
        loss.resize(dom.indices.size());
        for (std::size_t j = 0; j < dom.indices.size(); ++j) {
            const int i = dom.indices[j];
            q[j] = s.measure[i] * translator_weight(s.x(i), s.t, V, i);
            loss[j] = defect[i] * q[j];
        }
    };

    MeasureEvolutionReport rep;
    std::vector<double> q0, l0, q1, l1;
    sample(traj.state(0), q0, l0);
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        sample(traj.state(k + 1), q1, l1);
        const double dt = traj.time(k + 1) - traj.time(k);
        MeasureEvolutionPair pair{0.5 * (traj.time(k) + traj.time(k + 1)), 0.0, 0.0};
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < q0.size(); ++j) {
            const double r = std::abs((q1[j] - q0[j]) / dt + 0.5 * (l0[j] + l1[j])) / (0.5 * (q0[j] + q1[j]));
            pair.max_residual = std::max(pair.max_residual, r);
            lo = std::min(lo, r);
        }
        pair.spread = pair.max_residual - lo;
        rep.max_residual = std::max(rep.max_residual, pair.max_residual);
        rep.max_spread = std::max(rep.max_spread, pair.spread);
        rep.pairs.push_back(pair);
        std::swap(q0, q1);
        std::swap(l0, l1);
    }
    return rep;
}

inline MeasureEvolutionReport check_measure_evolution(const Trajectory& traj, const Vec& V) {
    return check_measure_evolution(traj, V, Subdomain::interior(traj.state(0).manifold));
}

/// |sum_i w_i (<H_i, V> + |V^T_i|^2) e_i| / Phi on a closed manifold; the
/// continuous integrand is the Laplacian of exp(<x - tV, V>), so it integrates to 0.
inline double divergence_identity_residual(const FlowState& s, const Vec& V) {
    if (!s.manifold.closed()) throw InvalidInput("divergence identity requires a closed manifold");
    const auto H = mean_curvature(s);
    const auto proj = project_field(s, V);
    double sum = 0.0, total = 0.0;
    for (int i = 0; i < s.size(); ++i) {
        const double e = translator_weight(s.x(i), s.t, V, i);
        sum += s.measure[i] * (H[i].dot(V) + proj.tangential[i].squaredNorm()) * e;
        total += s.measure[i] * e;
    }
    return std::abs(sum) / total;
}

/// Total divergence of V^T over a closed manifold. Polylines: the telescoping
/// sum of jumps of <V, u> between consecutive edges (zero up to rounding).
/// Meshes: sum over faces of the boundary flux of the piecewise-linear
/// interpolant of the vertex values V^T, i.e. sum_f int_f div(V^T).
inline double closed_divergence_check(const FlowState& s, const Vec& V) {
    const Manifold& m = s.manifold;
    if (!m.closed()) throw InvalidInput("divergence check requires a closed manifold");
    double sum = 0.0;
    if (m.kind() == Kind::Polyline) {
        const auto& edges = m.topo().edges();
        const int ne = static_cast<int>(edges.size());
        std::vector<double> along(ne);
        for (int e = 0; e < ne; ++e) {
            const Vec d = m.points[edges[e][1]] - m.points[edges[e][0]];
            const double len = d.norm();
            if (!(len > 0.0)) throw GeometryError("degenerate edge", e);
            along[e] = V.dot(d / len);
        }
        for (int i = 0; i < ne; ++i) sum += along[i] - along[(i - 1 + ne) % ne];
        return sum;
    }
    const auto proj = project_field(s, V);
    for (const auto& f : m.topo().faces()) {
        const Vec n = detail::face_cross(m, f).normalized();
        for (int c = 0; c < 3; ++c) {
            const int a = f[c], b = f[(c + 1) % 3];
            // (b - a) x n has length |b - a| and points out of the face
            const Vec conormal = (m.points[b] - m.points[a]).cross(n);
            sum += 0.5 * (proj.tangential[a] + proj.tangential[b]).dot(conormal);
        }
    }
    return sum;
}

struct ScalingCheck {
    double lhs = 0.0; // Phi_V of the dilated state at s = lambda^2 (t - t0)
    double rhs = 0.0; // lambda^n Phi_{lambda V} of the shifted state at t - t0
    double residual = 0.0;
};

/// Dilates x -> lambda (x - x0), t -> lambda^2 (t - t0) and compares
/// Phi_V(dilated) with lambda^n Phi_{lambda V}(x - x0, t - t0). Both sides
/// recompute their measures from positions.
inline ScalingCheck check_scaling(const FlowState& s, const Vec& V, double lambda, const Vec& x0, double t0,
                                  const Subdomain& dom) {
    if (!(lambda > 0.0)) throw InvalidInput("scaling factor must be positive");
    dom.validate(s.manifold);
    std::vector<Vec> dilated(s.size()), shifted(s.size());
    for (int i = 0; i < s.size(); ++i) {
        shifted[i] = s.x(i) - x0;
        dilated[i] = lambda * (s.x(i) - x0);
    }
    const FlowState big = make_state(with_points(s.manifold, std::move(dilated)), lambda * lambda * (s.t - t0));
    const FlowState moved = make_state(with_points(s.manifold, std::move(shifted)), s.t - t0);
    ScalingCheck c;
    c.lhs = phi(big, V, dom);
    c.rhs = std::pow(lambda, s.manifold.intrinsic_dim()) * phi(moved, lambda * V, dom);
    c.residual = std::abs(c.lhs - c.rhs) / std::abs(c.rhs);
    return c;
}

struct WindowIdentityReport {
    double s1 = 0.0;
    double s2 = 0.0;
    double phi_drop = 0.0;
    double integral = 0.0;
    double residual = 0.0;
};

/// Phi(s1) - Phi(s2) against the trapezoid integral of D over [s1, s2]. Values
/// at s1, s2 between snapshots are linearly interpolated.
inline WindowIdentityReport window_identity(const std::vector<MonotonicitySample>& samples, double s1, double s2) {
    if (samples.empty()) throw InvalidInput("no samples");
    if (!(s1 <= s2)) throw RangeError("window needs s1 <= s2");
    if (s1 < samples.front().t || s2 > samples.back().t) {
        throw RangeError("window [" + std::to_string(s1) + ", " + std::to_string(s2) + "] outside the trajectory span");
    }
    auto at = [&](double s) {
        auto it = std::lower_bound(samples.begin(), samples.end(), s,
                                   [](const MonotonicitySample& a, double v) { return a.t < v; });
        if (it->t == s) return *it;
        const auto& b = *it;
        const auto& a = *(it - 1);
        const double u = (s - a.t) / (b.t - a.t);
        return MonotonicitySample{s, a.phi + u * (b.phi - a.phi), a.dissipation + u * (b.dissipation - a.dissipation)};
    };
    WindowIdentityReport rep{s1, s2, 0.0, 0.0, 0.0};
    const auto first = at(s1);
    const auto last = at(s2);
    rep.phi_drop = first.phi - last.phi;
    auto prev = first;
    for (const auto& smp : samples) {
        if (smp.t <= s1 || smp.t >= s2) continue;
        rep.integral += 0.5 * (smp.t - prev.t) * (prev.dissipation + smp.dissipation);
        prev = smp;
    }
    if (s2 > s1) rep.integral += 0.5 * (last.t - prev.t) * (prev.dissipation + last.dissipation);
    rep.residual = std::abs(rep.phi_drop - rep.integral);
    return rep;
}

inline WindowIdentityReport check_window_identity(const Trajectory& traj, const Vec& V, const Subdomain& dom,
                                                  double s1, double s2) {
    detail::require_vflow(traj, V, dom);
    if (!(s1 <= s2)) throw RangeError("window needs s1 <= s2");
    if (s1 < traj.start_time() || s2 > traj.end_time()) {
        throw RangeError("window [" + std::to_string(s1) + ", " + std::to_string(s2) + "] outside the trajectory span");
    }
    return window_identity(sample_functional(traj, V, dom), s1, s2);
}

/// Snapshot times where the dissipation over `dom` falls below eps.
inline std::vector<double> select_asymptotic_times(const Trajectory& traj, const Vec& V, const Subdomain& dom,
                                                   double eps) {
    if (!(eps >= 0.0)) throw InvalidInput("eps must be non-negative");
    detail::require_vflow(traj, V, dom);
    std::vector<double> out;
    for (const auto& snap : traj.snapshots) {
        if (dissipation(snap.state, V, dom) < eps) out.push_back(snap.t());
    }
    return out;
}

} // namespace vflow
