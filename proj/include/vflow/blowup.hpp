#pragma once

// Rescaling machinery for recorded curve trajectories near a singular time:
// parabolic dilation, Type-I/II classification, the essential blowup
// sequence of Huisken-Sinestrari and the rescaled flows built from it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "vflow/errors.hpp"
#include "vflow/flow.hpp"
#include "vflow/geom.hpp"

namespace vflow {

/// No curvature blowup to extrapolate from.
class CannotEstimate : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

struct DilationParams {
    Vec x0 = Vec::Zero();
    double T = 0.0;
    double lambda = 1.0;
};

namespace detail {

inline Trajectory rescaled_copy(const Trajectory& traj, const std::vector<std::size_t>& keep, double scale,
                                const Vec& center, double time_origin, const std::string& kind) {
    Trajectory out;
    out.config = traj.config;
    out.config.V = traj.config.V / scale;
    out.termination = traj.termination;
    out.rescalings = traj.rescalings;
    out.rescalings.push_back({kind, scale, center, time_origin});
    const double s2 = scale * scale;
    for (std::size_t k : keep) {
        const FlowState& st = traj.state(k);
        std::vector<Vec> pts(st.size());
        for (int i = 0; i < st.size(); ++i) pts[i] = scale * (st.x(i) - center);
        out.snapshots.push_back({traj.snapshots[k].step,
                                 make_state(with_points(st.manifold, std::move(pts)), s2 * (st.t - time_origin))});
    }
    if (!out.snapshots.empty()) out.config.t_end = out.end_time();
    return out;
}

inline void require_curve(const Trajectory& traj) {
    if (traj.size() == 0) throw InvalidInput("trajectory has no snapshots");
    if (traj.state(0).manifold.kind() != Kind::Polyline) {
        throw InvalidInput("|A|^2 is only available for polylines; mesh trajectories are unsupported");
    }
}

/// max |A|^2 per snapshot.
inline std::vector<double> max_a_sq(const Trajectory& traj) {
    std::vector<double> out(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) out[k] = max_second_fundamental_norm(traj.state(k));
    return out;
}

/// Least-squares slope and intercept of y over x (centered sums).
inline std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    return {slope, my - slope * mx};
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace detail

/// Positions lambda (x - x0) at rescaled time s = lambda^2 (t - T), for every
/// snapshot recorded before T.
inline Trajectory parabolic_dilation(const Trajectory& traj, const DilationParams& p) {
    if (!(p.lambda > 0.0)) throw InvalidInput("dilation factor must be positive");
    if (traj.size() == 0) throw InvalidInput("trajectory has no snapshots");
    if (!(p.T > traj.start_time())) throw RangeError("singular time precedes the recorded span");
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.time(k) < p.T) keep.push_back(k);
    }
    if (keep.empty()) throw RangeError("no snapshot before the singular time");
    return detail::rescaled_copy(traj, keep, p.lambda, p.x0, p.T, "parabolic_dilation");
}

/// Extrapolates 1/max|A|^2 linearly to zero over the last 20% of snapshots
/// (at least three).
inline double estimate_blowup_time(const Trajectory& traj) {
    detail::require_curve(traj);
    const std::size_t n = traj.size();
    const std::size_t tail = std::max<std::size_t>(3, (n + 4) / 5);
    if (n < tail) throw CannotEstimate("no singularity: too few snapshots to estimate a blowup time");
    std::vector<double> t, inv;
    double first = 0.0, prev = 0.0;
    for (std::size_t k = n - tail; k < n; ++k) {
        const double a = max_second_fundamental_norm(traj.state(k));
        if (k == n - tail) {
            first = a;
        } else if (!(a > prev)) {
            throw CannotEstimate("no singularity: max|A|^2 is not increasing over the trajectory tail");
        }
        prev = a;
        t.push_back(traj.time(k));
        inv.push_back(1.0 / a);
    }
    if (!(prev >= 1.1 * first)) throw CannotEstimate("no singularity: max|A|^2 stays bounded over the trajectory tail");
    const auto [slope, intercept] = detail::linear_fit(t, inv);
    const double T = -intercept / slope;
    if (!(slope < 0.0) || !std::isfinite(T)) throw CannotEstimate("no singularity: 1/max|A|^2 does not decrease");
    return T;
}

enum class Verdict { TypeI, TypeII, Unresolved };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::TypeI: return "type-I";
    case Verdict::TypeII: return "type-II";
    case Verdict::Unresolved: return "unresolved";
    }
    return "?";
}

struct ClassificationReport {
    std::vector<double> t;
    std::vector<double> r; // (T - t) max|A|^2
    double sup = 0.0;
    double trend = 0.0;        // slope of r over the last third of the resolved time span
    double early_median = 0.0; // median of r over the first quarter
    Verdict verdict = Verdict::Unresolved;
};

/// Average step size around snapshot k, from the recorded step counters.
inline double local_step(const Trajectory& traj, std::size_t k) {
    if (traj.size() < 2) return 0.0;
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k == 0 ? 1 : k;
    const long steps = traj.snapshots[b].step - traj.snapshots[a].step;
    return (traj.time(b) - traj.time(a)) / static_cast<double>(std::max(1L, steps));
}

/// A snapshot is resolved while T - t is at least 20 local time steps.
inline ClassificationReport classify_singularity(const Trajectory& traj, double T) {
    detail::require_curve(traj);
    if (!(T > traj.start_time())) throw RangeError("singular time precedes the recorded span");
    const auto a = detail::max_a_sq(traj);
    const double peak = *std::max_element(a.begin(), a.end());
    if (!(peak >= 10.0 * a.front())) {
        throw InvalidInput("no singularity: max|A|^2 stays bounded along the trajectory");
    }

    ClassificationReport rep;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double t = traj.time(k);
        if (!(t < T)) break;
        if (T - t < 20.0 * local_step(traj, k)) break;
        rep.t.push_back(t);
        rep.r.push_back((T - t) * a[k]);
    }
    if (rep.t.size() < 4) return rep;
    rep.sup = *std::max_element(rep.r.begin(), rep.r.end());

    const double t0 = rep.t.front();
    const double span = rep.t.back() - t0;
    std::vector<double> early, lt, lr;
    for (std::size_t k = 0; k < rep.t.size(); ++k) {
        if (rep.t[k] <= t0 + 0.25 * span) early.push_back(rep.r[k]);
        if (rep.t[k] >= t0 + span * 2.0 / 3.0) {
            lt.push_back(rep.t[k]);
            lr.push_back(rep.r[k]);
        }
    }
    rep.early_median = detail::median(early);
    if (lt.size() >= 2) rep.trend = detail::linear_fit(lt, lr).first;

    if (rep.sup <= 2.0 && rep.trend <= 0.1) {
        rep.verdict = Verdict::TypeI;
    } else if (rep.sup >= 5.0 * rep.early_median && rep.trend > 0.0) {
        rep.verdict = Verdict::TypeII;
    }
    return rep;
}

struct BlowupEntry {
    int k = 0;
    double t_k = 0.0;
    std::size_t snapshot = 0;
    int vertex = 0;
    double L_k = 0.0;
    double alpha_k = 0.0;
    double omega_k = 0.0;
};

struct BlowupSequence {
    double T = 0.0;
    std::vector<BlowupEntry> entries;
    std::vector<std::string> warnings;
};

/// For each k, the maximizer of |A|^2 (T - 1/k - t) over recorded snapshots with
/// t <= T - 1/k and all vertices. Ties go to the earliest snapshot, then the
/// lowest vertex index. Values of k whose cut-off precedes the first snapshot
/// are skipped with a warning.
inline BlowupSequence essential_blowup_sequence(const Trajectory& traj, double T, const std::vector<int>& k_list) {
    detail::require_curve(traj);
    BlowupSequence seq;
    seq.T = T;
    std::vector<std::vector<double>> a(traj.size());
    for (int k : k_list) {
        if (k <= 0) throw InvalidInput("k must be positive");
        const double cut = T - 1.0 / k;
        if (cut < traj.start_time()) {
            seq.warnings.push_back("k = " + std::to_string(k) + " skipped: T - 1/k precedes the first snapshot");
            continue;
        }
        BlowupEntry best;
        double best_val = -1.0;
        for (std::size_t j = 0; j < traj.size() && traj.time(j) <= cut; ++j) {
            if (a[j].empty()) a[j] = second_fundamental_norm(traj.state(j));
            const double gap = cut - traj.time(j);
            for (std::size_t i = 0; i < a[j].size(); ++i) {
                const double val = a[j][i] * gap;
                if (val > best_val) {
                    best_val = val;
                    best.snapshot = j;
                    best.vertex = static_cast<int>(i);
                }
            }
        }
        best.k = k;
        best.t_k = traj.time(best.snapshot);
        best.L_k = std::sqrt(a[best.snapshot][best.vertex]);
        if (!(best.L_k > 0.0)) throw InvalidInput("selected vertex has zero curvature");
        best.alpha_k = -(best.L_k * best.L_k) * best.t_k;
        best.omega_k = (best.L_k * best.L_k) * (T - best.t_k - 1.0 / k);
        seq.entries.push_back(best);
    }
    return seq;
}

/// Rescaled flow L_k (x - x_k) at s = L_k^2 (t - t_k) over s in [alpha_k, omega_k].
inline Trajectory hs_rescale(const Trajectory& traj, const BlowupEntry& e) {
    detail::require_curve(traj);
    if (e.snapshot >= traj.size() || e.vertex < 0 || e.vertex >= traj.state(0).size()) {
        throw InvalidInput("blowup entry does not belong to this trajectory");
    }
    if (!(e.L_k > 0.0)) throw InvalidInput("blowup entry needs L_k > 0");
    const double L2 = e.L_k * e.L_k;
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double s = L2 * (traj.time(k) - e.t_k);
        if (s >= e.alpha_k && s <= e.omega_k) keep.push_back(k);
    }
    if (keep.empty()) throw RangeError("rescaling window does not intersect the recorded span");
    const Vec center = traj.state(e.snapshot).x(e.vertex);
    return detail::rescaled_copy(traj, keep, e.L_k, center, e.t_k, "hs_rescale");
}

/// Index of the snapshot at time exactly s, or throws RangeError.
inline std::size_t snapshot_at(const Trajectory& traj, double s) {
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.time(k) == s) return k;
    }
    throw RangeError("no snapshot at the requested time");
}

struct VelocityFit {
    Vec V = Vec::Zero();
    bool degenerate = false;
    double objective = 0.0; // sum w |H - V^perp|^2 at the minimizer
};

/// Constant V minimizing sum_dom w |H - V^perp|^2. The normal equations are
/// (sum w P) V = sum w P H with P the projection onto the normal space; a
/// rank-deficient system yields the minimum-norm solution and sets the flag.
inline VelocityFit fit_translation_velocity(const FlowState& s, const Subdomain& dom) {
    dom.validate(s.manifold);
    const int d = s.manifold.ambient_dim();
    const auto H = mean_curvature(s);
    const auto frame = vertex_frames(s);
    const bool curve = s.manifold.kind() == Kind::Polyline;
    Eigen::Matrix3d N = Eigen::Matrix3d::Zero();
    Vec b = Vec::Zero();
    for (int i : dom.indices) {
        const Vec& f = frame[i];
        const Eigen::Matrix3d P =
            curve ? Eigen::Matrix3d(Eigen::Matrix3d::Identity() - f * f.transpose()) : Eigen::Matrix3d(f * f.transpose());
        N += s.measure[i] * P;
        b += s.measure[i] * (P * H[i]);
    }
    const Eigen::MatrixXd Nd = N.topLeftCorner(d, d);
    const Eigen::VectorXd bd = b.head(d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Nd);
    const auto& lam = eig.eigenvalues();
    const double cutoff = 1e-10 * std::max(lam.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    Eigen::VectorXd sol = Eigen::VectorXd::Zero(d);
    VelocityFit fit;
    for (int j = 0; j < d; ++j) {
        if (lam(j) <= cutoff) {
            fit.degenerate = true;
            continue;
        }
        const Eigen::VectorXd q = eig.eigenvectors().col(j);
        sol += (q.dot(bd) / lam(j)) * q;
    }
    fit.V.head(d) = sol;
    const auto proj = project_field(s, fit.V);
    for (int i : dom.indices) fit.objective += s.measure[i] * (H[i] - proj.normal[i]).squaredNorm();
    return fit;
}

} // namespace vflow
