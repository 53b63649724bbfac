#pragma once

// Explicit time integration of mean curvature flow dF/dt = H and of the
// V-flow dF/dt = H + V^T, which moves the same shapes with an extra tangential
// reparametrization.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vflow/errors.hpp"
#include "vflow/geom.hpp"

namespace vflow {

enum class FlowKind { MCF, VFlow };
enum class BoundaryMode { Freeze, Translate };
enum class Termination { ReachedEnd, BlowupDetected, NumericalFailure };

inline const char* to_string(FlowKind k) { return k == FlowKind::MCF ? "mcf" : "vflow"; }
inline const char* to_string(BoundaryMode b) { return b == BoundaryMode::Freeze ? "freeze" : "translate"; }
inline const char* to_string(Termination t) {
    switch (t) {
    case Termination::ReachedEnd: return "reached_t_end";
    case Termination::BlowupDetected: return "blowup_detected";
    case Termination::NumericalFailure: return "numerical_failure";
    }
    return "?";
}

struct FlowConfig {
    FlowKind kind = FlowKind::MCF;
    Vec V = Vec::Zero(); // ignored for MCF
    double dt_safety = 0.5;
    double t_end = 1.0;
    int snapshot_stride = 1;
    /// Stop once max |A|^2 exceeds this (curves), or once the shortest edge
    /// drops below 1e-3 of its initial length (meshes; the value is unused).
    std::optional<double> blowup_threshold;
    /// Open manifolds only: boundary vertices stay put, or move with V (VFlow
    /// around a declared translator).
    BoundaryMode boundary = BoundaryMode::Freeze;

    void validate(double t_start = 0.0) const {
        if (!(dt_safety > 0.0 && dt_safety <= 1.0)) throw InvalidInput("dt.safety must lie in (0, 1]");
        if (!(t_end > t_start)) throw InvalidInput("time.end must exceed the start time");
        if (snapshot_stride < 1) throw InvalidInput("snapshot.stride must be >= 1");
        if (blowup_threshold && !(*blowup_threshold > 0.0)) throw InvalidInput("blowup.threshold must be positive");
        if (!V.allFinite()) throw InvalidInput("flow.V must be finite");
        if (boundary == BoundaryMode::Translate && kind != FlowKind::VFlow) {
            throw InvalidInput("boundary.mode = translate requires flow.kind = vflow");
        }
    }
};

/// Rescaling applied to a trajectory after the fact (parabolic dilation or
/// Huisken-Sinestrari normalization): x -> scale (x - center),
/// t -> scale^2 (t - time_origin).
struct RescaleInfo {
    std::string kind;
    double scale = 1.0;
    Vec center = Vec::Zero();
    double time_origin = 0.0;
};

struct Snapshot {
    long step = 0;
    FlowState state;

    double t() const { return state.t; }
};

/// Recorded solution: snapshots in strictly increasing time over one shared connectivity.
struct Trajectory {
    std::vector<Snapshot> snapshots;
    FlowConfig config;
    Termination termination = Termination::ReachedEnd;
    std::vector<RescaleInfo> rescalings;

    std::size_t size() const { return snapshots.size(); }
    const FlowState& state(std::size_t k) const { return snapshots[k].state; }
    double time(std::size_t k) const { return snapshots[k].state.t; }
    double start_time() const { return snapshots.front().state.t; }
    double end_time() const { return snapshots.back().state.t; }

    void validate() const {
        if (snapshots.empty()) throw InvalidInput("trajectory has no snapshots");
        const auto& topo = snapshots.front().state.manifold.topology;
        for (std::size_t k = 0; k < snapshots.size(); ++k) {
            if (snapshots[k].state.manifold.topology != topo) {
                throw InvalidInput("trajectory snapshots do not share one connectivity");
            }
            if (k > 0 && !(time(k) > time(k - 1))) throw InvalidInput("snapshot times must increase strictly");
        }
    }
};

/// dt = dt_safety * h_min^2 / (2 n) with n the intrinsic dimension.
inline double stable_timestep(const FlowState& s, const FlowConfig& cfg) {
    if (!(cfg.dt_safety > 0.0 && cfg.dt_safety <= 1.0)) throw InvalidInput("dt.safety must lie in (0, 1]");
    const double h = min_edge_length(s.manifold);
    if (!(h > 0.0)) throw GeometryError("zero-length edge, no stable time step", 0);
    return cfg.dt_safety * h * h / (2.0 * s.manifold.intrinsic_dim());
}

/// Velocity H (+ V^T for the V-flow) at every vertex, with the boundary rule
/// applied. `H` is the mean curvature of `s`.
inline std::vector<Vec> flow_velocity(const FlowState& s, const FlowConfig& cfg, std::vector<Vec> H) {
    if (cfg.kind == FlowKind::VFlow) {
        const auto proj = project_field(s, cfg.V);
        for (std::size_t i = 0; i < H.size(); ++i) H[i] += proj.tangential[i];
    }
    const auto& topo = s.manifold.topo();
    if (!topo.closed()) {
        for (int i = 0; i < s.size(); ++i) {
            if (!topo.on_boundary(i)) continue;
            H[i] = cfg.boundary == BoundaryMode::Translate ? cfg.V : Vec::Zero();
        }
    }
    return H;
}

inline std::vector<Vec> flow_velocity(const FlowState& s, const FlowConfig& cfg) {
    return flow_velocity(s, cfg, mean_curvature(s));
}

namespace detail {

inline FlowState advance(const FlowState& s, const std::vector<Vec>& vel, double dt) {
    std::vector<Vec> next(vel.size());
    for (std::size_t i = 0; i < vel.size(); ++i) {
        next[i] = s.manifold.points[i] + dt * vel[i];
        if (!next[i].allFinite()) {
            throw NumericalFailure("non-finite position at vertex " + std::to_string(i) + ", t = " +
                                   std::to_string(s.t));
        }
    }
    return make_state(with_points(s.manifold, std::move(next)), s.t + dt);
}

} // namespace detail

/// One forward-Euler step. Throws NumericalFailure on non-finite positions and
/// GeometryError when the new positions are degenerate.
inline FlowState step(const FlowState& s, const FlowConfig& cfg, double dt) {
    return detail::advance(s, flow_velocity(s, cfg), dt);
}

/// Integrates from `initial` to cfg.t_end with the stable step recomputed every
/// step. Records the initial state, every snapshot_stride-th state and the
/// final state. Failures end the run early and are reported in `termination`.
inline Trajectory run(const FlowState& initial, const FlowConfig& cfg) {
    cfg.validate(initial.t);
    Trajectory traj;
    traj.config = cfg;
    traj.snapshots.push_back({0, initial});

    const bool curve = initial.manifold.kind() == Kind::Polyline;
    const double initial_h = min_edge_length(initial.manifold);
    FlowState state = initial;
    std::vector<Vec> H = mean_curvature(state);
    long steps = 0;
    bool recorded = true;

    auto blew_up = [&](const FlowState& s) {
        if (!cfg.blowup_threshold) return false;
        if (curve) {
            double a = 0.0;
            for (const auto& h : H) a = std::max(a, h.squaredNorm());
            return a > *cfg.blowup_threshold;
        }
        return min_edge_length(s.manifold) < 1e-3 * initial_h;
    };

    while (state.t < cfg.t_end) {
        double dt = stable_timestep(state, cfg);
        const bool last = state.t + dt >= cfg.t_end;
        if (last) dt = cfg.t_end - state.t;
        try {
            FlowState next = detail::advance(state, flow_velocity(state, cfg, std::move(H)), dt);
            if (last) next.t = cfg.t_end;
            state = std::move(next);
            ++steps;
            recorded = false;
            H = mean_curvature(state);
        } catch (const NumericalFailure&) {
            traj.termination = Termination::NumericalFailure;
            break;
        } catch (const GeometryError&) {
            traj.termination = Termination::BlowupDetected;
            break;
        }
        if (blew_up(state)) {
            traj.termination = Termination::BlowupDetected;
            break;
        }
        if (steps % cfg.snapshot_stride == 0) {
            traj.snapshots.push_back({steps, state});
            recorded = true;
        }
    }
    if (!recorded) traj.snapshots.push_back({steps, state});
    return traj;
}

} // namespace vflow
