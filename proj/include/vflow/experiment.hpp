#pragma once

// The Type-II pipeline: flow a seed towards its singularity, extract the
// essential blowup sequence, rescale at the finest resolved k, fit a
// translation velocity there and follow the rescaled state by the V-flow.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vflow/blowup.hpp"
#include "vflow/flow.hpp"
#include "vflow/functional.hpp"
#include "vflow/geom.hpp"
#include "vflow/io.hpp"
#include "vflow/soliton.hpp"

namespace vflow {

struct EternalParams {
    std::vector<int> k_list;     // empty: powers of two resolved by the run
    double window_radius = 1.0;  // fit/residual window around the origin, rescaled units
    double vflow_time = 0.05;    // length of the V-flow leg, rescaled units
    double eps = 1e-2;           // dissipation threshold for select_asymptotic_times
};

struct EternalResult {
    std::string stage;  // last stage entered
    bool no_singularity = false;
    Trajectory flow;
    std::optional<double> T;
    std::optional<ClassificationReport> classification;
    std::optional<BlowupSequence> sequence;
    std::optional<BlowupEntry> entry;
    std::optional<Trajectory> rescaled;
    std::vector<int> window;  // vertex indices within window_radius of the origin at s = 0
    std::optional<VelocityFit> fit;
    std::optional<TranslatorResidual> residual;
    std::optional<WindowIdentityReport> window_identity;
    std::vector<double> asymptotic_times;
    std::vector<std::pair<std::string, std::string>> rows;  // (stage.key, value)

    void put(const std::string& key, const std::string& value) { rows.emplace_back(stage + "," + key, value); }
    void put(const std::string& key, double value) { put(key, format_real(value)); }

    std::string csv() const {
        std::string out = "stage,key,value\n";
        for (const auto& [k, v] : rows) out += k + "," + v + "\n";
        return out;
    }
};

/// Powers of two with T - 1/k inside [t_first, t_last].
inline std::vector<int> resolved_k_ladder(const Trajectory& traj, double T) {
    std::vector<int> ks;
    for (int j = 0; j < 30; ++j) {
        const int k = 1 << j;
        const double cut = T - 1.0 / k;
        if (cut >= traj.start_time() && cut <= traj.end_time()) ks.push_back(k);
    }
    return ks;
}

/// Vertices within `radius` of the origin.
inline std::vector<int> ball_indices(const FlowState& s, double radius) {
    std::vector<int> idx;
    for (int i = 0; i < s.size(); ++i) {
        if (s.x(i).norm() <= radius) idx.push_back(i);
    }
    return idx;
}

/// Fills `res` stage by stage so a caller catching an exception can report
/// where the pipeline stopped. `cfg` is the MCF run towards the singularity.
inline void eternal_experiment(const FlowState& seed, const FlowConfig& cfg, const EternalParams& p, EternalResult& res) {
    res.stage = "flow";
    if (cfg.kind != FlowKind::MCF) throw InvalidInput("the eternal experiment starts from a mean curvature flow");
    res.flow = run(seed, cfg);
    res.put("termination", to_string(res.flow.termination));
    res.put("snapshots", std::to_string(res.flow.size()));
    res.put("t_last", res.flow.end_time());
    res.put("max_a_sq_last", max_second_fundamental_norm(res.flow.snapshots.back().state));

    res.stage = "estimate";
    try {
        res.T = estimate_blowup_time(res.flow);
    } catch (const CannotEstimate& e) {
        res.no_singularity = true;
        res.put("result", "no singularity");
        return;
    }
    res.put("T", *res.T);

    res.stage = "classify";
    res.classification = classify_singularity(res.flow, *res.T);
    res.put("sup", res.classification->sup);
    res.put("trend", res.classification->trend);
    res.put("early_median", res.classification->early_median);
    res.put("verdict", to_string(res.classification->verdict));

    res.stage = "sequence";
    const auto ks = p.k_list.empty() ? resolved_k_ladder(res.flow, *res.T) : p.k_list;
    res.sequence = essential_blowup_sequence(res.flow, *res.T, ks);
    for (const auto& w : res.sequence->warnings) res.put("warning", w);
    for (const auto& e : res.sequence->entries) {
        const std::string k = std::to_string(e.k);
        res.put("t_" + k, e.t_k);
        res.put("vertex_" + k, std::to_string(e.vertex));
        res.put("L_" + k, e.L_k);
        res.put("alpha_" + k, e.alpha_k);
        res.put("omega_" + k, e.omega_k);
    }
    if (res.sequence->entries.empty()) throw RangeError("no k resolved by the recorded span");
    if (res.classification->verdict == Verdict::TypeI) {
        double sup = 0.0;
        for (const auto& e : res.sequence->entries) sup = std::max(sup, e.omega_k);
        res.put("omega_sup", sup);
        res.put("result", "type-I: omega_k bounded, no rescaling");
        return;
    }

    res.stage = "rescale";
    res.entry = res.sequence->entries.back();
    res.rescaled = hs_rescale(res.flow, *res.entry);
    const FlowState& s0 = res.rescaled->state(snapshot_at(*res.rescaled, 0.0));
    res.put("k", std::to_string(res.entry->k));
    res.put("a_at_origin", std::sqrt(second_fundamental_norm(s0)[res.entry->vertex]));
    res.put("origin_offset", s0.x(res.entry->vertex).norm());

    res.stage = "fit";
    res.window = ball_indices(s0, p.window_radius);
    const auto dom = Subdomain::of(s0.manifold, res.window);
    res.fit = fit_translation_velocity(s0, dom);
    res.put("window_vertices", std::to_string(res.window.size()));
    res.put("V", format_vector(res.fit->V, s0.manifold.ambient_dim()));
    res.put("V_norm", res.fit->V.norm());
    res.put("degenerate", res.fit->degenerate ? "true" : "false");

    res.stage = "residual";
    res.residual = translator_residual(s0, res.fit->V, dom);
    res.put("max_residual", res.residual->max_residual);
    res.put("weighted_l2", res.residual->weighted_l2);

    res.stage = "vflow";
    FlowConfig vcfg;
    vcfg.kind = FlowKind::VFlow;
    vcfg.V = res.fit->V;
    vcfg.dt_safety = cfg.dt_safety;
    vcfg.t_end = p.vflow_time;
    FlowState start = make_state(s0.manifold, 0.0);
    const Trajectory vtraj = run(start, vcfg);
    res.put("termination", to_string(vtraj.termination));
    res.put("snapshots", std::to_string(vtraj.size()));

    res.stage = "window";
    res.window_identity = check_window_identity(vtraj, vcfg.V, dom, vtraj.start_time(), vtraj.end_time());
    res.asymptotic_times = select_asymptotic_times(vtraj, vcfg.V, dom, p.eps);
    res.put("phi_drop", res.window_identity->phi_drop);
    res.put("integral", res.window_identity->integral);
    res.put("residual", res.window_identity->residual);
    res.put("asymptotic_times", std::to_string(res.asymptotic_times.size()));
    res.stage = "done";
}

} // namespace vflow
