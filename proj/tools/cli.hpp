#pragma once

// Command-line front end. Exit codes: 0 success, 1 invalid input or config,
// 2 numerical failure, 3 a verification residual above tolerance.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vflow/blowup.hpp"
#include "vflow/experiment.hpp"
#include "vflow/flow.hpp"
#include "vflow/functional.hpp"
#include "vflow/io.hpp"
#include "vflow/soliton.hpp"

namespace vflow::cli {

inline constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kInvalid = 1, kNumerical = 2, kTolerance = 3 };

/// FNV-1a over the file bytes; identifies inputs in the manifest.
inline std::string content_hash(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

class Manifest {
public:
    explicit Manifest(std::string command) { add("command", std::move(command)); }

    void add(const std::string& key, const std::string& value) { lines_.push_back(key + " = " + value); }
    void input(const fs::path& path) {
        if (fs::is_regular_file(path)) add("input." + path.filename().string(), content_hash(read_text_file(path)));
    }
    void config(const std::string& echo) {
        std::istringstream in(echo);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line[0] != '#') lines_.push_back("config." + line);
        }
    }
    void file(const std::string& name) { files_.push_back(name); }

    /// Writes manifest.txt into `dir`, after checking every listed file exists.
    void write(const fs::path& dir) const {
        std::string text = std::string("tool = vflow\nversion = ") + kVersion + "\n";
        for (const auto& l : lines_) text += l + "\n";
        for (const auto& f : files_) {
            if (!fs::exists(dir / f)) throw InvalidInput("manifest lists missing file " + f);
            text += "file = " + f + "\n";
        }
        write_text_file(dir / "manifest.txt", text);
    }

private:
    std::vector<std::string> lines_;
    std::vector<std::string> files_;
};

inline Subdomain parse_domain(const std::string& spec, const Manifold& m) {
    if (spec == "all") return Subdomain::all(m);
    if (spec == "interior") return Subdomain::interior(m);
    if (spec.rfind("indices:", 0) == 0) {
        std::vector<int> idx;
        for (const auto& tok : split(spec.substr(8), ',')) idx.push_back(static_cast<int>(parse_int(tok, "domain index")));
        return Subdomain::of(m, std::move(idx));
    }
    throw InvalidInput("bad --domain '" + spec + "' (all | interior | indices:i,j,...)");
}

inline std::map<std::string, double> default_tolerances() {
    return {{"monotonicity", 1e-2}, {"measure", 1e-2},   {"divergence", 1e-2},
            {"closed_divergence", 1e-14}, {"scaling", 1e-10}, {"window", 1e-2}};
}

inline std::map<std::string, double> parse_tolerances(const std::string& spec) {
    auto tol = default_tolerances();
    if (spec.empty()) return tol;
    for (const auto& item : split(spec, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw InvalidInput("bad --tol entry '" + item + "' (expected name=value)");
        const std::string name = trim(item.substr(0, eq));
        if (!tol.count(name)) throw InvalidInput("unknown tolerance '" + name + "'");
        tol[name] = parse_real(item.substr(eq + 1), "tolerance " + name);
    }
    return tol;
}

/// `key=value` positional arguments of the blowup command.
inline std::map<std::string, std::string> parse_params(const std::vector<std::string>& args) {
    std::map<std::string, std::string> kv;
    for (const auto& a : args) {
        const auto eq = a.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidInput("bad token '" + a + "' (expected key=value)");
        kv[a.substr(0, eq)] = a.substr(eq + 1);
    }
    return kv;
}

inline std::vector<int> parse_k_list(const std::string& s) {
    std::vector<int> ks;
    for (const auto& tok : split(s, ',')) ks.push_back(static_cast<int>(parse_int(tok, "k")));
    if (ks.empty()) throw InvalidInput("empty k list");
    return ks;
}

struct Options {
    std::string spec, out_path;
    std::string config;
    std::string out_dir = ".";
    std::string V;
    std::string domain = "interior";
    std::string tol;
    std::string which;
    std::string input;
    std::string sub;
    std::vector<std::string> params;
    double lambda = 2.0;
    std::string x0;
    double t0 = 0.0;
    std::string window;
};

inline int cmd_make(const Options& o, std::ostream& out) {
    const Seed seed = make_from_spec(o.spec);
    std::vector<std::string> comments = {"spec: " + seed.spec};
    if (seed.velocity) comments.push_back("V = " + format_vector(*seed.velocity, seed.state.manifold.ambient_dim()));
    write_geometry_file(o.out_path, seed.state.manifold, comments);
    out << "wrote " << o.out_path << " (" << seed.state.size() << " vertices)\n";
    return kOk;
}

inline int cmd_run(const Options& o, std::ostream& out) {
    RunConfig rc = read_run_config(o.config);
    if (!o.out_dir.empty() && o.out_dir != ".") rc.output_dir = o.out_dir;
    rc.flow.validate();
    const Manifold m = read_geometry_file(rc.geometry_file);
    const Trajectory traj = run(make_state(m), rc.flow);
    Manifest man("run");
    man.config(format_flow_config(rc.flow, m.ambient_dim()));
    man.input(o.config);
    man.input(rc.geometry_file);
    man.add("termination", to_string(traj.termination));
    for (const auto& f : write_trajectory(rc.output_dir, traj)) man.file(f);
    man.write(rc.output_dir);
    out << "termination = " << to_string(traj.termination) << ", snapshots = " << traj.size()
        << ", t = " << format_real(traj.end_time()) << '\n';
    return traj.termination == Termination::NumericalFailure ? kNumerical : kOk;
}

inline Vec velocity_for(const Options& o, const Trajectory* traj) {
    if (!o.V.empty()) return parse_vector(o.V);
    if (traj && traj->config.kind == FlowKind::VFlow) return traj->config.V;
    if (traj) return Vec::Zero();
    throw InvalidInput("--V is required for this check");
}

inline int cmd_verify(const Options& o, std::ostream& out) {
    const auto tol = parse_tolerances(o.tol);
    const fs::path dir = o.out_dir;
    Manifest man("verify " + o.which);
    bool pass = true;
    auto report = [&](const std::string& name, double value, const std::string& key) {
        const bool ok = value <= tol.at(key);
        pass = pass && ok;
        man.add(name, format_real(value));
        out << name << " = " << format_real(value) << " (tol " << format_real(tol.at(key)) << ") "
            << (ok ? "ok" : "FAILED") << '\n';
    };

    if (o.which == "divergence" || o.which == "scaling") {
        const FlowState s = make_state(read_geometry_file(o.input));
        const Vec V = velocity_for(o, nullptr);
        man.input(o.input);
        man.add("V", format_vector(V, s.manifold.ambient_dim()));
        if (o.which == "divergence") {
            const double id = divergence_identity_residual(s, V);
            const double closed = closed_divergence_check(s, V);
            const double scale = s.size() * std::max(V.norm(), 1.0);
            write_text_file(dir / "divergence.csv", "quantity,value\nidentity_residual," + format_real(id) +
                                                        "\nclosed_divergence," + format_real(closed) + "\n");
            man.file("divergence.csv");
            report("identity_residual", id, "divergence");
            report("closed_divergence_per_m_V", std::abs(closed) / scale, "closed_divergence");
        } else {
            const Vec x0 = o.x0.empty() ? Vec::Zero() : parse_vector(o.x0);
            const auto dom = parse_domain(o.domain, s.manifold);
            const auto c = check_scaling(s, V, o.lambda, x0, o.t0, dom);
            write_text_file(dir / "scaling.csv", "lambda,lhs,rhs,residual\n" + format_real(o.lambda) + "," +
                                                     format_real(c.lhs) + "," + format_real(c.rhs) + "," +
                                                     format_real(c.residual) + "\n");
            man.file("scaling.csv");
            report("residual", c.residual, "scaling");
        }
    } else {
        const Trajectory traj = read_trajectory(o.input);
        const Vec V = velocity_for(o, &traj);
        const auto dom = parse_domain(o.domain, traj.state(0).manifold);
        man.input(fs::path(o.input) / "index.csv");
        man.add("V", format_vector(V, traj.state(0).manifold.ambient_dim()));
        man.add("domain", o.domain);
        if (o.which == "monotonicity") {
            const auto rep = check_monotonicity(traj, V, dom);
            write_text_file(dir / "monotonicity.csv", monotonicity_csv(rep));
            man.file("monotonicity.csv");
            report("max_residual", rep.max_residual, "monotonicity");
        } else if (o.which == "measure") {
            const auto rep = check_measure_evolution(traj, V, dom);
            write_text_file(dir / "measure.csv", measure_csv(rep));
            man.file("measure.csv");
            report("max_residual", rep.max_residual, "measure");
        } else if (o.which == "window") {
            double s1 = traj.start_time(), s2 = traj.end_time();
            if (!o.window.empty()) {
                const auto parts = split(o.window, ',');
                if (parts.size() != 2) throw InvalidInput("--window needs s1,s2");
                s1 = parse_real(parts[0], "s1");
                s2 = parse_real(parts[1], "s2");
            }
            const auto rep = check_window_identity(traj, V, dom, s1, s2);
            write_text_file(dir / "window.csv", window_csv({rep}));
            man.file("window.csv");
            report("residual", rep.residual, "window");
        } else {
            throw InvalidInput("unknown check '" + o.which + "'");
        }
    }
    man.add("result", pass ? "pass" : "fail");
    man.write(dir);
    return pass ? kOk : kTolerance;
}

inline int cmd_blowup(const Options& o, std::ostream& out) {
    const Trajectory traj = read_trajectory(o.input);
    const auto kv = parse_params(o.params);
    for (const auto& [k, v] : kv) {
        if (k != "T" && k != "k") throw InvalidInput("bad token '" + k + "=" + v + "' (expected T= or k=)");
    }
    const double T = kv.count("T") ? parse_real(kv.at("T"), "T") : estimate_blowup_time(traj);
    const fs::path dir = o.out_dir;
    Manifest man("blowup " + o.sub);
    man.input(fs::path(o.input) / "index.csv");
    man.add("T", format_real(T));
    out << "T = " << format_real(T) << '\n';
    if (o.sub == "classify") {
        const auto rep = classify_singularity(traj, T);
        write_text_file(dir / "classification.csv", classification_csv(rep));
        man.file("classification.csv");
        man.add("verdict", to_string(rep.verdict));
        out << "verdict = " << to_string(rep.verdict) << '\n';
    } else if (o.sub == "sequence") {
        const auto ks = parse_k_list(kv.count("k") ? kv.at("k") : "4,8,16,32");
        const auto seq = essential_blowup_sequence(traj, T, ks);
        for (const auto& w : seq.warnings) out << "warning: " << w << '\n';
        write_text_file(dir / "sequence.csv", sequence_csv(seq));
        man.file("sequence.csv");
        out << seq.entries.size() << " entries\n";
    } else if (o.sub == "rescale") {
        const auto ks = parse_k_list(kv.count("k") ? kv.at("k") : "32");
        if (ks.size() != 1) throw InvalidInput("rescale takes a single k");
        const auto seq = essential_blowup_sequence(traj, T, ks);
        if (seq.entries.empty()) throw RangeError(seq.warnings.front());
        const Trajectory resc = hs_rescale(traj, seq.entries.front());
        for (const auto& f : write_trajectory(dir / "rescaled", resc)) man.file("rescaled/" + f);
        man.add("vertex", std::to_string(seq.entries.front().vertex));
        out << "rescaled snapshots = " << resc.size() << '\n';
    } else {
        throw InvalidInput("unknown blowup subcommand '" + o.sub + "'");
    }
    man.write(dir);
    return kOk;
}

inline int cmd_experiment(const Options& o, std::ostream& out, std::ostream& err) {
    const std::string text = read_text_file(o.config);
    auto kv = parse_key_values(text);
    EternalParams p;
    std::string plain;
    for (const auto& [k, v] : kv) {
        if (k == "experiment.k") p.k_list = parse_k_list(v);
        else if (k == "experiment.radius") p.window_radius = parse_real(v, k);
        else if (k == "experiment.vflow_time") p.vflow_time = parse_real(v, k);
        else if (k == "experiment.eps") p.eps = parse_real(v, k);
        else if (k.rfind("experiment.", 0) == 0) throw InvalidInput("unknown config key '" + k + "'");
        else plain += k + " = " + v + "\n";
    }
    RunConfig rc = parse_run_config(plain, fs::path(o.config).parent_path());
    if (!o.out_dir.empty() && o.out_dir != ".") rc.output_dir = o.out_dir;
    const Manifold m = read_geometry_file(rc.geometry_file);

    Manifest man("experiment-eternal");
    man.config(format_flow_config(rc.flow, m.ambient_dim()));
    man.input(o.config);
    man.input(rc.geometry_file);
    EternalResult res;
    int code = kOk;
    try {
        eternal_experiment(make_state(m), rc.flow, p, res);
    } catch (const NumericalFailure& e) {
        res.put("error", e.what());
        code = kNumerical;
    } catch (const Error& e) {
        res.put("error", e.what());
        code = kInvalid;
    }
    fs::create_directories(rc.output_dir);
    write_text_file(rc.output_dir / "eternal.csv", res.csv());
    man.file("eternal.csv");
    man.add("stage", res.stage);
    man.write(rc.output_dir);
    if (code != kOk) {
        err << "stage " << res.stage << " failed: " << res.rows.back().second << '\n';
        return code;
    }
    if (res.no_singularity) {
        out << "no singularity: curvature stays bounded, nothing to rescale\n";
    } else if (res.stage != "done") {
        out << "classification " << to_string(res.classification->verdict) << ": omega_k bounded, no rescaling\n";
    } else {
        out << "fitted V = " << format_vector(res.fit->V, m.ambient_dim())
            << ", translator max residual = " << format_real(res.residual->max_residual) << '\n';
    }
    return kOk;
}

inline int cmd_report(const Options& o, std::ostream& out) {
    const Trajectory traj = read_trajectory(o.input);
    const bool curve = traj.state(0).manifold.kind() == Kind::Polyline;
    const bool with_phi = !o.V.empty() || traj.config.kind == FlowKind::VFlow;
    const Vec V = with_phi ? velocity_for(o, &traj) : Vec::Zero();
    const auto dom = parse_domain(o.domain, traj.state(0).manifold);
    std::ostringstream csv;
    csv << "step,t,measure";
    if (curve) csv << ",max_a_sq";
    if (with_phi) csv << ",phi,dissipation";
    csv << '\n';
    for (const auto& snap : traj.snapshots) {
        csv << snap.step << ',' << format_real(snap.t()) << ',' << format_real(total_measure(snap.state.manifold));
        if (curve) csv << ',' << format_real(max_second_fundamental_norm(snap.state));
        if (with_phi) csv << ',' << format_real(phi(snap.state, V, dom)) << ',' << format_real(dissipation(snap.state, V, dom));
        csv << '\n';
    }
    const fs::path dir = o.out_dir;
    write_text_file(dir / "report.csv", csv.str());
    Manifest man("report");
    man.input(fs::path(o.input) / "index.csv");
    man.add("termination", to_string(traj.termination));
    man.file("report.csv");
    man.write(dir);
    out << traj.size() << " snapshots, termination = " << to_string(traj.termination) << '\n';
    return kOk;
}

inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Mean curvature flow, V-flow and translator diagnostics", "vflow"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Options o;

    auto* make = app.add_subcommand("make", "Write a seed geometry from a shape spec");
    make->add_option("spec", o.spec, "e.g. \"loop a=0.5 b=1 m=512\"")->required();
    make->add_option("out", o.out_path, "Geometry file to write")->required();

    auto* runc = app.add_subcommand("run", "Integrate a flow from a config file");
    runc->add_option("--config", o.config)->required();
    runc->add_option("--out", o.out_dir, "Overrides output.dir");

    auto* verify = app.add_subcommand("verify", "Check a monotonicity identity");
    verify->add_option("which", o.which)
        ->required()
        ->check(CLI::IsMember({"monotonicity", "measure", "divergence", "scaling", "window"}));
    verify->add_option("input", o.input, "Trajectory directory or geometry file")->required();
    verify->add_option("--out", o.out_dir);
    verify->add_option("--V", o.V, "a,b[,c]");
    verify->add_option("--domain", o.domain, "all | interior | indices:i,j,...");
    verify->add_option("--tol", o.tol, "name=value,...");
    verify->add_option("--lambda", o.lambda, "Dilation factor for the scaling check");
    verify->add_option("--x0", o.x0, "Dilation centre for the scaling check");
    verify->add_option("--t0", o.t0, "Time origin for the scaling check");
    verify->add_option("--window", o.window, "s1,s2 for the window identity");

    auto* blow = app.add_subcommand("blowup", "Singularity analysis of a curve trajectory");
    blow->add_option("sub", o.sub)->required()->check(CLI::IsMember({"classify", "sequence", "rescale"}));
    blow->add_option("input", o.input, "Trajectory directory")->required();
    blow->add_option("params", o.params, "T=<time> k=<k1,k2,...>");
    blow->add_option("--out", o.out_dir);

    auto* eternal = app.add_subcommand("experiment-eternal", "Blowup, rescaling and translator fit in one pipeline");
    eternal->add_option("--config", o.config)->required();
    eternal->add_option("--out", o.out_dir, "Overrides output.dir");

    auto* rep = app.add_subcommand("report", "Per-snapshot summary of a trajectory");
    rep->add_option("input", o.input, "Trajectory directory")->required();
    rep->add_option("--out", o.out_dir);
    rep->add_option("--V", o.V);
    rep->add_option("--domain", o.domain);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return kOk;
    } catch (const CLI::Success&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kInvalid;
    }

    try {
        if (*make) return cmd_make(o, out);
        if (*runc) return cmd_run(o, out);
        if (*verify) return cmd_verify(o, out);
        if (*blow) return cmd_blowup(o, out);
        if (*eternal) return cmd_experiment(o, out, err);
        if (*rep) return cmd_report(o, out);
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    }
    return kInvalid;
}

} // namespace vflow::cli
