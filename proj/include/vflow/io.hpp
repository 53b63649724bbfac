#pragma once

// Text formats: polylines, the OBJ triangle subset, trajectory directories,
// `key = value` run configs and the CSV reports.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vflow/blowup.hpp"
#include "vflow/errors.hpp"
#include "vflow/flow.hpp"
#include "vflow/functional.hpp"
#include "vflow/geom.hpp"

namespace vflow {

namespace fs = std::filesystem;

/// Shortest decimal form that reads back to the same double.
inline std::string format_real(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_real(const std::string& token, const std::string& what) {
    const std::string s = trim(token);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw InvalidInput("bad number '" + token + "' for " + what);
    }
    return v;
}

inline long parse_int(const std::string& token, const std::string& what) {
    const std::string s = trim(token);
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InvalidInput("bad integer '" + token + "' for " + what);
    }
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

/// "a,b" or "a,b,c".
inline Vec parse_vector(const std::string& s) {
    const auto parts = split(s, ',');
    if (parts.size() != 2 && parts.size() != 3) throw InvalidInput("vector '" + s + "' needs 2 or 3 components");
    Vec v = Vec::Zero();
    for (std::size_t i = 0; i < parts.size(); ++i) v[i] = parse_real(parts[i], "vector component");
    return v;
}

inline std::string format_vector(const Vec& v, int dim) {
    std::string out;
    for (int i = 0; i < dim; ++i) {
        if (i) out += ',';
        out += format_real(v[i]);
    }
    return out;
}

// ---- geometry -------------------------------------------------------------

inline void write_polyline(std::ostream& out, const Manifold& m, const std::vector<std::string>& comments = {}) {
    out << "polyline N=" << m.ambient_dim() << " closed=" << (m.closed() ? "true" : "false") << '\n';
    for (const auto& c : comments) out << "# " << c << '\n';
    for (const auto& p : m.points) {
        out << "v " << format_real(p.x()) << ' ' << format_real(p.y());
        if (m.ambient_dim() == 3) out << ' ' << format_real(p.z());
        out << '\n';
    }
}

inline void write_obj(std::ostream& out, const Manifold& m, const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) out << "# " << c << '\n';
    for (const auto& p : m.points) {
        out << "v " << format_real(p.x()) << ' ' << format_real(p.y()) << ' ' << format_real(p.z()) << '\n';
    }
    for (const auto& f : m.topo().faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

inline void write_geometry(std::ostream& out, const Manifold& m, const std::vector<std::string>& comments = {}) {
    if (m.kind() == Kind::Polyline) {
        write_polyline(out, m, comments);
    } else {
        write_obj(out, m, comments);
    }
}

namespace detail {

inline std::vector<std::string> words(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> w;
    std::string s;
    while (in >> s) w.push_back(s);
    return w;
}

inline Manifold read_polyline_body(std::istream& in, const std::string& header, int& lineno) {
    const auto hw = words(header);
    int dim = 0;
    std::optional<bool> closed;
    for (std::size_t i = 1; i < hw.size(); ++i) {
        if (hw[i] == "N=2") dim = 2;
        else if (hw[i] == "N=3") dim = 3;
        else if (hw[i] == "closed=true") closed = true;
        else if (hw[i] == "closed=false") closed = false;
        else throw InvalidInput("line " + std::to_string(lineno) + ": bad polyline header token '" + hw[i] + "'");
    }
    if (dim == 0 || !closed) throw InvalidInput("polyline header needs N=<2|3> and closed=<true|false>");
    std::vector<Vec> pts;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        const auto w = words(line);
        if (w.empty() || w[0][0] == '#') continue;
        if (w[0] != "v" || w.size() != static_cast<std::size_t>(dim) + 1) {
            throw InvalidInput("line " + std::to_string(lineno) + ": expected 'v' with " + std::to_string(dim) +
                               " coordinates");
        }
        Vec p = Vec::Zero();
        for (int c = 0; c < dim; ++c) p[c] = parse_real(w[c + 1], "vertex coordinate");
        pts.push_back(p);
    }
    return make_polyline(std::move(pts), dim, *closed);
}

inline Manifold read_obj_body(std::istream& in, std::vector<std::string> first, int& lineno) {
    std::vector<Vec> pts;
    std::vector<Face> faces;
    auto handle = [&](const std::vector<std::string>& w) {
        if (w.empty() || w[0][0] == '#') return;
        if (w[0] == "v") {
            if (w.size() != 4) throw InvalidInput("line " + std::to_string(lineno) + ": 'v' needs 3 coordinates");
            pts.emplace_back(parse_real(w[1], "x"), parse_real(w[2], "y"), parse_real(w[3], "z"));
        } else if (w[0] == "f") {
            if (w.size() != 4) throw InvalidInput("line " + std::to_string(lineno) + ": only triangles are supported");
            Face f;
            for (int c = 0; c < 3; ++c) {
                const std::string idx = w[c + 1].substr(0, w[c + 1].find('/'));
                f[c] = static_cast<int>(parse_int(idx, "face index")) - 1;
            }
            faces.push_back(f);
        } else {
            throw InvalidInput("line " + std::to_string(lineno) + ": unsupported record '" + w[0] + "'");
        }
    };
    handle(first);
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        handle(words(line));
    }
    return make_trimesh(std::move(pts), std::move(faces));
}

} // namespace detail

/// Polyline text if the first record is a `polyline` header, OBJ otherwise.
inline Manifold read_geometry(std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto w = detail::words(line);
        if (w.empty() || w[0][0] == '#') continue;
        if (w[0] == "polyline") return detail::read_polyline_body(in, line, lineno);
        return detail::read_obj_body(in, w, lineno);
    }
    throw InvalidInput("empty geometry file");
}

inline Manifold read_geometry_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open geometry file " + path.string());
    return read_geometry(in);
}

inline void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << text;
    if (!out) throw InvalidInput("write failed for " + path.string());
}

inline std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_geometry_file(const fs::path& path, const Manifold& m, const std::vector<std::string>& comments = {}) {
    std::ostringstream out;
    write_geometry(out, m, comments);
    write_text_file(path, out.str());
}

// ---- configs --------------------------------------------------------------

/// `key = value` lines; `#` starts a comment line. Duplicate keys are rejected.
inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw InvalidInput("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw InvalidInput("line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, trim(t.substr(eq + 1))).second) throw InvalidInput("duplicate key '" + key + "'");
    }
    return kv;
}

inline std::string format_flow_config(const FlowConfig& cfg, int dim) {
    std::ostringstream out;
    out << "flow.kind = " << to_string(cfg.kind) << '\n';
    if (cfg.kind == FlowKind::VFlow) out << "flow.V = " << format_vector(cfg.V, dim) << '\n';
    out << "dt.safety = " << format_real(cfg.dt_safety) << '\n';
    out << "time.end = " << format_real(cfg.t_end) << '\n';
    out << "snapshot.stride = " << cfg.snapshot_stride << '\n';
    if (cfg.blowup_threshold) out << "blowup.threshold = " << format_real(*cfg.blowup_threshold) << '\n';
    out << "boundary.mode = " << to_string(cfg.boundary) << '\n';
    return out.str();
}

/// Reads the flow keys of a parsed config; geometry/output keys are ignored here.
inline FlowConfig flow_config_from(const std::map<std::string, std::string>& kv) {
    FlowConfig cfg;
    std::vector<std::string> missing;
    for (const char* key : {"flow.kind", "dt.safety", "time.end"}) {
        if (!kv.count(key)) missing.push_back(key);
    }
    const auto kind = kv.find("flow.kind");
    if (kind != kv.end() && kind->second == "vflow" && !kv.count("flow.V")) missing.push_back("flow.V");
    if (!missing.empty()) {
        std::string msg = "missing config keys:";
        for (const auto& m : missing) msg += " " + m;
        throw InvalidInput(msg);
    }
    if (kind->second == "mcf") cfg.kind = FlowKind::MCF;
    else if (kind->second == "vflow") cfg.kind = FlowKind::VFlow;
    else throw InvalidInput("flow.kind must be mcf or vflow, got '" + kind->second + "'");
    if (auto it = kv.find("flow.V"); it != kv.end()) cfg.V = parse_vector(it->second);
    cfg.dt_safety = parse_real(kv.at("dt.safety"), "dt.safety");
    cfg.t_end = parse_real(kv.at("time.end"), "time.end");
    if (auto it = kv.find("snapshot.stride"); it != kv.end()) {
        cfg.snapshot_stride = static_cast<int>(parse_int(it->second, "snapshot.stride"));
    }
    if (auto it = kv.find("blowup.threshold"); it != kv.end()) {
        cfg.blowup_threshold = parse_real(it->second, "blowup.threshold");
    }
    if (auto it = kv.find("boundary.mode"); it != kv.end()) {
        if (it->second == "freeze") cfg.boundary = BoundaryMode::Freeze;
        else if (it->second == "translate") cfg.boundary = BoundaryMode::Translate;
        else throw InvalidInput("boundary.mode must be freeze or translate, got '" + it->second + "'");
    }
    return cfg;
}

struct RunConfig {
    FlowConfig flow;
    fs::path geometry_file;
    fs::path output_dir;
};

/// Relative paths resolve against `base_dir` (the config file's directory).
inline RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
    const auto kv = parse_key_values(text);
    static const std::vector<std::string> known = {"flow.kind",       "flow.V",        "dt.safety",
                                                   "time.end",        "snapshot.stride", "blowup.threshold",
                                                   "geometry.file",   "output.dir",    "boundary.mode"};
    for (const auto& [k, v] : kv) {
        if (std::find(known.begin(), known.end(), k) == known.end()) throw InvalidInput("unknown config key '" + k + "'");
    }
    std::vector<std::string> missing;
    for (const char* key : {"flow.kind", "dt.safety", "time.end", "geometry.file", "output.dir"}) {
        if (!kv.count(key)) missing.push_back(key);
    }
    if (kv.count("flow.kind") && kv.at("flow.kind") == "vflow" && !kv.count("flow.V")) missing.push_back("flow.V");
    if (!missing.empty()) {
        std::string msg = "missing config keys:";
        for (const auto& m : missing) msg += " " + m;
        throw InvalidInput(msg);
    }
    RunConfig rc;
    rc.flow = flow_config_from(kv);
    rc.geometry_file = base_dir / kv.at("geometry.file");
    rc.output_dir = base_dir / kv.at("output.dir");
    return rc;
}

inline RunConfig read_run_config(const fs::path& path) {
    return parse_run_config(read_text_file(path), path.parent_path());
}

// ---- trajectories ---------------------------------------------------------

inline std::string snapshot_filename(std::size_t k, Kind kind) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snap_%06zu.%s", k, kind == Kind::Polyline ? "poly" : "obj");
    return buf;
}

/// Writes index.csv, config.txt and one geometry file per snapshot. Returns
/// the file names written, relative to `dir`.
inline std::vector<std::string> write_trajectory(const fs::path& dir, const Trajectory& traj) {
    traj.validate();
    fs::create_directories(dir);
    const Kind kind = traj.state(0).manifold.kind();
    std::vector<std::string> files;
    std::ostringstream index;
    index << "step,t,filename,termination\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const std::string name = snapshot_filename(k, kind);
        write_geometry_file(dir / name, traj.state(k).manifold);
        files.push_back(name);
        index << traj.snapshots[k].step << ',' << format_real(traj.time(k)) << ',' << name << ',';
        if (k + 1 == traj.size()) index << to_string(traj.termination);
        index << '\n';
    }
    std::string cfg = format_flow_config(traj.config, traj.state(0).manifold.ambient_dim());
    for (const auto& r : traj.rescalings) {
        cfg += "# rescaling " + r.kind + " scale=" + format_real(r.scale) + " center=" +
               format_vector(r.center, traj.state(0).manifold.ambient_dim()) + " time_origin=" +
               format_real(r.time_origin) + '\n';
    }
    write_text_file(dir / "index.csv", index.str());
    write_text_file(dir / "config.txt", cfg);
    files.push_back("index.csv");
    files.push_back("config.txt");
    return files;
}

inline Trajectory read_trajectory(const fs::path& dir) {
    Trajectory traj;
    if (fs::exists(dir / "config.txt")) traj.config = flow_config_from(parse_key_values(read_text_file(dir / "config.txt")));
    std::istringstream index(read_text_file(dir / "index.csv"));
    std::string line;
    if (!std::getline(index, line) || trim(line) != "step,t,filename,termination") {
        throw InvalidInput("index.csv: bad header");
    }
    std::string last_flag;
    while (std::getline(index, line)) {
        if (trim(line).empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 4) throw InvalidInput("index.csv: expected 4 columns in '" + line + "'");
        Manifold m = read_geometry_file(dir / cols[2]);
        if (!traj.snapshots.empty()) {
            const Manifold& first = traj.state(0).manifold;
            if (m.kind() != first.kind() || m.size() != first.size() || m.closed() != first.closed() ||
                m.topo().faces() != first.topo().faces()) {
                throw InvalidInput("snapshot " + cols[2] + " has a different connectivity");
            }
            m = with_points(first, std::move(m.points));
        }
        traj.snapshots.push_back({parse_int(cols[0], "step"), make_state(std::move(m), parse_real(cols[1], "t"))});
        last_flag = cols[3];
    }
    if (traj.snapshots.empty()) throw InvalidInput("index.csv lists no snapshots");
    if (last_flag == "blowup_detected") traj.termination = Termination::BlowupDetected;
    else if (last_flag == "numerical_failure") traj.termination = Termination::NumericalFailure;
    else traj.termination = Termination::ReachedEnd;
    traj.validate();
    return traj;
}

// ---- reports --------------------------------------------------------------

/// One row per snapshot; fd_residual belongs to the pair ending at that row
/// and is empty on the first row.
inline std::string monotonicity_csv(const MonotonicityReport& rep) {
    std::ostringstream out;
    out << "t,phi,dissipation,fd_residual\n";
    for (std::size_t k = 0; k < rep.samples.size(); ++k) {
        const auto& s = rep.samples[k];
        out << format_real(s.t) << ',' << format_real(s.phi) << ',' << format_real(s.dissipation) << ',';
        if (k > 0) out << format_real(rep.fd_residuals[k - 1].residual);
        out << '\n';
    }
    return out.str();
}

inline std::string measure_csv(const MeasureEvolutionReport& rep) {
    std::ostringstream out;
    out << "t_mid,max_residual,spread\n";
    for (const auto& p : rep.pairs) {
        out << format_real(p.t_mid) << ',' << format_real(p.max_residual) << ',' << format_real(p.spread) << '\n';
    }
    return out.str();
}

inline std::string window_csv(const std::vector<WindowIdentityReport>& reps) {
    std::ostringstream out;
    out << "s1,s2,phi_drop,integral,residual\n";
    for (const auto& r : reps) {
        out << format_real(r.s1) << ',' << format_real(r.s2) << ',' << format_real(r.phi_drop) << ','
            << format_real(r.integral) << ',' << format_real(r.residual) << '\n';
    }
    return out.str();
}

inline std::string sequence_csv(const BlowupSequence& seq) {
    std::ostringstream out;
    out << "k,t_k,vertex,L_k,alpha_k,omega_k\n";
    for (const auto& e : seq.entries) {
        out << e.k << ',' << format_real(e.t_k) << ',' << e.vertex << ',' << format_real(e.L_k) << ','
            << format_real(e.alpha_k) << ',' << format_real(e.omega_k) << '\n';
    }
    for (const auto& w : seq.warnings) out << "# warning: " << w << '\n';
    return out.str();
}

inline std::string classification_csv(const ClassificationReport& rep) {
    std::ostringstream out;
    out << "t,r\n";
    for (std::size_t k = 0; k < rep.t.size(); ++k) out << format_real(rep.t[k]) << ',' << format_real(rep.r[k]) << '\n';
    out << "# sup=" << format_real(rep.sup) << " trend=" << format_real(rep.trend)
        << " early_median=" << format_real(rep.early_median) << '\n';
    out << "# verdict=" << to_string(rep.verdict) << '\n';
    return out.str();
}

} // namespace vflow
