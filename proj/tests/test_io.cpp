#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"
#include "vflow/io.hpp"
#include "vflow/soliton.hpp"

using namespace vflow;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("vflow_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Manifold roundtrip(const Manifold& m) {
    std::stringstream ss;
    write_geometry(ss, m, {"a comment"});
    return read_geometry(ss);
}

std::string expect_invalid(const std::string& text) {
    std::istringstream in(text);
    try {
        read_geometry(in);
    } catch (const InvalidInput& e) {
        return e.what();
    }
    ADD_FAILURE() << "accepted: " << text;
    return {};
}

} // namespace

TEST(Numbers, ShortestRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 1e308, 0.0, 123456789.125}) {
        EXPECT_EQ(parse_real(format_real(x), "x"), x);
    }
    EXPECT_EQ(format_real(0.5), "0.5");
    EXPECT_EQ(format_real(2.0), "2");
    EXPECT_THROW(parse_real("1.5x", "x"), InvalidInput);
    EXPECT_THROW(parse_real("", "x"), InvalidInput);
    EXPECT_THROW(parse_real("nan", "x"), InvalidInput);
    EXPECT_EQ(parse_int(" 42 ", "n"), 42);
    EXPECT_THROW(parse_int("4.2", "n"), InvalidInput);
}

TEST(Numbers, Vectors) {
    EXPECT_EQ(parse_vector("0,1"), Vec(0, 1, 0));
    EXPECT_EQ(parse_vector(" 1.5, -2 , 3"), Vec(1.5, -2, 3));
    EXPECT_THROW(parse_vector("1"), InvalidInput);
    EXPECT_THROW(parse_vector("1,2,3,4"), InvalidInput);
    EXPECT_THROW(parse_vector("1,"), InvalidInput);
    EXPECT_EQ(format_vector(Vec(0.25, -1, 7), 2), "0.25,-1");
}

TEST(Geometry, PolylineRoundTripIsExact) {
    std::mt19937_64 rng(3);
    for (int dim : {2, 3}) {
        const auto m = vflow::test::random_closed_polyline(rng, 37, dim);
        const auto back = roundtrip(m);
        EXPECT_EQ(back.kind(), Kind::Polyline);
        EXPECT_EQ(back.ambient_dim(), dim);
        EXPECT_TRUE(back.closed());
        EXPECT_EQ(back.points, m.points);
    }
    const auto open = grim_reaper(1.0, 0.1, 20).state.manifold;
    const auto back = roundtrip(open);
    EXPECT_FALSE(back.closed());
    EXPECT_EQ(back.points, open.points);
}

TEST(Geometry, ObjRoundTripIsExact) {
    const auto m = icosphere(1.0, 2);
    const auto back = roundtrip(m);
    EXPECT_EQ(back.kind(), Kind::TriMesh);
    EXPECT_EQ(back.points, m.points);
    EXPECT_EQ(back.topo().faces(), m.topo().faces());
}

TEST(Geometry, PolylineText) {
    std::ostringstream out;
    write_polyline(out, make_polyline({Vec(0, 0, 0), Vec(1, 0.5, 0), Vec(0, 1, 0)}, 2, true), {"hello"});
    EXPECT_EQ(out.str(), "polyline N=2 closed=true\n# hello\nv 0 0\nv 1 0.5\nv 0 1\n");
}

TEST(Geometry, ObjAcceptsSlashIndices) {
    std::istringstream in("# tetra\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1/1 3/3 2/2\nf 1 2 4\nf 2 3 4\nf 3 1 4\n");
    const auto m = read_geometry(in);
    EXPECT_EQ(m.size(), 4);
    EXPECT_TRUE(m.closed());
}

TEST(Geometry, MalformedInputs) {
    EXPECT_NE(expect_invalid("").find("empty"), std::string::npos);
    EXPECT_NE(expect_invalid("polyline N=4 closed=true\nv 0 0\n").find("header"), std::string::npos);
    EXPECT_NE(expect_invalid("polyline N=2 closed=true\nv 0 0 0\nv 1 0\nv 0 1\n").find("line 2"), std::string::npos);
    EXPECT_NE(expect_invalid("polyline N=2 closed=true\nv 0 zero\nv 1 0\nv 0 1\n").find("zero"), std::string::npos);
    EXPECT_NE(expect_invalid("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n").find("triangles"), std::string::npos);
    expect_invalid("v 0 0 0\nvt 0 0\n");
    // a dangling face index is caught by the mesh constructor
    std::istringstream bad("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
    EXPECT_THROW(read_geometry(bad), Error);
    EXPECT_THROW(read_geometry_file("/nonexistent/file.poly"), InvalidInput);
}

TEST(Config, KeyValues) {
    const auto kv = parse_key_values("# comment\n a = 1 \n\nb=two words\n");
    EXPECT_EQ(kv.at("a"), "1");
    EXPECT_EQ(kv.at("b"), "two words");
    EXPECT_THROW(parse_key_values("a = 1\na = 2\n"), InvalidInput);
    EXPECT_THROW(parse_key_values("just text\n"), InvalidInput);
    EXPECT_THROW(parse_key_values(" = 3\n"), InvalidInput);
}

TEST(Config, RunConfigAndMissingKeys) {
    const std::string text =
        "flow.kind = vflow\nflow.V = 0,0.5\ndt.safety = 0.4\ntime.end = 0.2\nsnapshot.stride = 5\n"
        "blowup.threshold = 1e4\nboundary.mode = translate\ngeometry.file = seed.poly\noutput.dir = out\n";
    const auto rc = parse_run_config(text, "/base");
    EXPECT_EQ(rc.flow.kind, FlowKind::VFlow);
    EXPECT_EQ(rc.flow.V, Vec(0, 0.5, 0));
    EXPECT_EQ(rc.flow.dt_safety, 0.4);
    EXPECT_EQ(rc.flow.t_end, 0.2);
    EXPECT_EQ(rc.flow.snapshot_stride, 5);
    EXPECT_EQ(*rc.flow.blowup_threshold, 1e4);
    EXPECT_EQ(rc.flow.boundary, BoundaryMode::Translate);
    EXPECT_EQ(rc.geometry_file, fs::path("/base/seed.poly"));
    EXPECT_EQ(rc.output_dir, fs::path("/base/out"));

    try {
        parse_run_config("flow.kind = vflow\ngeometry.file = a\n", "/");
        FAIL();
    } catch (const InvalidInput& e) {
        const std::string msg = e.what();
        for (const char* key : {"dt.safety", "time.end", "output.dir", "flow.V"}) {
            EXPECT_NE(msg.find(key), std::string::npos) << key;
        }
    }
    EXPECT_THROW(parse_run_config(text + "flow.extra = 1\n", "/"), InvalidInput);
    std::string bad_kind = text;
    bad_kind.replace(bad_kind.find("vflow"), 5, "curve");
    EXPECT_THROW(parse_run_config(bad_kind, "/"), InvalidInput);
}

TEST(Config, FlowConfigRoundTrip) {
    FlowConfig cfg;
    cfg.kind = FlowKind::VFlow;
    cfg.V = Vec(0.1, -0.3, 0);
    cfg.dt_safety = 0.3;
    cfg.t_end = 0.7;
    cfg.snapshot_stride = 9;
    cfg.blowup_threshold = 123.5;
    const auto back = flow_config_from(parse_key_values(format_flow_config(cfg, 2)));
    EXPECT_EQ(back.kind, cfg.kind);
    EXPECT_EQ(back.V, cfg.V);
    EXPECT_EQ(back.dt_safety, cfg.dt_safety);
    EXPECT_EQ(back.t_end, cfg.t_end);
    EXPECT_EQ(back.snapshot_stride, cfg.snapshot_stride);
    EXPECT_EQ(back.blowup_threshold, cfg.blowup_threshold);
    EXPECT_EQ(back.boundary, cfg.boundary);
}

TEST(Trajectory, RoundTrip) {
    FlowConfig cfg;
    cfg.kind = FlowKind::VFlow;
    cfg.V = Vec(0, 0.5, 0);
    cfg.t_end = 0.02;
    cfg.snapshot_stride = 4;
    const auto traj = run(loop_curve(0.5, 1.0, 64).state, cfg);
    const auto dir = scratch("traj");
    const auto files = write_trajectory(dir, traj);
    EXPECT_EQ(files.size(), traj.size() + 2);
    for (const auto& f : files) EXPECT_TRUE(fs::exists(dir / f)) << f;

    const auto back = read_trajectory(dir);
    ASSERT_EQ(back.size(), traj.size());
    EXPECT_EQ(back.termination, traj.termination);
    EXPECT_EQ(back.config.V, cfg.V);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        EXPECT_EQ(back.time(k), traj.time(k));
        EXPECT_EQ(back.snapshots[k].step, traj.snapshots[k].step);
        EXPECT_EQ(back.state(k).manifold.points, traj.state(k).manifold.points);
        EXPECT_EQ(back.state(k).measure, traj.state(k).measure);
        EXPECT_EQ(back.state(k).manifold.topology, back.state(0).manifold.topology);
    }

    const std::string index = read_text_file(dir / "index.csv");
    EXPECT_EQ(index.rfind("step,t,filename,termination\n", 0), 0u);
    EXPECT_NE(index.find(",reached_t_end\n"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Trajectory, MeshRoundTripAndRescalingNote) {
    FlowConfig cfg;
    cfg.t_end = 0.01;
    cfg.snapshot_stride = 10;
    const auto traj = parabolic_dilation(run(make_state(icosphere(1.0, 1)), cfg), {Vec::Zero(), 0.25, 2.0});
    const auto dir = scratch("mesh");
    write_trajectory(dir, traj);
    EXPECT_TRUE(fs::exists(dir / "snap_000000.obj"));
    EXPECT_NE(read_text_file(dir / "config.txt").find("# rescaling parabolic_dilation scale=2"), std::string::npos);
    const auto back = read_trajectory(dir);
    EXPECT_EQ(back.state(back.size() - 1).manifold.points, traj.state(traj.size() - 1).manifold.points);
    fs::remove_all(dir);
}

TEST(Trajectory, CorruptDirectories) {
    const auto dir = scratch("corrupt");
    EXPECT_THROW(read_trajectory(dir), InvalidInput);
    write_text_file(dir / "index.csv", "step,time\n");
    EXPECT_THROW(read_trajectory(dir), InvalidInput);
    write_text_file(dir / "index.csv", "step,t,filename,termination\n");
    EXPECT_THROW(read_trajectory(dir), InvalidInput);

    write_geometry_file(dir / "a.poly", regular_polygon(8));
    write_geometry_file(dir / "b.poly", regular_polygon(9));
    write_text_file(dir / "index.csv", "step,t,filename,termination\n0,0,a.poly,\n1,0.1,b.poly,reached_t_end\n");
    EXPECT_THROW(read_trajectory(dir), InvalidInput);
    fs::remove_all(dir);
}

TEST(Reports, CsvShapes) {
    MonotonicityReport mono;
    mono.samples = {{0.0, 2.0, 1.0}, {0.5, 1.5, 0.5}};
    mono.fd_residuals = {{0.25, 0.25}};
    EXPECT_EQ(monotonicity_csv(mono), "t,phi,dissipation,fd_residual\n0,2,1,\n0.5,1.5,0.5,0.25\n");

    EXPECT_EQ(window_csv({{0.0, 1.0, 0.5, 0.25, 0.25}}), "s1,s2,phi_drop,integral,residual\n0,1,0.5,0.25,0.25\n");

    BlowupSequence seq;
    seq.entries.push_back({4, 0.125, 3, 7, 2.0, -6.125, 3.0});
    seq.warnings.push_back("k = 2 skipped");
    EXPECT_EQ(sequence_csv(seq), "k,t_k,vertex,L_k,alpha_k,omega_k\n4,0.125,7,2,-6.125,3\n# warning: k = 2 skipped\n");

    ClassificationReport cls;
    cls.t = {0.0, 0.1};
    cls.r = {0.5, 0.5};
    cls.sup = 0.5;
    cls.verdict = Verdict::TypeI;
    const auto csv = classification_csv(cls);
    EXPECT_EQ(csv.rfind("t,r\n0,0.5\n0.1,0.5\n", 0), 0u);
    EXPECT_NE(csv.find("\n# verdict=type-I\n"), std::string::npos);
}
