#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "vflow/geom.hpp"
#include "vflow/soliton.hpp"

using namespace vflow;
using vflow::test::max_abs_diff;

namespace {

Manifold unit_square() {
    return make_trimesh({Vec(0, 0, 0), Vec(1, 0, 0), Vec(1, 1, 0), Vec(0, 1, 0)}, {Face{0, 1, 2}, Face{0, 2, 3}});
}

Manifold straight_line(int n, const Vec& dir) {
    std::vector<Vec> pts;
    for (int i = 0; i < n; ++i) pts.push_back(0.1 * i * dir + Vec(0.3, -0.2, 0.0));
    return make_polyline(pts, 2, false);
}

double max_h_error_on_circle(const Manifold& m, double R) {
    const auto H = mean_curvature(make_state(m));
    double err = 0.0;
    for (int i = 0; i < m.size(); ++i) err = std::max(err, (H[i] + m.points[i] / (R * R)).norm());
    return err;
}

// Magnitude only: on midpoint-subdivided meshes the cotan vector tilts by O(h)
// at irregular vertices while |H| converges at second order.
double max_h_error_on_sphere(int level) {
    const auto s = make_state(icosphere(1.0, level));
    const auto H = mean_curvature(s);
    double err = 0.0;
    for (int i = 0; i < s.size(); ++i) err = std::max(err, std::abs(H[i].norm() - 2.0));
    return err;
}

} // namespace

TEST(Topology, PolylineEdgesAndBoundary) {
    auto open = Topology::polyline(4, 2, false);
    EXPECT_EQ(open->edges().size(), 3u);
    EXPECT_TRUE(open->on_boundary(0));
    EXPECT_TRUE(open->on_boundary(3));
    EXPECT_FALSE(open->on_boundary(1));
    EXPECT_FALSE(open->closed());
    auto closed = Topology::polyline(4, 2, true);
    EXPECT_EQ(closed->edges().size(), 4u);
    EXPECT_EQ(closed->edges().back(), (Edge{3, 0}));
    EXPECT_TRUE(closed->closed());
}

TEST(Topology, TrimeshRejectsBadConnectivity) {
    EXPECT_THROW(Topology::trimesh(3, {Face{0, 1, 3}}), GeometryError);
    EXPECT_THROW(Topology::trimesh(3, {Face{0, 1, 1}}), GeometryError);
    // second face repeats the directed edge 0->1
    EXPECT_THROW(Topology::trimesh(4, {Face{0, 1, 2}, Face{0, 1, 3}}), GeometryError);
    EXPECT_THROW(Topology::trimesh(5, {Face{0, 1, 2}, Face{0, 2, 3}}), GeometryError);
}

TEST(Topology, ClosedMeshHasNoBoundary) {
    const auto m = icosphere(1.0, 1);
    EXPECT_TRUE(m.closed());
    EXPECT_FALSE(unit_square().closed());
    for (int i = 0; i < 4; ++i) EXPECT_TRUE(unit_square().topo().on_boundary(i));
}

TEST(Measure, RegularPolygon) {
    for (int m : {3, 7, 64}) {
        const auto w = compute_measure(regular_polygon(m));
        const double edge = 2.0 * std::sin(std::numbers::pi / m);
        double total = 0.0;
        for (double wi : w) {
            EXPECT_NEAR(wi, edge, 1e-14);
            total += wi;
        }
        EXPECT_NEAR(total, m * edge, 1e-12);
    }
}

TEST(Measure, UnitSquareThirds) {
    const auto w = compute_measure(unit_square());
    EXPECT_DOUBLE_EQ(w[0], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(w[2], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(w[1], 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(w[3], 1.0 / 6.0);
    EXPECT_NEAR(w[0] + w[1] + w[2] + w[3], 1.0, 1e-15);
}

TEST(Measure, OpenPolylineHalfEdges) {
    const auto w = compute_measure(make_polyline({Vec(0, 0, 0), Vec(1, 0, 0), Vec(1, 2, 0)}, 2, false));
    EXPECT_DOUBLE_EQ(w[0], 0.5);
    EXPECT_DOUBLE_EQ(w[1], 1.5);
    EXPECT_DOUBLE_EQ(w[2], 1.0);
}

TEST(Measure, DegenerateGeometryNamesOffender) {
    try {
        compute_measure(make_polyline({Vec(0, 0, 0), Vec(1, 0, 0), Vec(1, 0, 0), Vec(2, 0, 0)}, 2, false));
        FAIL();
    } catch (const GeometryError& e) {
        EXPECT_EQ(e.index(), 1);
    }
    try {
        compute_measure(make_trimesh({Vec(0, 0, 0), Vec(1, 0, 0), Vec(2, 0, 0)}, {Face{0, 1, 2}}));
        FAIL();
    } catch (const GeometryError& e) {
        EXPECT_EQ(e.index(), 0);
    }
}

TEST(Measure, TotalMatchesSumAndIsRigidInvariant) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = test::random_closed_polyline(rng, 50, 3);
        const auto w = compute_measure(m);
        double sum = 0.0;
        for (double wi : w) sum += wi;
        EXPECT_NEAR(sum, total_measure(m), 1e-13 * sum);
        const auto moved = test::transformed(m, test::rotation(0.3 * trial, 1.1, -0.4), Vec(3, -1, 2));
        EXPECT_NEAR(total_measure(moved), total_measure(m), 1e-13 * sum);
    }
    const auto sphere = icosphere(1.0, 2);
    const auto moved = test::transformed(sphere, test::rotation(0.2, 0.7, 1.9), Vec(-1, 2, 0.5));
    EXPECT_NEAR(total_measure(moved), total_measure(sphere), 1e-12);
}

TEST(Curvature, StraightPolylineIsFlat) {
    const auto s = make_state(straight_line(10, Vec(1, 2, 0).normalized()));
    for (const auto& h : mean_curvature(s)) EXPECT_LT(h.norm(), 1e-12);
    for (double a : second_fundamental_norm(s)) EXPECT_LT(a, 1e-24);
}

TEST(Curvature, RegularPolygonMatchesCircle) {
    // For the inscribed regular m-gon the turning angle 2 pi/m and the edge
    // 2 sin(pi/m) give |H| = 2 * 2 sin(pi/m) / (2 * 2 sin(pi/m)) = 1 exactly.
    for (int m : {16, 64, 128}) {
        const auto s = make_state(regular_polygon(m));
        const auto H = mean_curvature(s);
        for (int i = 0; i < m; ++i) {
            EXPECT_LE(std::abs(H[i].norm() - 1.0), 5.0 / (m * m));
            EXPECT_LT(H[i].dot(s.x(i)), 0.0);
        }
    }
    const auto s = make_state(regular_polygon(128, 2.5));
    for (double a : second_fundamental_norm(s)) EXPECT_NEAR(a, 1.0 / 6.25, 1.0 / (128.0 * 128.0));
}

TEST(Curvature, UnevenCircleSecondOrder) {
    const double e1 = max_h_error_on_circle(test::uneven_circle(64), 1.0);
    const double e2 = max_h_error_on_circle(test::uneven_circle(128), 1.0);
    const double e3 = max_h_error_on_circle(test::uneven_circle(256), 1.0);
    EXPECT_GE(e1 / e2, 3.5);
    EXPECT_GE(e2 / e3, 3.5);
}

TEST(Curvature, IcosphereInwardAndConverging) {
    const auto s = make_state(icosphere(1.0, 3));
    const auto H = mean_curvature(s);
    for (int i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(H[i].norm(), 2.0, 0.05);
        EXPECT_LT(H[i].dot(s.x(i)), 0.0);
    }
    const double e3 = max_h_error_on_sphere(3), e4 = max_h_error_on_sphere(4);
    EXPECT_GE(e3 / e4, 3.5);
}

TEST(Curvature, RigidMotionEquivariance) {
    std::mt19937_64 rng(5);
    const auto Q = test::rotation(0.4, -1.2, 2.2);
    const Vec shift(0.7, -0.3, 1.1);
    const auto curve = test::random_closed_polyline(rng, 40, 3);
    const auto sphere = icosphere(1.3, 2);
    for (const auto& m : {curve, sphere}) {
        const auto H = mean_curvature(make_state(m));
        const auto Hm = mean_curvature(make_state(test::transformed(m, Q, shift)));
        double scale = 0.0;
        std::vector<Vec> rotated(H.size());
        for (std::size_t i = 0; i < H.size(); ++i) {
            rotated[i] = Q * H[i];
            scale = std::max(scale, H[i].norm());
        }
        EXPECT_LE(max_abs_diff(rotated, Hm), 1e-12 * scale);
    }
}

TEST(Curvature, OpenEndpointsAreZero) {
    const auto seed = grim_reaper(1.0, 0.1, 40);
    const auto H = mean_curvature(seed.state);
    EXPECT_EQ(H.front().norm(), 0.0);
    EXPECT_EQ(H.back().norm(), 0.0);
    const auto a = second_fundamental_norm(seed.state);
    EXPECT_EQ(a.front(), 0.0);
    EXPECT_EQ(a.back(), 0.0);
}

TEST(Curvature, GrimReaperTip) {
    const auto seed = grim_reaper(1.0, 0.1, 200);
    EXPECT_NEAR(second_fundamental_norm(seed.state)[100], 1.0, 1e-3);
    EXPECT_THROW(second_fundamental_norm(make_state(icosphere(1.0, 1))), InvalidInput);
}

TEST(Projection, TangentFieldOnStraightLine) {
    const Vec dir = Vec(3, 4, 0).normalized();
    const auto s = make_state(straight_line(6, dir));
    const Vec V = 2.5 * dir;
    const auto p = project_field(s, V);
    for (int i = 0; i < s.size(); ++i) {
        EXPECT_LT(p.normal[i].norm(), 1e-14);
        EXPECT_LT((p.tangential[i] - V).norm(), 1e-14);
    }
}

TEST(Projection, GrimReaperTipIsNormal) {
    const auto seed = grim_reaper(1.0, 0.1, 200);
    const auto p = project_field(seed.state, Vec(0, 1, 0));
    EXPECT_LE(p.tangential[100].norm(), 1e-10);
    EXPECT_LE((p.normal[100] - Vec(0, 1, 0)).norm(), 1e-10);
}

TEST(Projection, SpherePoleNormal) {
    auto m = icosphere(1.0, 3);
    const Eigen::Matrix3d Q = Eigen::Quaterniond::FromTwoVectors(m.points[5], Vec::UnitZ()).toRotationMatrix();
    m = test::transformed(m, Q, Vec::Zero());
    const auto p = project_field(make_state(m), Vec(0, 0, 1));
    EXPECT_LE((p.normal[5] - Vec(0, 0, 1)).norm(), 1e-3);
}

TEST(Projection, ReconstructionAndOrthogonality) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    const auto sphere = make_state(test::transformed(icosphere(1.0, 2), test::rotation(0.1, 0.2, 0.3), Vec::Zero()));
    for (int trial = 0; trial < 20; ++trial) {
        const auto curve = make_state(test::random_closed_polyline(rng, 30, trial % 2 ? 3 : 2));
        const Vec V3(g(rng), g(rng), g(rng));
        const Vec V2(V3.x(), V3.y(), 0.0);
        for (const auto* s : {&curve, &sphere}) {
            const Vec& V = (s == &curve && trial % 2 == 0) ? V2 : V3;
            const auto p = project_field(*s, V);
            for (int i = 0; i < s->size(); ++i) {
                EXPECT_LE((p.tangential[i] + p.normal[i] - V).norm(), 4e-16 * V.norm());
                EXPECT_LE(std::abs(p.tangential[i].dot(p.normal[i])), 1e-12 * V.squaredNorm());
            }
        }
    }
}

TEST(Projection, FoldBackIsRejected) {
    const auto s = make_state(make_polyline({Vec(0, 0, 0), Vec(1, 0, 0), Vec(0, 0, 0)}, 2, false));
    EXPECT_THROW(project_field(s, Vec(1, 0, 0)), GeometryError);
}

TEST(VertexFieldsTest, CurveHasASq) {
    const auto s = make_state(regular_polygon(32));
    const auto f = vertex_fields(s, Vec(0, 1, 0));
    ASSERT_TRUE(f.a_sq.has_value());
    EXPECT_EQ(f.a_sq->size(), 32u);
    EXPECT_FALSE(vertex_fields(make_state(icosphere(1.0, 1)), Vec(0, 0, 1)).a_sq.has_value());
}

TEST(SubdomainTest, InteriorCollar) {
    const auto m = grim_reaper(1.0, 0.1, 20).state.manifold;
    const auto d = Subdomain::interior(m, 3);
    EXPECT_EQ(d.indices.front(), 3);
    EXPECT_EQ(d.indices.back(), 17);
    EXPECT_EQ(Subdomain::interior(regular_polygon(10)).indices.size(), 10u);
    EXPECT_THROW(Subdomain::of(m, {}), InvalidInput);
    EXPECT_THROW(Subdomain::of(m, {0, 21}), InvalidInput);
    EXPECT_EQ(Subdomain::of(m, {4, 2, 4}).indices, (std::vector<int>{2, 4}));
}
