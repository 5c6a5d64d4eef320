#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <random>

#include "radarsim/rooms.hpp"
#include "radarsim/scene.hpp"
#include "test_util.hpp"

using namespace radarsim;
using Rational = boost::multiprecision::cpp_rational;

namespace {

struct RVec {
    Rational x, y, z;
};

RVec exact(const Vec3& v) { return {Rational(v.x), Rational(v.y), Rational(v.z)}; }
RVec sub(const RVec& a, const RVec& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
RVec cross(const RVec& a, const RVec& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
Rational dot(const RVec& a, const RVec& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

// Exact test: does the open segment (a, b) meet the closed triangle?
// Segments lying in the triangle's plane are reported as no hit.
bool exact_hit(const Vec3& a, const Vec3& b, const Triangle& tri) {
    const RVec A = exact(a), B = exact(b);
    const RVec V0 = exact(tri.vertices[0]), V1 = exact(tri.vertices[1]), V2 = exact(tri.vertices[2]);
    const RVec d = sub(B, A), e1 = sub(V1, V0), e2 = sub(V2, V0);
    // Solve A + s d = V0 + u e1 + v e2 by Cramer's rule.
    const RVec n = cross(e1, e2);
    const Rational denom = dot(d, n);
    if (denom == 0) return false;
    const RVec w = sub(V0, A);
    const Rational s = dot(w, n) / denom;
    const RVec p = sub(A, V0);
    // p + s d = u e1 + v e2
    const RVec q{p.x + s * d.x, p.y + s * d.y, p.z + s * d.z};
    const Rational nn = dot(n, n);
    const Rational u = dot(cross(q, e2), n) / nn;
    const Rational v = dot(cross(e1, q), n) / nn;
    return s > 0 && s < 1 && u >= 0 && v >= 0 && u + v <= 1;
}

Triangle make_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
    Triangle t;
    t.vertices = {a, b, c};
    return t;
}

Scene single_triangle_scene(const Triangle& t) {
    Scene s;
    s.materials.push_back({"m", 4.0, 0.0});
    s.triangles.push_back(t);
    s.finalize();
    return s;
}

}  // namespace

TEST(Intersection, MatchesExactOracleOnDyadicGrid) {
    // Coordinates on a 1/8 grid make every floating-point product exact,
    // so edge and vertex grazing cases are hit frequently and must agree exactly.
    std::mt19937_64 gen(12345);
    std::uniform_int_distribution<int> coord(-16, 16);
    auto pt = [&] { return Vec3{coord(gen) / 8.0, coord(gen) / 8.0, coord(gen) / 8.0}; };
    int hits = 0, checked = 0;
    for (int i = 0; i < 20000; ++i) {
        const Triangle tri = make_triangle(pt(), pt(), pt());
        if (norm(cross(tri.vertices[1] - tri.vertices[0], tri.vertices[2] - tri.vertices[0])) == 0.0) continue;
        const Vec3 a = pt(), b = pt();
        if (a == b) continue;
        const bool oracle = exact_hit(a, b, tri);
        const auto got = detail::segment_triangle(a, b - a, tri, kSegmentEndTolerance);
        ASSERT_EQ(got.has_value(), oracle) << "case " << i;
        hits += oracle;
        ++checked;
    }
    EXPECT_GT(hits, 100);
    EXPECT_GT(checked, 15000);
}

TEST(Intersection, GrazingEdgeAndVertexCountAsHits) {
    const Triangle tri = make_triangle({0, 0, 0}, {2, 0, 0}, {0, 2, 0});
    const Scene scene = single_triangle_scene(tri);
    // Through the midpoint of the hypotenuse.
    EXPECT_TRUE(exact_hit({1, 1, -1}, {1, 1, 1}, tri));
    EXPECT_FALSE(los_visible({1, 1, -1}, {1, 1, 1}, scene));
    // Through a vertex.
    EXPECT_FALSE(los_visible({2, 0, -1}, {2, 0, 1}, scene));
    // Just outside the hypotenuse.
    EXPECT_TRUE(los_visible({1, 1.0 + 0x1p-30, -1}, {1, 1.0 + 0x1p-30, 1}, scene));
    EXPECT_FALSE(exact_hit({1, 1.0 + 0x1p-30, -1}, {1, 1.0 + 0x1p-30, 1}, tri));
    // Lying in the plane never hits.
    EXPECT_TRUE(los_visible({-1, 0.5, 0}, {3, 0.5, 0}, scene));
}

TEST(Intersection, EndpointsOnSurfaceAreIgnored) {
    const Scene scene = single_triangle_scene(make_triangle({0, 0, 0}, {2, 0, 0}, {0, 2, 0}));
    EXPECT_TRUE(los_visible({0.5, 0.5, 0.0}, {0.5, 0.5, 1.0}, scene));
    EXPECT_TRUE(los_visible({0.5, 0.5, 1.0}, {0.5, 0.5, 0.0}, scene));
}

TEST(LineOfSight, SymmetricAndMonotone) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.1, 19.9), z(0.1, 4.9);
    Scene room;
    room.materials.push_back({"concrete", 5.31, 0.48});
    room.triangles = rooms::l_room(20, 10, 5);
    room.finalize();
    Scene more = room;
    // Extra free-standing panel.
    more.triangles.push_back(make_triangle({3, 3, 0}, {3, 8, 0}, {3, 3, 5}));
    more.finalize();
    for (int i = 0; i < 5000; ++i) {
        const Vec3 a{u(gen), u(gen), z(gen)}, b{u(gen), u(gen), z(gen)};
        const bool ab = los_visible(a, b, room);
        ASSERT_EQ(ab, los_visible(b, a, room));
        if (!ab) {
            ASSERT_FALSE(los_visible(a, b, more));
        }
    }
}

TEST(LineOfSight, LRoomInnerCorner) {
    const auto sf = load_scenario(testutil::source_dir() / "data" / "l_room.scenario");
    EXPECT_TRUE(los_visible({16, 4, 0.5}, {14, 6, 4.95}, sf.scene));  // same arm
    EXPECT_FALSE(los_visible({16, 4, 0.5}, {7, 17, 4.95}, sf.scene)); // around the corner
    EXPECT_THROW(los_visible({1, 1, 1}, {1, 1, 1}, sf.scene), DomainError);
}

TEST(SceneLoad, LRoomBounds) {
    const Scene s = load_scene(testutil::source_dir() / "data" / "l_room.scenario");
    EXPECT_EQ(s.bounds.min, (Vec3{0, 0, 0}));
    EXPECT_EQ(s.bounds.max, (Vec3{20, 20, 5}));
    EXPECT_EQ(s.triangles.size(), 20u);
    EXPECT_EQ(s.reflectors.size(), 4u);
}

TEST(SceneLoad, BoxRoomTwelveTriangles) {
    testutil::TempDir dir;
    const std::vector<Material> mats{{"concrete", 5.31, 0.48}};
    rooms::write_mesh(dir / "box.mesh", rooms::box_room({4, 4, 3}), mats);
    testutil::write_file(dir / "box.scenario", "mesh box.mesh\nmaterial concrete 5.31 0.48\n");
    const Scene s = load_scene(dir / "box.scenario");
    EXPECT_EQ(s.triangles.size(), 12u);
    EXPECT_EQ(s.bounds.max, (Vec3{4, 4, 3}));
}

TEST(SceneLoad, ReflectorWithoutGeometryIsInvalid) {
    testutil::TempDir dir;
    testutil::write_file(dir / "s.scenario", "material concrete 5.31 0.48\nreflector 1 1 1 1 trihedral 0.1\n");
    EXPECT_THROW(load_scene(dir / "s.scenario"), ValidationError);
}

TEST(SceneLoad, DanglingMaterialIsInvalid) {
    testutil::TempDir dir;
    testutil::write_file(dir / "m.mesh", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3 glass\n");
    testutil::write_file(dir / "s.scenario", "mesh m.mesh\nmaterial concrete 5.31 0.48\n");
    EXPECT_THROW(load_scene(dir / "s.scenario"), ValidationError);
}

TEST(SceneLoad, ParseErrorReportsLine) {
    testutil::TempDir dir;
    testutil::write_file(dir / "m.mesh", "v 0 0 0\nv 1 0 0\nv 0 1 zero\nf 1 2 3 concrete\n");
    testutil::write_file(dir / "s.scenario", "mesh m.mesh\nmaterial concrete 5.31 0.48\n");
    try {
        load_scene(dir / "s.scenario");
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(SceneLoad, DegenerateTriangleIsInvalid) {
    testutil::TempDir dir;
    testutil::write_file(dir / "m.mesh", "v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3 concrete\n");
    testutil::write_file(dir / "s.scenario", "mesh m.mesh\nmaterial concrete 5.31 0.48\n");
    EXPECT_THROW(load_scene(dir / "s.scenario"), ValidationError);
}

TEST(SceneLoad, DuplicateReflectorIdIsInvalid) {
    testutil::TempDir dir;
    const std::vector<Material> mats{{"concrete", 5.31, 0.48}};
    rooms::write_mesh(dir / "box.mesh", rooms::box_room({4, 4, 3}), mats);
    testutil::write_file(dir / "s.scenario",
                         "mesh box.mesh\nmaterial concrete 5.31 0.48\n"
                         "reflector 1 1 1 2 trihedral 0.1\nreflector 1 2 2 2 trihedral 0.1\n");
    EXPECT_THROW(load_scene(dir / "s.scenario"), ValidationError);
}

namespace {

Trajectory two_point(const Vec3& p0, double h0, const Vec3& p1, double h1, double t1 = 1.0) {
    Trajectory t;
    Waypoint a, b;
    a.time = 0.0;
    a.pose.position = p0;
    a.pose.heading = h0;
    b.time = t1;
    b.pose.position = p1;
    b.pose.heading = h1;
    t.waypoints = {a, b};
    t.validate();
    return t;
}

}  // namespace

TEST(Trajectory, ExactAtWaypoints) {
    const auto tr = two_point({0.1, 0.2, 0.5}, 0.3, {1.7, -0.4, 0.5}, -1.2, 2.5);
    const auto p0 = trajectory_state(tr, 0.0);
    EXPECT_EQ(p0.position, (Vec3{0.1, 0.2, 0.5}));
    EXPECT_EQ(p0.heading, 0.3);
    const auto p1 = trajectory_state(tr, 2.5);
    EXPECT_EQ(p1.position, (Vec3{1.7, -0.4, 0.5}));
    EXPECT_EQ(p1.heading, -1.2);
}

TEST(Trajectory, ConstantSegmentVelocity) {
    const auto tr = two_point({0, 0, 0}, 0, {1, 0, 0}, 0);
    for (double t : {0.0, 0.25, 0.5, 0.999}) {
        const auto p = trajectory_state(tr, t);
        EXPECT_DOUBLE_EQ(p.velocity.x, 1.0);
        EXPECT_DOUBLE_EQ(p.velocity.y, 0.0);
        EXPECT_NEAR(p.position.x, t, 1e-15);
    }
}

TEST(Trajectory, HeadingWrapsThroughPi) {
    const auto tr = two_point({0, 0, 0}, -3.0, {1, 0, 0}, 3.0);
    const double h = trajectory_state(tr, 0.5).heading;
    // Unit-vector average of the two end headings.
    const double oracle = std::atan2(std::sin(-3.0) + std::sin(3.0), std::cos(-3.0) + std::cos(3.0));
    EXPECT_NEAR(std::abs(h), std::abs(oracle), 1e-12);
    EXPECT_NEAR(std::abs(h), kPi, 1e-12);
    EXPECT_GE(h, -kPi);
    EXPECT_LT(h, kPi);
}

TEST(Trajectory, ContinuousAtMicrosecondSteps) {
    const auto sf = load_scenario(testutil::source_dir() / "data" / "l_room.scenario");
    const auto& tr = sf.trajectory;
    for (double t = tr.start_time(); t + 1e-6 <= tr.end_time(); t += 0.37) {
        const auto a = trajectory_state(tr, t);
        const auto b = trajectory_state(tr, t + 1e-6);
        EXPECT_LT(norm(a.position - b.position), 1e-5);
        EXPECT_LT(std::abs(wrap_angle(a.heading - b.heading)), 1e-5);
    }
}

TEST(Trajectory, OutOfRangeIsDomainError) {
    const auto tr = two_point({0, 0, 0}, 0, {1, 0, 0}, 0);
    EXPECT_THROW(trajectory_state(tr, -0.1), DomainError);
    EXPECT_THROW(trajectory_state(tr, 1.1), DomainError);
}

TEST(Trajectory, NeedsIncreasingTimes) {
    Trajectory t;
    t.waypoints.resize(2);
    t.waypoints[0].time = 1.0;
    t.waypoints[1].time = 1.0;
    EXPECT_THROW(t.validate(), ValidationError);
    t.waypoints.resize(1);
    EXPECT_THROW(t.validate(), ValidationError);
}

TEST(Angles, WrapInterval) {
    EXPECT_DOUBLE_EQ(wrap_angle(kPi), -kPi);
    EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
    EXPECT_NEAR(wrap_angle(-5.0), -5.0 + 2 * kPi, 1e-15);
}
