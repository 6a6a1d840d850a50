#include "test_support.hpp"

#include <set>

using namespace curvmesh;

namespace {

ProjectedNeighborhood planar(const std::vector<Eigen::Vector2d>& pts)
{
    ProjectedNeighborhood p;
    const auto k = static_cast<Eigen::Index>(pts.size());
    p.coords.resize(2, k);
    p.normal_components = Eigen::MatrixXd::Zero(1, k);
    for (Eigen::Index r = 0; r < k; ++r) {
        p.indices.push_back(r);
        p.coords.col(r) = pts[static_cast<std::size_t>(r)];
        p.ambient_distances.push_back(pts[static_cast<std::size_t>(r)].norm());
    }
    return p;
}

using Tri = std::set<Eigen::Index>;

/// Every triangle (0, a, b) whose circumcircle has no other point strictly inside.
std::set<Tri> brute_force_star(const std::vector<Eigen::Vector2d>& pts)
{
    std::set<Tri> out;
    const std::size_t k = pts.size();
    for (std::size_t a = 1; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b) {
            const int o = predicates::orient2d(pts[0], pts[a], pts[b]);
            if (o == 0) continue;
            const std::size_t p = o > 0 ? a : b, q = o > 0 ? b : a;
            bool empty = true;
            for (std::size_t r = 1; r < k && empty; ++r)
                if (r != a && r != b && predicates::incircle(pts[0], pts[p], pts[q], pts[r]) > 0) empty = false;
            if (empty) out.insert({0, static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)});
        }
    return out;
}

} // namespace

TEST(Predicates, SignsAndExactFallback)
{
    const Eigen::Vector2d a(0, 0), b(1, 0), c(0, 1);
    EXPECT_EQ(predicates::orient2d(a, b, c), 1);
    EXPECT_EQ(predicates::orient2d(a, c, b), -1);
    EXPECT_EQ(predicates::orient2d(a, b, Eigen::Vector2d(2, 0)), 0);
    EXPECT_EQ(predicates::incircle(a, b, c, Eigen::Vector2d(0.5, 0.5)), 1);
    EXPECT_EQ(predicates::incircle(a, b, c, Eigen::Vector2d(1, 1)), 0);
    EXPECT_EQ(predicates::incircle(a, b, c, Eigen::Vector2d(2, 2)), -1);
    // Nearly collinear input where the naive double determinant loses the sign.
    const Eigen::Vector2d p(0.5, 0.5), q(12, 12), r(24, 24);
    const Eigen::Vector2d s(0.5 + 0x1p-50, 0.5);
    EXPECT_EQ(predicates::orient2d(p, q, r), 0);
    EXPECT_EQ(predicates::orient2d(s, q, r), predicates::detail::orient_exact(s, q, r));
}

TEST(DelaunayRing, ThreePointsGiveOneTriangle)
{
    const FirstRing ring = delaunay_first_ring(planar({{0, 0}, {1, 0}, {0, 1}}));
    ASSERT_EQ(ring.triangles.size(), 1u);
    const RingTriangle& t = ring.triangles[0];
    EXPECT_EQ(t.vertex_indices[0], 0);
    EXPECT_EQ(std::set<Eigen::Index>({t.vertex_indices[1], t.vertex_indices[2]}), (std::set<Eigen::Index>{1, 2}));
    EXPECT_GT(t.v_j.x() * t.v_k.y() - t.v_j.y() * t.v_k.x(), 0.0);
}

TEST(DelaunayRing, RegularHexagonGivesSixTriangles)
{
    std::vector<Eigen::Vector2d> pts{{0, 0}};
    for (int m = 0; m < 6; ++m) pts.emplace_back(std::cos(m * std::numbers::pi / 3), std::sin(m * std::numbers::pi / 3));
    const FirstRing ring = delaunay_first_ring(planar(pts));
    ASSERT_EQ(ring.triangles.size(), 6u);
    EXPECT_NEAR(ring.angle_sum(), 2.0 * std::numbers::pi, 1e-12);
    for (const auto& t : ring.triangles) {
        EXPECT_NEAR(t.projected_area(), std::sqrt(3.0) / 4.0, 1e-12);
        EXPECT_GT(t.v_j.x() * t.v_k.y() - t.v_j.y() * t.v_k.x(), 0.0);
    }
}

TEST(DelaunayRing, CollinearNeighborhoodIsDegenerate)
{
    try {
        delaunay_first_ring(planar({{0, 0}, {1, 0}, {2, 0}, {-1, 0}}));
        FAIL() << "expected degenerate-neighborhood";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::degenerate_neighborhood);
    }
}

TEST(DelaunayRing, MatchesEmptyCircumcircleOracle)
{
    Xoshiro256 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Eigen::Vector2d> pts{{0, 0}};
        for (int r = 0; r < 19; ++r) pts.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1));
        const FirstRing ring = delaunay_first_ring(planar(pts));
        std::set<Tri> got;
        for (const auto& t : ring.triangles)
            got.insert({t.local_slots[0], t.local_slots[1], t.local_slots[2]});
        EXPECT_EQ(got, brute_force_star(pts)) << "trial " << trial;
        for (const auto& t : ring.triangles)
            for (std::size_t r = 1; r < pts.size(); ++r)
                if (static_cast<Eigen::Index>(r) != t.local_slots[1] && static_cast<Eigen::Index>(r) != t.local_slots[2])
                    EXPECT_LE(predicates::incircle(Eigen::Vector2d(0, 0), t.v_j, t.v_k, pts[r]), 0);
    }
}

TEST(DelaunayRing, InteriorPointRingClosesOnSphere)
{
    const auto& fx = curvmesh::testing::sphere_fixture(2000);
    for (Eigen::Index i = 0; i < 2000; i += 101) {
        const FirstRing ring = delaunay_first_ring(fx.model.neighborhoods[static_cast<std::size_t>(i)]);
        EXPECT_NEAR(ring.angle_sum(), 2.0 * std::numbers::pi, 1e-9) << "point " << i;
    }
}

TEST(BarycentricMap, VerticesAndCentroid)
{
    RingTriangle t;
    t.v_j = {2, 0};
    t.v_k = {1, 3};
    EXPECT_EQ(barycentric_map(t, {0, 0}), Eigen::Vector2d(0, 0));
    EXPECT_EQ(barycentric_map(t, {1, 0}), t.v_j);
    EXPECT_EQ(barycentric_map(t, {0, 1}), t.v_k);
    EXPECT_TRUE(barycentric_map(t, {1.0 / 3, 1.0 / 3}).isApprox(Eigen::Vector2d(1, 1)));
    EXPECT_THROW(barycentric_map(t, {0.7, 0.7}), Error);
    EXPECT_NEAR(t.projected_area(), 3.0, 1e-15);
}

TEST(LinearMeshMetric, EdgeGram)
{
    const PointCloud c = curvmesh::testing::cloud_from({{1, 1, 1}, {2, 1, 1}, {1, 1, 3}});
    RingTriangle t;
    t.vertex_indices = {0, 1, 2};
    const Eigen::Matrix2d g = linear_mesh_metric(t, c);
    EXPECT_EQ(g, (Eigen::Matrix2d() << 1, 0, 0, 4).finished());
}

TEST(LocalModel, SharedFilterMakesRingsConsistent)
{
    const auto& fx = curvmesh::testing::sphere_fixture(2000);
    const LocalModel& m = fx.model;
    std::map<std::array<Eigen::Index, 3>, int> count;
    for (const auto& ring : m.rings)
        for (const auto& t : ring.triangles) ++count[detail::triangle_key(t)];
    Eigen::Index unshared = 0;
    for (const auto& [key, c] : count)
        if (c != 3) ++unshared;
    EXPECT_EQ(m.stats.unshared_rings_kept, 0);
    EXPECT_EQ(unshared, 0);
    EXPECT_EQ(m.stats.empty_rings, 0);
    EXPECT_EQ(m.stats.failed_charts, 0);
}

TEST(LocalModel, RingVerticesAreValidSlots)
{
    const auto& m = curvmesh::testing::sphere_fixture(2000).model;
    for (std::size_t i = 0; i < m.rings.size(); ++i)
        for (const auto& t : m.rings[i].triangles) {
            EXPECT_EQ(t.base_index, static_cast<Eigen::Index>(i));
            EXPECT_EQ(t.vertex_indices[0], static_cast<Eigen::Index>(i));
            EXPECT_NE(t.vertex_indices[1], t.vertex_indices[2]);
        }
}

TEST(LocalModel, WithoutFilterRingsMayDisagree)
{
    const PointCloud c = sample_sphere(2000, 1);
    LocalModelOptions opts;
    opts.augment_candidates = false;
    opts.shared_triangles_only = false;
    const LocalModel m = build_local_model(c, opts);
    EXPECT_EQ(m.stats.augmented_points, 0);
    EXPECT_EQ(m.stats.unshared_triangles, 0);
    EXPECT_GT(m.stats.ring_triangles, 5 * 2000);
}

TEST(LocalModel, RejectsTooFewPoints)
{
    EXPECT_THROW(build_local_model(sample_sphere(10, 1)), Error);
}
