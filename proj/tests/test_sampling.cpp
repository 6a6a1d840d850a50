#include "test_support.hpp"

#include <algorithm>
#include <sstream>

using namespace curvmesh;

TEST(SampleSphere, SinglePointHasUnitNorm)
{
    const PointCloud c = sample_sphere(1, 42);
    ASSERT_EQ(c.size(), 1);
    EXPECT_NEAR(c.points.col(0).norm(), 1.0, 1e-12);
}

TEST(SampleSphere, MeanIsSmallAtN4000)
{
    const PointCloud c = sample_sphere(4000, 7);
    EXPECT_LE(c.points.rowwise().mean().norm(), 0.05);
}

TEST(SampleSphere, AllPointsOnSphere)
{
    const PointCloud c = sample_sphere(10000, 3);
    const Eigen::ArrayXd r = c.points.colwise().norm().array();
    EXPECT_LE((r - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_EQ(c.provenance, Provenance::sphere);
    EXPECT_EQ(c.intrinsic_dim_hint.value_or(0), 2);
}

TEST(SampleSphere, DeterministicPerSeed)
{
    const PointCloud a = sample_sphere(500, 11), b = sample_sphere(500, 11), c = sample_sphere(500, 12);
    EXPECT_TRUE(a.points.cwiseEqual(b.points).all());
    EXPECT_FALSE(a.points.cwiseEqual(c.points).all());
}

TEST(SampleSphere, RejectsZeroPoints)
{
    EXPECT_THROW(sample_sphere(0, 1), Error);
}

TEST(SampleTorus, PointsSatisfyImplicitEquation)
{
    const PointCloud c = sample_torus(16000, 5);
    ASSERT_EQ(c.size(), 16000);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const auto x = c.point(i);
        const double rho = std::hypot(x(0), x(1)) - 2.0;
        worst = std::max(worst, std::abs(rho * rho + x(2) * x(2) - 1.0));
    }
    EXPECT_LE(worst, 1e-12);
}

TEST(SampleTorus, AcceptanceRateIsTwoThirds)
{
    TorusSamplerStats stats;
    sample_torus(66667, 9, &stats);
    EXPECT_GE(stats.proposals, 90000);
    EXPECT_NEAR(static_cast<double>(stats.accepted) / static_cast<double>(stats.proposals), 2.0 / 3.0, 0.02);
}

TEST(SampleTorus, AreaUniformInTheta)
{
    // Density in theta is proportional to 2 + cos(theta): the outer half
    // (cos > 0) carries (pi + 1) / (2 pi) of the area.
    const PointCloud c = sample_torus(40000, 21);
    Eigen::Index outer = 0;
    for (Eigen::Index i = 0; i < c.size(); ++i)
        if (std::hypot(c.points(0, i), c.points(1, i)) > 2.0) ++outer;
    EXPECT_NEAR(static_cast<double>(outer) / 40000.0, (std::numbers::pi + 1.0) / (2.0 * std::numbers::pi), 0.01);
}

TEST(SampleTorus, Deterministic)
{
    EXPECT_TRUE(sample_torus(300, 4).points.cwiseEqual(sample_torus(300, 4).points).all());
}

TEST(RadialNoise, ZeroNoiseIsIdentity)
{
    const PointCloud c = sample_sphere(200, 1);
    const PointCloud n = add_radial_noise(c, 0.0, 5);
    EXPECT_TRUE(c.points.cwiseEqual(n.points).all());
}

TEST(RadialNoise, SupportBound)
{
    const PointCloud n = add_radial_noise(sample_sphere(5000, 1), 0.10, 5);
    const Eigen::ArrayXd r = n.points.colwise().norm().array();
    EXPECT_GE(r.minCoeff(), 0.95);
    EXPECT_LE(r.maxCoeff(), 1.05);
    EXPECT_EQ(n.provenance, Provenance::noisy_sphere);
}

TEST(RadialNoise, RadiiAreUniform)
{
    for (double eta : {0.001, 0.01, 0.10}) {
        const PointCloud n = add_radial_noise(sample_sphere(10000, 2), eta, 8);
        std::vector<double> r(static_cast<std::size_t>(n.size()));
        for (Eigen::Index i = 0; i < n.size(); ++i) r[static_cast<std::size_t>(i)] = n.points.col(i).norm();
        std::sort(r.begin(), r.end());
        double ks = 0.0;
        const double lo = 1.0 - eta / 2.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double cdf = std::clamp((r[i] - lo) / eta, 0.0, 1.0);
            ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / r.size()),
                           std::abs(cdf - static_cast<double>(i + 1) / r.size())});
        }
        EXPECT_LT(ks, 0.05) << "eta " << eta;
    }
}

TEST(RadialNoise, RejectsNonSphereClouds)
{
    EXPECT_THROW(add_radial_noise(sample_torus(100, 1), 0.1, 1), Error);
}

TEST(CloudCsv, RoundTripsWithDimensionComment)
{
    const PointCloud c = sample_sphere(50, 3);
    std::stringstream s;
    write_cloud_csv(s, c, true);
    const PointCloud back = read_cloud_csv(s);
    EXPECT_TRUE(back.points.cwiseEqual(c.points).all());
    EXPECT_EQ(back.provenance, Provenance::external_file);
}

TEST(CloudCsv, RejectsRaggedRows)
{
    std::stringstream s("1,2,3\n4,5\n");
    try {
        read_cloud_csv(s);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::io);
    }
}

TEST(CloudCsv, RejectsHeaderMismatch)
{
    std::stringstream s("# n=2\n1,2,3\n");
    EXPECT_THROW(read_cloud_csv(s), Error);
}
