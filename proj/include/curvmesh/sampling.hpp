#pragma once

#include "curvmesh/errors.hpp"
#include "curvmesh/point_cloud.hpp"
#include "curvmesh/rng.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>

namespace curvmesh {

/// Uniform samples on the unit sphere in R^3: Gaussian draws, normalized.
inline PointCloud sample_sphere(Eigen::Index n_points, std::uint64_t seed)
{
    require(n_points >= 1, ErrorCode::invalid_argument, "sample_sphere needs n_points >= 1");
    Xoshiro256 rng(seed);
    PointCloud cloud;
    cloud.points.resize(3, n_points);
    for (Eigen::Index i = 0; i < n_points; ++i) {
        Eigen::Vector3d w;
        do {
            w = {rng.normal(), rng.normal(), rng.normal()};
        } while (w.squaredNorm() == 0.0);
        cloud.points.col(i) = w / w.norm();
    }
    cloud.intrinsic_dim_hint = 2;
    cloud.seed = seed;
    cloud.provenance = Provenance::sphere;
    return cloud;
}

struct TorusSamplerStats
{
    std::int64_t proposals = 0;
    std::int64_t accepted = 0;
};

/// Embedding of the torus with major radius 2 and minor radius 1.
inline Eigen::Vector3d torus_point(double theta, double phi)
{
    const double ring = 2.0 + std::cos(theta);
    return {ring * std::cos(phi), ring * std::sin(phi), std::sin(theta)};
}

/// Area-uniform samples on the (2,1) torus. Angle pairs are drawn uniformly
/// and accepted with probability (2 + cos theta) / 3. The loop gives up after
/// 100 * n_points proposals.
inline PointCloud sample_torus(Eigen::Index n_points, std::uint64_t seed,
                               TorusSamplerStats* stats = nullptr)
{
    require(n_points >= 1, ErrorCode::invalid_argument, "sample_torus needs n_points >= 1");
    Xoshiro256 rng(seed);
    PointCloud cloud;
    cloud.points.resize(3, n_points);
    const std::int64_t budget = 100 * static_cast<std::int64_t>(n_points);
    std::int64_t proposals = 0;
    Eigen::Index accepted = 0;
    while (accepted < n_points) {
        require(proposals < budget, ErrorCode::sampling_exhausted,
                "torus rejection sampler exceeded " + std::to_string(budget) + " proposals");
        ++proposals;
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double w = rng.uniform();
        if (w <= 2.0 / 3.0 + std::cos(theta) / 3.0) cloud.points.col(accepted++) = torus_point(theta, phi);
    }
    if (stats) *stats = {proposals, static_cast<std::int64_t>(accepted)};
    cloud.intrinsic_dim_hint = 2;
    cloud.seed = seed;
    cloud.provenance = Provenance::torus;
    return cloud;
}

/// Scales every point by (1 + eps), eps ~ Unif[-eta/2, eta/2].
inline PointCloud add_radial_noise(const PointCloud& cloud, double eta, std::uint64_t seed)
{
    require(cloud.provenance == Provenance::sphere, ErrorCode::invalid_argument,
            "radial noise applies to sphere clouds only");
    require(eta >= 0.0, ErrorCode::invalid_argument, "noise magnitude must be nonnegative");
    PointCloud noisy = cloud;
    noisy.provenance = Provenance::noisy_sphere;
    if (eta == 0.0) return noisy;
    Xoshiro256 rng = Xoshiro256::stream(seed, 0x6e6f697365ull);
    for (Eigen::Index i = 0; i < noisy.size(); ++i)
        noisy.points.col(i) *= 1.0 + rng.uniform(-0.5 * eta, 0.5 * eta);
    return noisy;
}

} // namespace curvmesh
