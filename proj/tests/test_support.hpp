#pragma once

#include "curvmesh.hpp"

#include <gtest/gtest.h>

#include <map>
#include <numbers>

namespace curvmesh::testing {

/// Sphere cloud plus local model, cached per (N, seed) for the whole binary.
struct SphereFixture
{
    PointCloud cloud;
    LocalModel model;
};

inline const SphereFixture& sphere_fixture(Eigen::Index n, std::uint64_t seed = 1)
{
    static std::map<std::pair<Eigen::Index, std::uint64_t>, SphereFixture> cache;
    auto it = cache.find({n, seed});
    if (it == cache.end()) {
        SphereFixture f;
        f.cloud = sample_sphere(n, seed);
        f.model = build_local_model(f.cloud);
        it = cache.emplace(std::make_pair(n, seed), std::move(f)).first;
    }
    return it->second;
}

/// Evenly spread points on the unit sphere (golden-angle spiral).
inline PointCloud fibonacci_sphere(Eigen::Index n)
{
    PointCloud c;
    c.points.resize(3, n);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
        const double r = std::sqrt(1.0 - z * z);
        const double a = golden * static_cast<double>(i);
        c.points.col(i) << r * std::cos(a), r * std::sin(a), z;
    }
    c.intrinsic_dim_hint = 2;
    c.provenance = Provenance::sphere;
    return c;
}

inline PointCloud cloud_from(const std::vector<Eigen::Vector3d>& pts)
{
    PointCloud c;
    c.points.resize(3, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) c.points.col(static_cast<Eigen::Index>(i)) = pts[i];
    return c;
}

/// Frame with tangent e_x, e_y and normal e_z.
inline TangentFrame identity_frame(Eigen::Index base = 0)
{
    TangentFrame f;
    f.base_index = base;
    f.basis = Eigen::Matrix3d::Identity();
    f.pca_eigenvalues = Eigen::Vector3d(1.0, 1.0, 0.0);
    return f;
}

inline GmlsPolynomial quadratic(double a, double b, double c, double d, double e, double f)
{
    GmlsPolynomial p;
    p.coeffs.resize(6, 1);
    p.coeffs << a, b, c, d, e, f;
    return p;
}

inline double max_abs_asymmetry(const Eigen::SparseMatrix<double>& m)
{
    const Eigen::MatrixXd d = Eigen::MatrixXd(m) - Eigen::MatrixXd(m.transpose());
    return d.cwiseAbs().maxCoeff();
}

} // namespace curvmesh::testing
