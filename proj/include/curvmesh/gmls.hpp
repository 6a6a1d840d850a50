#pragma once

#include "curvmesh/errors.hpp"
#include "curvmesh/tangent.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <functional>

namespace curvmesh {

/// Quadratic graph over the tangent chart of a base point,
///   p(v) = a v1^2 + b v2^2 + c v1 v2 + d v1 + e v2 + f,
/// with one coefficient column per normal direction (n - d columns).
struct GmlsPolynomial
{
    enum Coefficient { A = 0, B, C, D, E, F };

    Eigen::Index base_index = 0;
    Eigen::Matrix<double, 6, Eigen::Dynamic> coeffs; // rows a..f, one column per normal component
    double fit_residual = 0.0;                       // weighted RMS
    double condition_number = 1.0;

    Eigen::Index codim() const { return coeffs.cols(); }

    Eigen::VectorXd value(const Eigen::Vector2d& v) const
    {
        Eigen::Matrix<double, 6, 1> mono;
        mono << v.x() * v.x(), v.y() * v.y(), v.x() * v.y(), v.x(), v.y(), 1.0;
        return coeffs.transpose() * mono;
    }

    /// 2 x codim; column c is the gradient of component c.
    Eigen::MatrixXd gradient(const Eigen::Vector2d& v) const
    {
        Eigen::MatrixXd g(2, codim());
        for (Eigen::Index c = 0; c < codim(); ++c) {
            g(0, c) = 2.0 * coeffs(A, c) * v.x() + coeffs(C, c) * v.y() + coeffs(D, c);
            g(1, c) = 2.0 * coeffs(B, c) * v.y() + coeffs(C, c) * v.x() + coeffs(E, c);
        }
        return g;
    }

    Eigen::Matrix2d hessian(Eigen::Index c) const
    {
        Eigen::Matrix2d h;
        h << 2.0 * coeffs(A, c), coeffs(C, c), coeffs(C, c), 2.0 * coeffs(B, c);
        return h;
    }
};

/// The step weight: 1 at the base point, 1/k elsewhere.
inline double gmls_step_weight(double distance, Eigen::Index k)
{
    return distance == 0.0 ? 1.0 : 1.0 / static_cast<double>(k);
}

struct GmlsOptions
{
    std::function<double(double, Eigen::Index)> weight = gmls_step_weight;
    /// Fit in coordinates scaled by the neighborhood radius, then map back.
    bool normalize_diameter = false;
    double max_condition = 1e12;
};

/// Weighted least-squares fit of the normal components over the tangent
/// coordinates, solved by column-pivoting QR on the sqrt-weighted design.
inline GmlsPolynomial gmls_fit(const ProjectedNeighborhood& proj, const GmlsOptions& options = {})
{
    require(proj.coords.rows() == 2, ErrorCode::invalid_argument, "GMLS charts need d = 2");
    const Eigen::Index k = proj.size();
    require(k >= 6, ErrorCode::insufficient_neighbors,
            "quadratic fit needs at least 6 neighbors, got " + std::to_string(k));

    double scale = 1.0;
    if (options.normalize_diameter) {
        const double r = proj.coords.colwise().norm().maxCoeff();
        if (r > 0.0) scale = 1.0 / r;
    }

    Eigen::MatrixXd design(k, 6);
    Eigen::MatrixXd rhs(k, proj.normal_components.rows());
    for (Eigen::Index r = 0; r < k; ++r) {
        const double w = std::sqrt(options.weight(proj.ambient_distances[static_cast<std::size_t>(r)], k));
        const double x = proj.coords(0, r) * scale, y = proj.coords(1, r) * scale;
        design.row(r) << x * x, y * y, x * y, x, y, 1.0;
        design.row(r) *= w;
        rhs.row(r) = w * proj.normal_components.col(r).transpose();
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
    const auto& sv = svd.singularValues();
    const double cond = sv(5) > 0.0 ? sv(0) / sv(5) : std::numeric_limits<double>::infinity();
    require(cond <= options.max_condition, ErrorCode::ill_conditioned_fit,
            "design matrix at point " + std::to_string(proj.base_index) + " has condition number " +
                std::to_string(cond));

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    GmlsPolynomial poly;
    poly.base_index = proj.base_index;
    poly.coeffs = qr.solve(rhs);
    poly.condition_number = cond;

    const Eigen::MatrixXd resid = design * poly.coeffs - rhs;
    double wsum = 0.0;
    for (Eigen::Index r = 0; r < k; ++r)
        wsum += options.weight(proj.ambient_distances[static_cast<std::size_t>(r)], k);
    poly.fit_residual = std::sqrt(resid.squaredNorm() / wsum);

    if (scale != 1.0) {
        poly.coeffs.topRows(3) *= scale * scale;
        poly.coeffs.middleRows(3, 2) *= scale;
    }
    return poly;
}

/// Orthonormal frame whose tangent columns span the tangent plane of the
/// fitted graph at the base point: t_k + sum_c (d_k q_c)(0) n_c, followed by
/// Gram-Schmidt. Normal columns are the PCA normals made orthogonal to it.
inline TangentFrame gmls_tangent_frame(const TangentFrame& pca, const GmlsPolynomial& poly)
{
    require(poly.codim() == pca.basis.cols() - pca.intrinsic_dim, ErrorCode::invalid_argument,
            "polynomial and frame disagree on the codimension");
    TangentFrame out = pca;
    const Eigen::MatrixXd slope = poly.gradient(Eigen::Vector2d::Zero()); // 2 x codim
    out.basis.leftCols(pca.intrinsic_dim) = pca.tangent() + pca.normal() * slope.transpose();
    for (Eigen::Index c = 0; c < out.basis.cols(); ++c) {
        for (Eigen::Index p = 0; p < c; ++p) out.basis.col(c) -= out.basis.col(p).dot(out.basis.col(c)) * out.basis.col(p);
        const double norm = out.basis.col(c).norm();
        require(norm > 0.0, ErrorCode::ill_conditioned_fit, "fitted tangent plane is degenerate");
        out.basis.col(c) /= norm;
    }
    return out;
}

} // namespace curvmesh
