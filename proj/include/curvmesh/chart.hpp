#pragma once

#include "curvmesh/errors.hpp"
#include "curvmesh/gmls.hpp"
#include "curvmesh/local_mesh.hpp"
#include "curvmesh/tangent.hpp"

#include <array>

namespace curvmesh {

/// Differential geometry of a curved chart at one point.
///
/// Coordinates are either the tangent-plane coordinates v of the GMLS chart
/// or the reference-simplex coordinates u of a curved ring triangle. The
/// coordinate basis is expressed in the frame of the base point: the first
/// two rows are tangent components, the remaining rows normal components.
struct ChartPointGeometry
{
    Eigen::Vector2d location = Eigen::Vector2d::Zero();
    Eigen::MatrixXd basis;                                       // n x 2
    Eigen::Matrix2d metric = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d inv_metric = Eigen::Matrix2d::Identity();
    double sqrt_det = 1.0;
    std::array<Eigen::Matrix2d, 2> metric_derivative{Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()}; // [s](m, t) = d_s g_mt
    Eigen::Vector2d sqrt_det_derivative = Eigen::Vector2d::Zero(); // d_s sqrt(det g)
    std::array<Eigen::Matrix2d, 2> christoffel{Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()}; // [q](s, t) = Gamma^q_st

    /// Matrix with entries (i, k) = Gamma^i_{m k}; the connection acting on
    /// the coordinate field d_m.
    Eigen::Matrix2d connection_block(int m) const
    {
        Eigen::Matrix2d out;
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k) out(i, k) = christoffel[static_cast<std::size_t>(i)](m, k);
        return out;
    }

    double det() const { return sqrt_det * sqrt_det; }
};

/// Geometry of the chart (w) -> (edges * w, p(edges * w)). With edges = I this
/// is the GMLS graph chart; with edges = [v_j v_k] it is a curved triangle.
///
/// Because the second derivatives of the embedding are constant in the
/// normal rows and zero in the tangent rows, everything follows in closed
/// form from q = edges^T grad p and K_c = edges^T Hess(p_c) edges:
///   g = edges^T edges + q q^T,
///   d_s g_mt = sum_c K_c(m,s) q_tc + q_mc K_c(t,s),
///   Gamma_{m,st} = sum_c q_mc K_c(s,t).
inline ChartPointGeometry chart_geometry_linear(const GmlsPolynomial& poly, const Eigen::Matrix2d& edges,
                                                const Eigen::Vector2d& w)
{
    const Eigen::Index codim = poly.codim();
    const Eigen::Vector2d v = edges * w;
    const Eigen::MatrixXd q = edges.transpose() * poly.gradient(v); // 2 x codim

    ChartPointGeometry geo;
    geo.location = w;
    geo.basis.resize(2 + codim, 2);
    geo.basis.topRows(2) = edges;
    geo.basis.bottomRows(codim) = q.transpose();
    geo.metric = edges.transpose() * edges + q * q.transpose();
    geo.metric(1, 0) = geo.metric(0, 1);
    geo.inv_metric = geo.metric.inverse();
    geo.sqrt_det = std::sqrt(geo.metric.determinant());

    Eigen::Matrix2d first_kind[2] = {Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()}; // [m](s,t)
    geo.metric_derivative = {Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()};
    for (Eigen::Index c = 0; c < codim; ++c) {
        const Eigen::Matrix2d kc = edges.transpose() * poly.hessian(c) * edges;
        for (int s = 0; s < 2; ++s)
            for (int m = 0; m < 2; ++m)
                for (int t = 0; t < 2; ++t)
                    geo.metric_derivative[static_cast<std::size_t>(s)](m, t) += kc(m, s) * q(t, c) + q(m, c) * kc(t, s);
        for (int m = 0; m < 2; ++m) first_kind[m] += q(m, c) * kc;
    }
    for (int qi = 0; qi < 2; ++qi)
        geo.christoffel[static_cast<std::size_t>(qi)] =
            geo.inv_metric(qi, 0) * first_kind[0] + geo.inv_metric(qi, 1) * first_kind[1];
    for (int s = 0; s < 2; ++s)
        geo.sqrt_det_derivative(s) =
            0.5 * geo.sqrt_det * (geo.inv_metric * geo.metric_derivative[static_cast<std::size_t>(s)]).trace();
    return geo;
}

/// Geometry of the GMLS graph chart at tangent coordinates v.
inline ChartPointGeometry chart_geometry(const GmlsPolynomial& poly, const Eigen::Vector2d& v)
{
    return chart_geometry_linear(poly, Eigen::Matrix2d::Identity(), v);
}

/// Embedding of a curved triangle in frame coordinates: (Phi_T(u), p(Phi_T(u))).
inline Eigen::VectorXd curved_triangle_embedding(const RingTriangle& tri, const GmlsPolynomial& poly,
                                                 const Eigen::Vector2d& u)
{
    const Eigen::Vector2d v = tri.edge_matrix() * u;
    Eigen::VectorXd x(2 + poly.codim());
    x.head(2) = v;
    x.tail(poly.codim()) = poly.value(v);
    return x;
}

/// Pullback geometry of a ring triangle lifted through the GMLS polynomial,
/// in reference-simplex coordinates u.
inline ChartPointGeometry curved_triangle_pullback(const RingTriangle& tri, const GmlsPolynomial& poly,
                                                   const Eigen::Vector2d& u)
{
    constexpr double slack = 1e-14;
    require(u.x() >= -slack && u.y() >= -slack && u.x() + u.y() <= 1.0 + slack, ErrorCode::invalid_argument,
            "point lies outside the reference simplex");
    const double scale = std::max(tri.v_j.squaredNorm(), tri.v_k.squaredNorm());
    require(scale > 0.0 && tri.projected_area() >= kDegenerateAreaFraction * scale, ErrorCode::degenerate_triangle,
            "ring triangle at point " + std::to_string(tri.base_index) + " is degenerate");
    return chart_geometry_linear(poly, tri.edge_matrix(), u);
}

enum class FrameMode { full, reduced };

/// Coordinates of frame vector t_k^(j) in the curved-chart basis of a
/// triangle of the ring of i, and the regression residual.
struct ChartVectorCoeffs
{
    Eigen::Vector2d a = Eigen::Vector2d::Zero();
    double residual = 0.0;
};

/// Least-squares representation of t_k^(j) (k is 0-based) in the coordinate
/// basis of `geo`. Reduced mode keeps only the tangent rows, which do not
/// depend on the evaluation point.
inline ChartVectorCoeffs frame_to_chart(const TangentFrame& frame_i, const TangentFrame& frame_j,
                                        const ChartPointGeometry& geo, int k, FrameMode mode)
{
    require(k >= 0 && k < frame_j.intrinsic_dim, ErrorCode::invalid_argument, "frame axis out of range");
    const Eigen::VectorXd target = frame_i.basis.transpose() * frame_j.basis.col(k);
    ChartVectorCoeffs out;
    if (mode == FrameMode::reduced) {
        const Eigen::Matrix2d r = geo.basis.topRows(2);
        const Eigen::Vector2d rhs = target.head(2);
        require(std::abs(r.determinant()) > 0.0, ErrorCode::degenerate_triangle, "singular chart basis");
        out.a = r.partialPivLu().solve(rhs);
        out.residual = (r * out.a - rhs).norm();
    } else {
        const Eigen::MatrixXd& r = geo.basis;
        const Eigen::Matrix2d normal = r.transpose() * r;
        require(normal.determinant() > 0.0, ErrorCode::degenerate_triangle, "singular chart basis");
        out.a = normal.ldlt().solve(r.transpose() * target);
        out.residual = (r * out.a - target).norm();
    }
    return out;
}

/// Overload that evaluates the triangle geometry first.
inline ChartVectorCoeffs frame_to_chart(const TangentFrame& frame_i, const TangentFrame& frame_j,
                                        const RingTriangle& tri, const GmlsPolynomial& poly,
                                        const Eigen::Vector2d& u, int k, FrameMode mode)
{
    return frame_to_chart(frame_i, frame_j, curved_triangle_pullback(tri, poly, u), k, mode);
}

} // namespace curvmesh
