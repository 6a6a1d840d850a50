#pragma once

#include "curvmesh/chart.hpp"
#include "curvmesh/errors.hpp"
#include "curvmesh/local_model.hpp"

#include <Eigen/Sparse>

#include <array>
#include <string_view>
#include <vector>

namespace curvmesh {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class OperatorKind { laplace_beltrami, bochner, hodge };

inline std::string_view to_string(OperatorKind op)
{
    switch (op) {
    case OperatorKind::laplace_beltrami: return "laplace_beltrami";
    case OperatorKind::bochner: return "bochner";
    case OperatorKind::hodge: return "hodge";
    }
    return "unknown";
}

/// Nodes and weights on the reference simplex {u1, u2 >= 0, u1 + u2 <= 1}.
struct QuadratureRule
{
    std::vector<Eigen::Vector2d> nodes;
    std::vector<double> weights;

    /// The three vertices, weight 1/6 each. Exact for affine integrands.
    static QuadratureRule vertex()
    {
        return {{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}, {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0}};
    }

    /// The three edge midpoints, weight 1/6 each. Exact for quadratics.
    static QuadratureRule edge_midpoint()
    {
        return {{{0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5}}, {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0}};
    }

    template <typename F>
    double integrate(F&& f) const
    {
        double total = 0.0;
        for (std::size_t q = 0; q < nodes.size(); ++q) total += weights[q] * f(nodes[q]);
        return total;
    }
};

/// Which rule each matrix uses. The vertex rule annihilates the products of
/// distinct hat functions, so mass matrices default to the midpoint rule.
enum class QuadratureMode { mixed, vertex, midpoint };

struct AssemblyOptions
{
    QuadratureMode quadrature = QuadratureMode::mixed;
    FrameMode frame_mode = FrameMode::reduced;
    /// A run fails when more than this fraction of ring triangles is skipped.
    double max_skipped_fraction = 0.01;

    QuadratureRule stiffness_rule() const
    {
        return quadrature == QuadratureMode::midpoint ? QuadratureRule::edge_midpoint() : QuadratureRule::vertex();
    }
    QuadratureRule mass_rule() const
    {
        return quadrature == QuadratureMode::vertex ? QuadratureRule::vertex() : QuadratureRule::edge_midpoint();
    }
};

struct AssemblyStats
{
    Eigen::Index ring_triangles = 0;
    Eigen::Index skipped_triangles = 0;
    Eigen::Index dropped_triangles = 0;
    Eigen::Index empty_rings = 0;
    Eigen::Index quadrature_points = 0;

    double skipped_fraction() const
    {
        return ring_triangles > 0 ? static_cast<double>(skipped_triangles) / static_cast<double>(ring_triangles) : 0.0;
    }
};

/// Symmetrized stiffness/mass pair plus the raw one-sided assemblies.
struct OperatorPencil
{
    OperatorKind op = OperatorKind::laplace_beltrami;
    Eigen::Index dim = 0;
    SparseMatrix S_raw, M_raw;
    SparseMatrix A, B;
    AssemblyStats stats;
};

/// (S + S^T)/2 and (M + M^T)/2. Entry (i,j) and (j,i) are produced by the
/// same commutative sum, so the outputs are exactly symmetric.
inline std::pair<SparseMatrix, SparseMatrix> symmetrize(const SparseMatrix& S, const SparseMatrix& M)
{
    require(S.rows() == S.cols() && M.rows() == M.cols() && S.rows() == M.rows(), ErrorCode::invalid_argument,
            "symmetrize needs square matrices of equal size");
    const SparseMatrix St = S.transpose();
    const SparseMatrix Mt = M.transpose();
    SparseMatrix A = 0.5 * (S + St);
    SparseMatrix B = 0.5 * (M + Mt);
    A.makeCompressed();
    B.makeCompressed();
    return {std::move(A), std::move(B)};
}

namespace hat {

/// Barycentric hat functions of the reference simplex: slot 0 is the base
/// vertex (1 - u1 - u2), slot 1 is u1, slot 2 is u2.
inline double value(int slot, const Eigen::Vector2d& u)
{
    switch (slot) {
    case 0: return 1.0 - u.x() - u.y();
    case 1: return u.x();
    default: return u.y();
    }
}

inline Eigen::Vector2d gradient(int slot)
{
    switch (slot) {
    case 0: return {-1.0, -1.0};
    case 1: return {1.0, 0.0};
    default: return {0.0, 1.0};
    }
}

} // namespace hat

/// grad_g of the vector field phi * d_{u_m} as a (2,0) tensor:
///   (phi * Gamma_m + e_m grad(phi)^T) g^{-1},  (Gamma_m)_{ik} = Gamma^i_{mk}.
inline Eigen::Matrix2d bochner_hat_gradient(const ChartPointGeometry& geo, int slot, int m, const Eigen::Vector2d& u)
{
    Eigen::Matrix2d partial = hat::value(slot, u) * geo.connection_block(m);
    partial.row(m) += hat::gradient(slot).transpose();
    return partial * geo.inv_metric;
}

/// Riemannian inner product of (2,0) tensors: trace(a g b^T g).
inline double tensor_inner(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b, const Eigen::Matrix2d& g)
{
    return (a * g * b.transpose() * g).trace();
}

/// For the field phi * d_{u_m}: the coefficient of d(flat v) on du1^du2 and
/// the codifferential of flat v, for m = 0, 1.
struct HodgeHatTerms
{
    Eigen::Vector2d curl = Eigen::Vector2d::Zero();
    Eigen::Vector2d codiff = Eigen::Vector2d::Zero();
};

inline HodgeHatTerms hodge_hat_terms(const ChartPointGeometry& geo, int slot, const Eigen::Vector2d& u)
{
    const double phi = hat::value(slot, u);
    const Eigen::Vector2d grad = hat::gradient(slot);
    const auto& g = geo.metric;
    const auto& dg = geo.metric_derivative;
    HodgeHatTerms out;
    for (int m = 0; m < 2; ++m) {
        // d(phi g_m1 du1 + phi g_m2 du2) = (d_1(phi g_m2) - d_2(phi g_m1)) du1^du2
        out.curl(m) = grad.x() * g(m, 1) + phi * dg[0](m, 1) - grad.y() * g(m, 0) - phi * dg[1](m, 0);
        // d* flat v = -div v = -(1/sqrt g) d_m(phi sqrt g)
        out.codiff(m) = -grad(m) - phi * geo.sqrt_det_derivative(m) / geo.sqrt_det;
    }
    return out;
}

namespace detail {

class TripletSink
{
public:
    explicit TripletSink(Eigen::Index dim) : m_dim(dim) {}

    void add(Eigen::Index r, Eigen::Index c, double v) { m_triplets.emplace_back(r, c, v); }

    SparseMatrix finish()
    {
        SparseMatrix m(m_dim, m_dim);
        m.setFromTriplets(m_triplets.begin(), m_triplets.end());
        m.makeCompressed();
        m_triplets.clear();
        return m;
    }

private:
    Eigen::Index m_dim;
    std::vector<Eigen::Triplet<double>> m_triplets;
};

inline void check_skipped(const AssemblyStats& stats, double limit)
{
    require(stats.skipped_fraction() <= limit, ErrorCode::skipped_triangles_exceeded,
            std::to_string(stats.skipped_triangles) + " of " + std::to_string(stats.ring_triangles) +
                " ring triangles were skipped");
}

inline AssemblyStats base_stats(const LocalModel& model)
{
    AssemblyStats s;
    s.ring_triangles = model.stats.ring_triangles;
    s.dropped_triangles = model.stats.dropped_triangles;
    s.empty_rings = model.stats.empty_rings + model.stats.degenerate_neighborhoods;
    return s;
}

/// Visits every ring triangle with a valid chart, evaluating the curved
/// geometry at the nodes of `rule`. Triangles whose geometry throws a
/// degenerate-triangle error are counted as skipped.
template <typename Visit>
void for_each_curved_triangle(const LocalModel& model, const QuadratureRule& rule, AssemblyStats& stats,
                              Visit&& visit)
{
    std::vector<ChartPointGeometry> geos(rule.nodes.size());
    for (Eigen::Index i = 0; i < model.size(); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const auto& ring = model.rings[ui];
        if (!model.chart_valid[ui]) {
            stats.skipped_triangles += static_cast<Eigen::Index>(ring.triangles.size());
            continue;
        }
        for (const auto& tri : ring.triangles) {
            try {
                for (std::size_t q = 0; q < rule.nodes.size(); ++q)
                    geos[q] = curved_triangle_pullback(tri, model.polys[ui], rule.nodes[q]);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::degenerate_triangle) throw;
                ++stats.skipped_triangles;
                continue;
            }
            stats.quadrature_points += static_cast<Eigen::Index>(rule.nodes.size());
            visit(i, tri, geos);
        }
    }
}

/// Chart coordinates of t_0, t_1 of each triangle vertex's frame, at one
/// quadrature node. coeffs[slot][k].
using VertexFrameCoeffs = std::array<std::array<Eigen::Vector2d, 2>, 3>;

inline VertexFrameCoeffs vertex_frame_coeffs(const LocalModel& model, const RingTriangle& tri,
                                             const ChartPointGeometry& geo, FrameMode mode)
{
    VertexFrameCoeffs out;
    const auto& fi = model.frames[static_cast<std::size_t>(tri.base_index)];
    for (int slot = 0; slot < 3; ++slot) {
        const auto& fj =
            model.vector_frames[static_cast<std::size_t>(tri.vertex_indices[static_cast<std::size_t>(slot)])];
        for (int k = 0; k < 2; ++k)
            out[static_cast<std::size_t>(slot)][static_cast<std::size_t>(k)] = frame_to_chart(fi, fj, geo, k, mode).a;
    }
    return out;
}

} // namespace detail

/// Scalar hat-function stiffness and mass on curved first rings. Row i
/// integrates over the ring of i only; symmetrization reconciles rows.
inline OperatorPencil assemble_laplace_beltrami(const LocalModel& model, const AssemblyOptions& options = {})
{
    const Eigen::Index n = model.size();
    OperatorPencil pencil;
    pencil.op = OperatorKind::laplace_beltrami;
    pencil.dim = n;
    pencil.stats = detail::base_stats(model);

    detail::TripletSink stiff(n), mass(n);
    const QuadratureRule srule = options.stiffness_rule();
    const QuadratureRule mrule = options.mass_rule();
    detail::for_each_curved_triangle(model, srule, pencil.stats,
        [&](Eigen::Index i, const RingTriangle& tri, const std::vector<ChartPointGeometry>& geos) {
            for (int s = 0; s < 3; ++s) {
                double value = 0.0;
                for (std::size_t q = 0; q < geos.size(); ++q)
                    value += srule.weights[q] * hat::gradient(0).dot(geos[q].inv_metric * hat::gradient(s)) *
                             geos[q].sqrt_det;
                stiff.add(i, tri.vertex_indices[static_cast<std::size_t>(s)], tri.weight * value);
            }
        });
    AssemblyStats mass_stats = detail::base_stats(model);
    detail::for_each_curved_triangle(model, mrule, mass_stats,
        [&](Eigen::Index i, const RingTriangle& tri, const std::vector<ChartPointGeometry>& geos) {
            for (int s = 0; s < 3; ++s) {
                double value = 0.0;
                for (std::size_t q = 0; q < geos.size(); ++q)
                    value += mrule.weights[q] * hat::value(0, mrule.nodes[q]) * hat::value(s, mrule.nodes[q]) *
                             geos[q].sqrt_det;
                mass.add(i, tri.vertex_indices[static_cast<std::size_t>(s)], tri.weight * value);
            }
        });
    pencil.stats.quadrature_points += mass_stats.quadrature_points;
    detail::check_skipped(pencil.stats, options.max_skipped_fraction);

    pencil.S_raw = stiff.finish();
    pencil.M_raw = mass.finish();
    std::tie(pencil.A, pencil.B) = symmetrize(pencil.S_raw, pencil.M_raw);
    return pencil;
}

/// Flat-mesh variant: the constant ambient Gram metric of each ring triangle
/// (no GMLS lift). Kept as a baseline for comparisons.
inline OperatorPencil assemble_laplace_beltrami_linear(const PointCloud& cloud, const LocalModel& model)
{
    const Eigen::Index n = model.size();
    OperatorPencil pencil;
    pencil.op = OperatorKind::laplace_beltrami;
    pencil.dim = n;
    pencil.stats = detail::base_stats(model);
    detail::TripletSink stiff(n), mass(n);
    // Closed forms for constant metrics: integral of phi_0 phi_s is 1/12 on
    // the diagonal and 1/24 off it, times sqrt(det g).
    for (Eigen::Index i = 0; i < n; ++i) {
        for (const auto& tri : model.rings[static_cast<std::size_t>(i)].triangles) {
            const Eigen::Matrix2d g = linear_mesh_metric(tri, cloud);
            const double det = g.determinant();
            if (!(det > 0.0)) {
                ++pencil.stats.skipped_triangles;
                continue;
            }
            const double sq = std::sqrt(det);
            const Eigen::Matrix2d ginv = g.inverse();
            for (int s = 0; s < 3; ++s) {
                const auto j = tri.vertex_indices[static_cast<std::size_t>(s)];
                stiff.add(i, j, 0.5 * hat::gradient(0).dot(ginv * hat::gradient(s)) * sq);
                mass.add(i, j, (s == 0 ? 1.0 / 12.0 : 1.0 / 24.0) * sq);
            }
        }
    }
    pencil.S_raw = stiff.finish();
    pencil.M_raw = mass.finish();
    std::tie(pencil.A, pencil.B) = symmetrize(pencil.S_raw, pencil.M_raw);
    return pencil;
}

/// Mass matrix for tangent vector fields in the per-point frame basis
/// (2N x 2N, dof 2i + k is the coefficient of t_k at x_i).
inline SparseMatrix assemble_vector_mass(const LocalModel& model, const AssemblyOptions& options,
                                         AssemblyStats* stats = nullptr)
{
    const Eigen::Index n = model.size();
    detail::TripletSink sink(2 * n);
    const QuadratureRule rule = options.mass_rule();
    AssemblyStats local = detail::base_stats(model);
    detail::for_each_curved_triangle(model, rule, local,
        [&](Eigen::Index i, const RingTriangle& tri, const std::vector<ChartPointGeometry>& geos) {
            Eigen::Matrix2d block[3] = {Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()};
            for (std::size_t q = 0; q < geos.size(); ++q) {
                const auto& geo = geos[q];
                const auto coeffs = detail::vertex_frame_coeffs(model, tri, geo, options.frame_mode);
                const double phi0 = hat::value(0, rule.nodes[q]);
                for (int s = 0; s < 3; ++s) {
                    const double w = tri.weight * rule.weights[q] * phi0 * hat::value(s, rule.nodes[q]) * geo.sqrt_det;
                    if (w == 0.0) continue;
                    for (int k1 = 0; k1 < 2; ++k1)
                        for (int k2 = 0; k2 < 2; ++k2)
                            block[s](k1, k2) += w * coeffs[0][static_cast<std::size_t>(k1)].dot(
                                                        geo.metric * coeffs[static_cast<std::size_t>(s)][static_cast<std::size_t>(k2)]);
                }
            }
            for (int s = 0; s < 3; ++s) {
                const auto j = tri.vertex_indices[static_cast<std::size_t>(s)];
                for (int k1 = 0; k1 < 2; ++k1)
                    for (int k2 = 0; k2 < 2; ++k2) sink.add(2 * i + k1, 2 * j + k2, block[s](k1, k2));
            }
        });
    detail::check_skipped(local, options.max_skipped_fraction);
    if (stats) *stats = local;
    return sink.finish();
}

namespace detail {

template <typename BlockIntegrand>
SparseMatrix assemble_vector_stiffness(const LocalModel& model, const AssemblyOptions& options,
                                       AssemblyStats* stats, BlockIntegrand&& integrand)
{
    const Eigen::Index n = model.size();
    TripletSink sink(2 * n);
    const QuadratureRule rule = options.stiffness_rule();
    AssemblyStats local = base_stats(model);
    for_each_curved_triangle(model, rule, local,
        [&](Eigen::Index i, const RingTriangle& tri, const std::vector<ChartPointGeometry>& geos) {
            Eigen::Matrix2d block[3] = {Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()};
            for (std::size_t q = 0; q < geos.size(); ++q) {
                const auto coeffs = vertex_frame_coeffs(model, tri, geos[q], options.frame_mode);
                integrand(geos[q], rule.nodes[q], coeffs, tri.weight * rule.weights[q] * geos[q].sqrt_det, block);
            }
            for (int s = 0; s < 3; ++s) {
                const auto j = tri.vertex_indices[static_cast<std::size_t>(s)];
                for (int k1 = 0; k1 < 2; ++k1)
                    for (int k2 = 0; k2 < 2; ++k2) sink.add(2 * i + k1, 2 * j + k2, block[s](k1, k2));
            }
        });
    check_skipped(local, options.max_skipped_fraction);
    if (stats) *stats = local;
    return sink.finish();
}

} // namespace detail

/// Stiffness of the Bochner Laplacian: pairings of covariant gradients of
/// hat-weighted frame fields, <grad_g V, grad_g W>_g = trace(a g b^T g).
inline SparseMatrix assemble_bochner_stiffness(const LocalModel& model, const AssemblyOptions& options,
                                               AssemblyStats* stats = nullptr)
{
    return detail::assemble_vector_stiffness(model, options, stats,
        [](const ChartPointGeometry& geo, const Eigen::Vector2d& u, const detail::VertexFrameCoeffs& coeffs,
           double weight, Eigen::Matrix2d* block) {
            std::array<std::array<Eigen::Matrix2d, 2>, 3> grads; // [slot][k]
            for (int s = 0; s < 3; ++s) {
                const Eigen::Matrix2d g0 = bochner_hat_gradient(geo, s, 0, u);
                const Eigen::Matrix2d g1 = bochner_hat_gradient(geo, s, 1, u);
                for (int k = 0; k < 2; ++k) {
                    const auto& a = coeffs[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
                    grads[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)] = a(0) * g0 + a(1) * g1;
                }
            }
            for (int s = 0; s < 3; ++s)
                for (int k1 = 0; k1 < 2; ++k1)
                    for (int k2 = 0; k2 < 2; ++k2)
                        block[s](k1, k2) += weight * tensor_inner(grads[0][static_cast<std::size_t>(k1)],
                                                                  grads[static_cast<std::size_t>(s)][static_cast<std::size_t>(k2)],
                                                                  geo.metric);
        });
}

/// Stiffness of the Hodge Laplacian on vector fields via the flat
/// isomorphism: <d flat V, d flat W> + <d* flat V, d* flat W>.
inline SparseMatrix assemble_hodge_stiffness(const LocalModel& model, const AssemblyOptions& options,
                                             AssemblyStats* stats = nullptr)
{
    return detail::assemble_vector_stiffness(model, options, stats,
        [](const ChartPointGeometry& geo, const Eigen::Vector2d& u, const detail::VertexFrameCoeffs& coeffs,
           double weight, Eigen::Matrix2d* block) {
            double curl[3][2], codiff[3][2];
            for (int s = 0; s < 3; ++s) {
                const HodgeHatTerms t = hodge_hat_terms(geo, s, u);
                for (int k = 0; k < 2; ++k) {
                    const auto& a = coeffs[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
                    curl[s][k] = a.dot(t.curl);
                    codiff[s][k] = a.dot(t.codiff);
                }
            }
            // <du1^du2, du1^du2>_g = 1 / det g
            const double two_form = 1.0 / geo.det();
            for (int s = 0; s < 3; ++s)
                for (int k1 = 0; k1 < 2; ++k1)
                    for (int k2 = 0; k2 < 2; ++k2)
                        block[s](k1, k2) += weight * (two_form * curl[0][k1] * curl[s][k2] + codiff[0][k1] * codiff[s][k2]);
        });
}

/// Full pencil for a vector operator.
inline OperatorPencil assemble_vector_pencil(const LocalModel& model, OperatorKind op,
                                             const AssemblyOptions& options = {})
{
    require(op != OperatorKind::laplace_beltrami, ErrorCode::invalid_argument,
            "use assemble_laplace_beltrami for functions");
    OperatorPencil pencil;
    pencil.op = op;
    pencil.dim = 2 * model.size();
    AssemblyStats mass_stats;
    pencil.M_raw = assemble_vector_mass(model, options, &mass_stats);
    pencil.S_raw = op == OperatorKind::bochner ? assemble_bochner_stiffness(model, options, &pencil.stats)
                                               : assemble_hodge_stiffness(model, options, &pencil.stats);
    pencil.stats.quadrature_points += mass_stats.quadrature_points;
    std::tie(pencil.A, pencil.B) = symmetrize(pencil.S_raw, pencil.M_raw);
    return pencil;
}

/// Bochner and Hodge pencils sharing one mass matrix.
inline std::pair<OperatorPencil, OperatorPencil> assemble_bochner_and_hodge(const LocalModel& model,
                                                                            const AssemblyOptions& options = {})
{
    AssemblyStats mass_stats;
    const SparseMatrix mass = assemble_vector_mass(model, options, &mass_stats);
    std::pair<OperatorPencil, OperatorPencil> out;
    auto finish = [&](OperatorPencil& p, OperatorKind op, SparseMatrix stiffness, const AssemblyStats& st) {
        p.op = op;
        p.dim = 2 * model.size();
        p.stats = st;
        p.stats.quadrature_points += mass_stats.quadrature_points;
        p.M_raw = mass;
        p.S_raw = std::move(stiffness);
        std::tie(p.A, p.B) = symmetrize(p.S_raw, p.M_raw);
    };
    AssemblyStats bs, hs;
    SparseMatrix sb = assemble_bochner_stiffness(model, options, &bs);
    SparseMatrix sh = assemble_hodge_stiffness(model, options, &hs);
    finish(out.first, OperatorKind::bochner, std::move(sb), bs);
    finish(out.second, OperatorKind::hodge, std::move(sh), hs);
    return out;
}

} // namespace curvmesh
