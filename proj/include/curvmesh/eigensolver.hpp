#pragma once

#include "curvmesh/errors.hpp"
#include "curvmesh/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <vector>

namespace curvmesh {

struct SolverStats
{
    int iterations = 0;
    int restarts = 0;
    Eigen::Index block_size = 0;
    double sigma = 0.0;
    bool used_ldlt = false;
};

struct EigenResult
{
    Eigen::VectorXd eigenvalues;  // ascending
    Eigen::MatrixXd eigenvectors; // one B-orthonormal column per eigenvalue
    std::vector<double> residuals;
    SolverStats solver_stats;
};

struct EigenSolverOptions
{
    double tol = 1e-8;
    int max_iterations = 500;
    /// Shift for the factorization of A - sigma B. Must lie below the wanted
    /// eigenvalues.
    double sigma = -0.5;
    /// Subspace size; 0 selects 2L + 8.
    Eigen::Index block_size = 0;
    std::uint64_t seed = 0x5eed;
};

namespace detail {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// LLT of a sparse SPD matrix, falling back to LDLT for indefinite input.
class ShiftedFactor
{
public:
    explicit ShiftedFactor(const SparseMatrix& m)
    {
        m_llt.compute(m);
        if (m_llt.info() == Eigen::Success) return;
        m_use_ldlt = true;
        m_ldlt.compute(m);
        require(m_ldlt.info() == Eigen::Success, ErrorCode::convergence, "shifted matrix is singular");
        const auto& d = m_ldlt.vectorD();
        require(d.cwiseAbs().minCoeff() > 0.0, ErrorCode::convergence, "shifted matrix is singular");
    }

    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const
    {
        return m_use_ldlt ? Eigen::MatrixXd(m_ldlt.solve(rhs)) : Eigen::MatrixXd(m_llt.solve(rhs));
    }

    bool used_ldlt() const { return m_use_ldlt; }

private:
    Eigen::SimplicialLLT<SparseMatrix> m_llt;
    Eigen::SimplicialLDLT<SparseMatrix> m_ldlt;
    bool m_use_ldlt = false;
};

inline std::vector<double> pencil_residuals(const SparseMatrix& A, const SparseMatrix& B, const Eigen::MatrixXd& X,
                                            const Eigen::VectorXd& lambda, Eigen::Index count)
{
    std::vector<double> out(static_cast<std::size_t>(count));
    const Eigen::MatrixXd AX = A * X.leftCols(count);
    const Eigen::MatrixXd BX = B * X.leftCols(count);
    for (Eigen::Index j = 0; j < count; ++j) {
        const double denom = BX.col(j).norm();
        out[static_cast<std::size_t>(j)] =
            denom > 0.0 ? (AX.col(j) - lambda(j) * BX.col(j)).norm() / denom : std::numeric_limits<double>::infinity();
    }
    return out;
}

inline void check_symmetric_pair(const SparseMatrix& A, const SparseMatrix& B)
{
    require(A.rows() == A.cols() && B.rows() == B.cols() && A.rows() == B.rows(), ErrorCode::invalid_argument,
            "pencil matrices must be square and of equal size");
    for (const SparseMatrix* m : {&A, &B}) {
        const SparseMatrix t = m->transpose();
        require((*m - t).norm() <= 1e-12 * m->norm(), ErrorCode::invalid_argument, "pencil matrices must be symmetric");
    }
}

} // namespace detail

/// The L algebraically smallest eigenpairs of A w = lambda B w.
///
/// Block shift-invert subspace iteration: each step solves
/// (A - sigma B) Z = B X for the whole block, orthonormalizes Z and performs
/// a Rayleigh-Ritz projection of the pencil onto span(Z). Clusters of equal
/// eigenvalues are handled naturally as long as the block is larger than the
/// cluster that straddles index L.
inline EigenResult solve_smallest(const Eigen::SparseMatrix<double>& A, const Eigen::SparseMatrix<double>& B,
                                  Eigen::Index L, const EigenSolverOptions& options = {})
{
    detail::check_symmetric_pair(A, B);
    const Eigen::Index dim = A.rows();
    require(L >= 1 && L < dim, ErrorCode::invalid_argument,
            "number of eigenpairs must lie in [1, dim), got " + std::to_string(L));
    require(options.tol > 0.0, ErrorCode::invalid_argument, "tolerance must be positive");

    {
        Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> chol(B);
        require(chol.info() == Eigen::Success, ErrorCode::indefinite_mass, "mass matrix is not positive definite");
    }

    const Eigen::Index p = std::min(dim, options.block_size > 0 ? std::max(options.block_size, L) : 2 * L + 8);
    const Eigen::SparseMatrix<double> shifted = A - options.sigma * B;
    const detail::ShiftedFactor factor(shifted);

    EigenResult result;
    result.solver_stats.block_size = p;
    result.solver_stats.sigma = options.sigma;
    result.solver_stats.used_ldlt = factor.used_ldlt();

    Xoshiro256 rng(options.seed);
    Eigen::MatrixXd X(dim, p);
    for (Eigen::Index c = 0; c < p; ++c)
        for (Eigen::Index r = 0; r < dim; ++r) X(r, c) = rng.normal();

    std::vector<double> best;
    double best_max = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= options.max_iterations; ++it) {
        const Eigen::MatrixXd Z = factor.solve(B * X);
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
        const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, p);

        Eigen::MatrixXd Ap = Q.transpose() * (A * Q);
        Eigen::MatrixXd Bp = Q.transpose() * (B * Q);
        Ap = 0.5 * (Ap + Ap.transpose()).eval();
        Bp = 0.5 * (Bp + Bp.transpose()).eval();
        const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> rr(Ap, Bp);
        require(rr.info() == Eigen::Success, ErrorCode::convergence, "Rayleigh-Ritz projection failed");
        X = Q * rr.eigenvectors();
        const Eigen::VectorXd theta = rr.eigenvalues();

        auto residuals = detail::pencil_residuals(A, B, X, theta, L);
        const double worst = *std::max_element(residuals.begin(), residuals.end());
        if (worst < best_max) {
            best_max = worst;
            best = residuals;
        }
        result.solver_stats.iterations = it;
        if (worst <= options.tol || p == dim) {
            result.eigenvalues = theta.head(L);
            result.eigenvectors = X.leftCols(L);
            result.residuals = std::move(residuals);
            return result;
        }
    }
    throw ConvergenceError("no convergence after " + std::to_string(options.max_iterations) +
                               " iterations (best max residual " + std::to_string(best_max) + ")",
                           best);
}

/// Conditioning summary of a symmetric-definite pencil.
struct PencilDiagnostics
{
    double a_min_eig = 0.0;
    double b_min_eig = 0.0;
    /// Lower bound on min over unit x of (x^T A x)^2 + (x^T B x)^2:
    /// max(a_min, 0)^2 + max(b_min, 0)^2.
    double crawford_estimate = 0.0;
    bool b_near_singular = false;
    bool converged = true;
};

/// Lower end of the Gershgorin disks of a symmetric matrix.
inline double gershgorin_lower_bound(const Eigen::SparseMatrix<double>& M)
{
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(M.rows());
    Eigen::VectorXd off = Eigen::VectorXd::Zero(M.rows());
    for (Eigen::Index c = 0; c < M.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(M, c); it; ++it) {
            if (it.row() == it.col()) diag(it.row()) += it.value();
            else off(it.row()) += std::abs(it.value());
        }
    return M.rows() > 0 ? (diag - off).minCoeff() : 0.0;
}

namespace detail {

/// Smallest eigenvalue of a symmetric matrix by inverse subspace iteration
/// with a small negative shift, or one below the Gershgorin bound.
inline std::pair<double, bool> smallest_eigenvalue(const SparseMatrix& M, double tol, int max_iterations)
{
    const Eigen::Index dim = M.rows();
    if (dim == 1) return {M.coeff(0, 0), true};
    SparseMatrix I(dim, dim);
    I.setIdentity();
    const double lower = gershgorin_lower_bound(M);
    const double scale = M.diagonal().cwiseAbs().mean();
    EigenSolverOptions opts;
    opts.tol = tol * std::max(scale, 1e-300);
    opts.max_iterations = max_iterations;
    if (lower > 0.0) {
        opts.sigma = 0.0;
    } else {
        // A shift just below zero converges fastest; it is only valid when
        // M - sigma I is positive definite, otherwise fall back to the
        // Gershgorin bound.
        opts.sigma = -1e-3 * scale;
        const Eigen::SimplicialLLT<SparseMatrix> probe(M - opts.sigma * I);
        if (probe.info() != Eigen::Success) opts.sigma = lower - 1e-3 * scale;
    }
    opts.block_size = std::min<Eigen::Index>(dim, 8);
    if (opts.block_size >= dim) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense{Eigen::MatrixXd(M)};
        return {dense.eigenvalues()(0), true};
    }
    try {
        const EigenResult r = solve_smallest(M, I, 1, opts);
        return {r.eigenvalues(0), true};
    } catch (const ConvergenceError&) {
        return {lower, false};
    }
}

} // namespace detail

/// Estimates the smallest eigenvalues of A and B and the induced lower
/// bound on the Crawford number. Never throws on numerical trouble.
inline PencilDiagnostics pencil_diagnostics(const Eigen::SparseMatrix<double>& A, const Eigen::SparseMatrix<double>& B,
                                            double near_singular_threshold = 1e-10)
{
    detail::check_symmetric_pair(A, B);
    PencilDiagnostics d;
    const auto [a, a_ok] = detail::smallest_eigenvalue(A, 1e-8, 300);
    const auto [b, b_ok] = detail::smallest_eigenvalue(B, 1e-8, 300);
    d.a_min_eig = a;
    d.b_min_eig = b;
    d.converged = a_ok && b_ok;
    d.crawford_estimate = std::pow(std::max(a, 0.0), 2) + std::pow(std::max(b, 0.0), 2);
    double b_scale = 0.0;
    for (Eigen::Index c = 0; c < B.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(B, c); it; ++it)
            b_scale = std::max(b_scale, std::abs(it.value()));
    d.b_near_singular = b <= near_singular_threshold * std::max(b_scale, 1.0);
    return d;
}

} // namespace curvmesh
