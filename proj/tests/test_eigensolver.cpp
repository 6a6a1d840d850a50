#include "test_support.hpp"

using namespace curvmesh;

namespace {

SparseMatrix sparse_identity(Eigen::Index n)
{
    SparseMatrix m(n, n);
    m.setIdentity();
    return m;
}

SparseMatrix sparse_diagonal(const Eigen::VectorXd& d)
{
    SparseMatrix m(d.size(), d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) m.insert(i, i) = d(i);
    m.makeCompressed();
    return m;
}

/// Banded symmetric pencil with a known dense reference.
std::pair<SparseMatrix, SparseMatrix> random_pencil(Eigen::Index n, std::uint64_t seed)
{
    Xoshiro256 rng(seed);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n), b = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = 2.0 + rng.uniform();
        b(i, i) = 3.0 + rng.uniform();
        for (Eigen::Index j = i + 1; j < std::min(n, i + 4); ++j) {
            a(i, j) = a(j, i) = rng.uniform(-1, 1);
            b(i, j) = b(j, i) = rng.uniform(-0.5, 0.5);
        }
    }
    return {a.sparseView(), b.sparseView()};
}

} // namespace

TEST(Eigensolver, IdentityPencil)
{
    const SparseMatrix i = sparse_identity(20);
    const EigenResult r = solve_smallest(i, i, 5);
    ASSERT_EQ(r.eigenvalues.size(), 5);
    for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(r.eigenvalues(j), 1.0, 1e-12);
}

TEST(Eigensolver, DiagonalPencil)
{
    Eigen::VectorXd a(6), b(6);
    a << 5, 1, 3, 8, 2, 13;
    b << 1, 1, 1, 2, 1, 1;
    const EigenResult r = solve_smallest(sparse_diagonal(a), sparse_diagonal(b), 3);
    EXPECT_NEAR(r.eigenvalues(0), 1.0, 1e-12);
    EXPECT_NEAR(r.eigenvalues(1), 2.0, 1e-12);
    EXPECT_NEAR(r.eigenvalues(2), 3.0, 1e-12);
}

TEST(Eigensolver, MatchesDenseOracle)
{
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto [a, b] = random_pencil(180, seed);
        const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> dense{Eigen::MatrixXd(a), Eigen::MatrixXd(b)};
        EigenSolverOptions opts;
        opts.tol = 1e-12;
        const EigenResult r = solve_smallest(a, b, 12, opts);
        for (Eigen::Index j = 0; j < 12; ++j)
            EXPECT_NEAR(r.eigenvalues(j), dense.eigenvalues()(j), 1e-9 * std::max(1.0, std::abs(dense.eigenvalues()(j))));
        const Eigen::MatrixXd gram = r.eigenvectors.transpose() * (b * r.eigenvectors);
        EXPECT_LE((gram - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-8);
        for (double res : r.residuals) EXPECT_LE(res, opts.tol);
    }
}

TEST(Eigensolver, ShiftInvariance)
{
    const auto [a, b] = random_pencil(120, 9);
    EigenSolverOptions opts;
    opts.tol = 1e-11;
    const EigenResult r0 = solve_smallest(a, b, 8, opts);
    const SparseMatrix shifted = a + 0.75 * b;
    const EigenResult r1 = solve_smallest(shifted, b, 8, opts);
    EXPECT_LE((r1.eigenvalues - r0.eigenvalues - Eigen::VectorXd::Constant(8, 0.75)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Eigensolver, ScaleInvariance)
{
    const auto& fx = curvmesh::testing::sphere_fixture(1000);
    const OperatorPencil p = assemble_laplace_beltrami(fx.model);
    const EigenResult r0 = solve_smallest(p.A, p.B, 6);
    const SparseMatrix a4 = 4.0 * p.A, b4 = 4.0 * p.B;
    const EigenResult r1 = solve_smallest(a4, b4, 6);
    EXPECT_LE((r1.eigenvalues - r0.eigenvalues).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Eigensolver, SeedDoesNotChangeConvergedValues)
{
    const auto [a, b] = random_pencil(150, 4);
    EigenSolverOptions o1, o2;
    o1.tol = o2.tol = 1e-11;
    o2.seed = 1234;
    const EigenResult r1 = solve_smallest(a, b, 6, o1), r2 = solve_smallest(a, b, 6, o2);
    EXPECT_LE((r1.eigenvalues - r2.eigenvalues).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Eigensolver, RejectsBadInput)
{
    const SparseMatrix i = sparse_identity(5);
    EXPECT_THROW(solve_smallest(i, i, 0), Error);
    EXPECT_THROW(solve_smallest(i, i, 5), Error);
    SparseMatrix asym = i;
    asym.coeffRef(0, 1) = 1.0;
    EXPECT_THROW(solve_smallest(asym, i, 2), Error);
}

TEST(Eigensolver, IndefiniteMassIsReported)
{
    Eigen::VectorXd b(4);
    b << 1, -1, 1, 1;
    try {
        solve_smallest(sparse_identity(4), sparse_diagonal(b), 2);
        FAIL() << "expected indefinite-mass";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::indefinite_mass);
    }
}

TEST(Eigensolver, IterationBudgetExhausted)
{
    const auto [a, b] = random_pencil(150, 5);
    EigenSolverOptions opts;
    opts.tol = 1e-14;
    opts.max_iterations = 1;
    try {
        solve_smallest(a, b, 10, opts);
        FAIL() << "expected convergence failure";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.code(), ErrorCode::convergence);
        EXPECT_EQ(e.best_residuals().size(), 10u);
    }
}

TEST(PencilDiagnostics, IdentityPair)
{
    const SparseMatrix i = sparse_identity(30);
    const PencilDiagnostics d = pencil_diagnostics(i, i);
    EXPECT_NEAR(d.a_min_eig, 1.0, 1e-6);
    EXPECT_NEAR(d.b_min_eig, 1.0, 1e-6);
    EXPECT_NEAR(d.crawford_estimate, 2.0, 1e-5);
    EXPECT_FALSE(d.b_near_singular);
    EXPECT_TRUE(d.converged);
}

TEST(PencilDiagnostics, NearSingularMass)
{
    Eigen::VectorXd b = Eigen::VectorXd::Ones(30);
    b(7) = 1e-12;
    const PencilDiagnostics d = pencil_diagnostics(sparse_identity(30), sparse_diagonal(b));
    EXPECT_TRUE(d.b_near_singular);
    EXPECT_NEAR(d.b_min_eig, 1e-12, 1e-13);
}

TEST(PencilDiagnostics, GershgorinBound)
{
    const auto [a, b] = random_pencil(60, 2);
    const double exact = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Eigen::MatrixXd(a)).eigenvalues()(0);
    EXPECT_LE(gershgorin_lower_bound(a), exact + 1e-12);
}
