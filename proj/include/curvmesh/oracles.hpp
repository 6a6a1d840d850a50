#pragma once

#include "curvmesh/assembly.hpp"
#include "curvmesh/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string_view>
#include <utility>
#include <vector>

namespace curvmesh {

enum class SpectrumSource { sphere_closed_form, torus_fd, trivial_kernel };

inline std::string_view to_string(SpectrumSource s)
{
    switch (s) {
    case SpectrumSource::sphere_closed_form: return "sphere_closed_form";
    case SpectrumSource::torus_fd: return "torus_fd";
    case SpectrumSource::trivial_kernel: return "trivial_kernel";
    }
    return "unknown";
}

struct SpectrumEntry
{
    double eigenvalue = 0.0;
    int multiplicity = 1;
};

/// Distinct reference eigenvalues with multiplicities, ascending.
struct AnalyticSpectrum
{
    OperatorKind op = OperatorKind::laplace_beltrami;
    std::vector<SpectrumEntry> entries;
    SpectrumSource source = SpectrumSource::sphere_closed_form;

    /// The first `count` eigenvalues repeated by multiplicity.
    std::vector<double> expanded(std::size_t count) const
    {
        std::vector<double> out;
        for (const auto& e : entries)
            for (int r = 0; r < e.multiplicity && out.size() < count; ++r) out.push_back(e.eigenvalue);
        require(out.size() == count, ErrorCode::invalid_argument,
                "reference spectrum has only " + std::to_string(out.size()) + " modes, " + std::to_string(count) +
                    " requested");
        return out;
    }

    std::size_t total_multiplicity() const
    {
        std::size_t n = 0;
        for (const auto& e : entries) n += static_cast<std::size_t>(e.multiplicity);
        return n;
    }
};

/// Unit-sphere spectra of the vector Laplacians for l = 1..L_distinct:
/// Hodge l(l+1), Bochner l(l+1) - 1, each with multiplicity 2(2l+1).
inline AnalyticSpectrum sphere_spectrum(OperatorKind op, int L_distinct)
{
    require(L_distinct >= 1, ErrorCode::invalid_argument, "need at least one level");
    require(op != OperatorKind::laplace_beltrami, ErrorCode::invalid_argument,
            "sphere_spectrum covers the vector Laplacians");
    AnalyticSpectrum s;
    s.op = op;
    s.source = SpectrumSource::sphere_closed_form;
    for (int l = 1; l <= L_distinct; ++l) {
        const double hodge = static_cast<double>(l * (l + 1));
        s.entries.push_back({op == OperatorKind::hodge ? hodge : hodge - 1.0, 2 * (2 * l + 1)});
    }
    return s;
}

/// Laplace-Beltrami spectrum of the unit sphere, l(l+1) with multiplicity 2l+1.
inline AnalyticSpectrum sphere_lb_spectrum(int L_distinct)
{
    require(L_distinct >= 1, ErrorCode::invalid_argument, "need at least one level");
    AnalyticSpectrum s;
    s.op = OperatorKind::laplace_beltrami;
    for (int l = 0; l < L_distinct; ++l) s.entries.push_back({static_cast<double>(l * (l + 1)), 2 * l + 1});
    return s;
}

using VectorField = std::function<Eigen::Vector3d(const Eigen::Vector3d&)>;

/// Fields sharing one analytic eigenvalue.
struct AnalyticEigenfieldSet
{
    double eigenvalue = 0.0;
    int level = 0;
    std::vector<VectorField> fields;
};

namespace detail {

/// Ambient gradient of a polynomial harmonic, evaluated at x.
using HarmonicGradient = std::function<Eigen::Vector3d(const Eigen::Vector3d&)>;

inline std::vector<HarmonicGradient> sphere_harmonic_gradients(int ell)
{
    std::vector<HarmonicGradient> out;
    auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
    if (ell == 1) {
        for (int i = 0; i < 3; ++i)
            out.push_back([i](const Eigen::Vector3d&) { return Eigen::Vector3d::Unit(i); });
    } else if (ell == 2) {
        // f = 3 x_i x_k - delta_ik
        for (int i = 0; i < 3; ++i)
            for (int k = i; k < 3; ++k)
                out.push_back([i, k](const Eigen::Vector3d& x) {
                    Eigen::Vector3d g = Eigen::Vector3d::Zero();
                    g(i) += 3.0 * x(k);
                    g(k) += 3.0 * x(i);
                    return g;
                });
    } else if (ell == 3) {
        // f = 15 x_i x_j x_k - 3 (delta_ij x_k + delta_ki x_j + delta_jk x_i)
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j)
                for (int k = j; k < 3; ++k)
                    out.push_back([=](const Eigen::Vector3d& x) {
                        Eigen::Vector3d g = Eigen::Vector3d::Zero();
                        g(i) += 15.0 * x(j) * x(k);
                        g(j) += 15.0 * x(i) * x(k);
                        g(k) += 15.0 * x(i) * x(j);
                        g(k) -= 3.0 * delta(i, j);
                        g(j) -= 3.0 * delta(k, i);
                        g(i) -= 3.0 * delta(j, k);
                        return g;
                    });
    } else {
        fail(ErrorCode::unsupported_level, "sphere eigenfields are available for l = 1, 2, 3 only, got " +
                                               std::to_string(ell));
    }
    return out;
}

} // namespace detail

/// Eigenfields n x grad f and P grad f for the listed degree-l harmonics.
/// Points are radially projected onto the unit sphere before evaluation.
/// The divergence-free family comes first, then the gradient family.
inline AnalyticEigenfieldSet sphere_eigenfields(int ell, OperatorKind op = OperatorKind::hodge)
{
    require(ell >= 1, ErrorCode::invalid_argument, "level must be positive");
    const auto grads = detail::sphere_harmonic_gradients(ell);
    AnalyticEigenfieldSet set;
    set.level = ell;
    set.eigenvalue = static_cast<double>(ell * (ell + 1)) - (op == OperatorKind::bochner ? 1.0 : 0.0);
    for (const auto& grad : grads)
        set.fields.push_back([grad](const Eigen::Vector3d& x) -> Eigen::Vector3d {
            const Eigen::Vector3d n = x.normalized();
            return n.cross(grad(n));
        });
    for (const auto& grad : grads)
        set.fields.push_back([grad](const Eigen::Vector3d& x) -> Eigen::Vector3d {
            const Eigen::Vector3d n = x.normalized();
            const Eigen::Vector3d g = grad(n);
            return g - n.dot(g) * n;
        });
    return set;
}

struct TorusFdOptions
{
    Eigen::Index grid = 1024;
    int m_max = 64;
    /// Agreement required between extrapolations on consecutive grids.
    double refinement_tol = 1e-6;
    bool richardson = true;
};

namespace detail {

/// Eigenvalues of -(1/w)(w T')' + m^2/w^2 T = lambda T, w = 2 + cos(theta),
/// on a periodic grid of n points, in the symmetric form K T = lambda W T
/// with K_ii = (w_{i+1/2} + w_{i-1/2})/h^2 + m^2/w_i and W = diag(w).
/// Returns {even branch, odd branch}, each ascending.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> torus_fd_branches(Eigen::Index n, int m)
{
    using Sparse = Eigen::SparseMatrix<double>;
    require(n >= 8 && n % 2 == 0, ErrorCode::invalid_argument, "torus grid must be even and at least 8");
    const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
    auto w = [](double theta) { return 2.0 + std::cos(theta); };

    std::vector<Eigen::Triplet<double>> kt;
    Eigen::VectorXd wd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double th = static_cast<double>(i) * h;
        const double wp = w(th + 0.5 * h) / (h * h), wm = w(th - 0.5 * h) / (h * h);
        wd(i) = w(th);
        kt.emplace_back(i, i, wp + wm + static_cast<double>(m * m) / wd(i));
        kt.emplace_back(i, (i + 1) % n, -wp);
        kt.emplace_back(i, (i + n - 1) % n, -wm);
    }
    Sparse K(n, n), W(n, n);
    K.setFromTriplets(kt.begin(), kt.end());
    std::vector<Eigen::Triplet<double>> wt;
    for (Eigen::Index i = 0; i < n; ++i) wt.emplace_back(i, i, wd(i));
    W.setFromTriplets(wt.begin(), wt.end());

    // Reflection theta -> -theta commutes with the problem; restrict to the
    // even (T_{-i} = T_i) and odd (T_{-i} = -T_i) subspaces, where the
    // reduced pencils are tridiagonal and diagonal.
    auto reduce = [&](bool even) {
        const Eigen::Index half = n / 2;
        const Eigen::Index first = even ? 0 : 1;
        const Eigen::Index last = even ? half : half - 1;
        const Eigen::Index cols = last - first + 1;
        std::vector<Eigen::Triplet<double>> pt;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index mirror = i <= half ? i : n - i;
            if (mirror < first || mirror > last) continue;
            const double sign = (!even && i > half) ? -1.0 : 1.0;
            pt.emplace_back(i, mirror - first, sign);
        }
        Sparse P(n, cols);
        P.setFromTriplets(pt.begin(), pt.end());
        const Sparse Kr = Sparse(P.transpose()) * K * P;
        const Sparse Wr = Sparse(P.transpose()) * W * P;
        Eigen::VectorXd scale(cols), diag(cols), sub(std::max<Eigen::Index>(cols - 1, 1));
        for (Eigen::Index c = 0; c < cols; ++c) scale(c) = 1.0 / std::sqrt(Wr.coeff(c, c));
        for (Eigen::Index c = 0; c < cols; ++c) diag(c) = Kr.coeff(c, c) * scale(c) * scale(c);
        for (Eigen::Index c = 0; c + 1 < cols; ++c) sub(c) = Kr.coeff(c + 1, c) * scale(c) * scale(c + 1);
        if (cols == 1) return Eigen::VectorXd(diag);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
        eig.computeFromTridiagonal(diag, sub.head(cols - 1), Eigen::EigenvaluesOnly);
        require(eig.info() == Eigen::Success, ErrorCode::oracle_unconverged, "tridiagonal eigensolve failed");
        return Eigen::VectorXd(eig.eigenvalues());
    };
    return {reduce(true), reduce(false)};
}

struct TorusMode
{
    double eigenvalue;
    int m;
};

/// Branch eigenvalues for one m, optionally Richardson-extrapolated from
/// grids n and 2n. Only the lowest `keep` values per branch are returned.
inline std::vector<double> torus_fd_values(Eigen::Index n, int m, bool richardson, std::size_t keep)
{
    std::vector<double> out;
    const auto [ce, co] = torus_fd_branches(n, m);
    if (!richardson) {
        for (Eigen::Index j = 0; j < ce.size() && static_cast<std::size_t>(j) < keep; ++j) out.push_back(ce(j));
        for (Eigen::Index j = 0; j < co.size() && static_cast<std::size_t>(j) < keep; ++j) out.push_back(co(j));
    } else {
        const auto [fe, fo] = torus_fd_branches(2 * n, m);
        for (Eigen::Index j = 0; j < ce.size() && static_cast<std::size_t>(j) < keep; ++j)
            out.push_back((4.0 * fe(j) - ce(j)) / 3.0);
        for (Eigen::Index j = 0; j < co.size() && static_cast<std::size_t>(j) < keep; ++j)
            out.push_back((4.0 * fo(j) - co(j)) / 3.0);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// The lowest `count` Laplace-Beltrami eigenvalues (with multiplicity) on
/// the (2,1) torus. Fourier indices are pruned once m^2/9, a lower bound for
/// every eigenvalue with that index, exceeds the current count-th value.
inline std::vector<TorusMode> torus_lb_modes(std::size_t count, Eigen::Index n, const TorusFdOptions& opt)
{
    std::vector<TorusMode> modes;
    for (int m = 0; m <= opt.m_max; ++m) {
        if (modes.size() >= count) {
            std::vector<TorusMode> sorted = modes;
            std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(count - 1), sorted.end(),
                             [](const TorusMode& a, const TorusMode& b) { return a.eigenvalue < b.eigenvalue; });
            if (static_cast<double>(m * m) / 9.0 > sorted[count - 1].eigenvalue) break;
        }
        for (double v : torus_fd_values(n, m, opt.richardson, count)) {
            if (m == 0 && std::abs(v) < 1e-9) v = 0.0;
            modes.push_back({v, m});
            if (m > 0) modes.push_back({v, m});
        }
    }
    std::stable_sort(modes.begin(), modes.end(),
                     [](const TorusMode& a, const TorusMode& b) { return a.eigenvalue < b.eigenvalue; });
    require(modes.size() >= count, ErrorCode::invalid_argument, "torus grid too coarse for the requested modes");
    modes.resize(count);
    return modes;
}

inline AnalyticSpectrum group_modes(const std::vector<TorusMode>& modes, OperatorKind op, int multiplicity_scale)
{
    AnalyticSpectrum s;
    s.op = op;
    s.source = SpectrumSource::torus_fd;
    // m > 0 modes arrive as consecutive identical pairs (cos, sin).
    for (std::size_t j = 0; j < modes.size();) {
        int mult = 1;
        if (modes[j].m > 0 && j + 1 < modes.size() && modes[j + 1].m == modes[j].m &&
            modes[j + 1].eigenvalue == modes[j].eigenvalue)
            mult = 2;
        s.entries.push_back({modes[j].eigenvalue, mult * multiplicity_scale});
        j += static_cast<std::size_t>(mult);
    }
    return s;
}

} // namespace detail

/// Semi-analytic Laplace-Beltrami spectrum of the (2,1) torus: the first L
/// eigenvalues with multiplicity, from separated finite-difference problems
/// on a periodic theta grid. With Richardson extrapolation on, the values on
/// `grid` and on `grid / 2` must agree to `refinement_tol` or the oracle
/// raises oracle-unconverged.
inline AnalyticSpectrum torus_lb_spectrum_fd(std::size_t L, const TorusFdOptions& opt = {})
{
    require(L >= 1, ErrorCode::invalid_argument, "need at least one mode");
    require(opt.grid >= 256, ErrorCode::invalid_argument, "torus oracle grid must be at least 256");
    const auto fine = detail::torus_lb_modes(L, opt.grid, opt);
    const auto coarse = detail::torus_lb_modes(L, opt.grid / 2, opt);
    double worst = 0.0;
    for (std::size_t j = 0; j < L; ++j) worst = std::max(worst, std::abs(fine[j].eigenvalue - coarse[j].eigenvalue));
    require(worst <= opt.refinement_tol, ErrorCode::oracle_unconverged,
            "torus oracle changes by " + std::to_string(worst) + " under grid refinement");
    return detail::group_modes(fine, OperatorKind::laplace_beltrami, 1);
}

/// Hodge spectrum of the (2,1) torus: a two-dimensional kernel followed by
/// the nonzero Laplace-Beltrami eigenvalues with doubled multiplicities.
/// `nontrivial` counts modes after the kernel.
inline AnalyticSpectrum torus_hodge_spectrum_fd(std::size_t nontrivial, const TorusFdOptions& opt = {})
{
    const AnalyticSpectrum lb = torus_lb_spectrum_fd(nontrivial + 4, opt);
    AnalyticSpectrum s;
    s.op = OperatorKind::hodge;
    s.source = SpectrumSource::torus_fd;
    s.entries.push_back({0.0, 2});
    for (const auto& e : lb.entries)
        if (e.eigenvalue != 0.0) s.entries.push_back({e.eigenvalue, 2 * e.multiplicity});
    return s;
}

} // namespace curvmesh
