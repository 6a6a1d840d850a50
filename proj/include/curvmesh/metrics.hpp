#pragma once

#include "curvmesh/eigensolver.hpp"
#include "curvmesh/errors.hpp"
#include "curvmesh/oracles.hpp"
#include "curvmesh/point_cloud.hpp"
#include "curvmesh/tangent.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

namespace curvmesh {

/// Mean relative error of the first L nontrivial eigenvalues. Zero reference
/// eigenvalues are matched by count: the same number of leading estimates is
/// set aside and excluded from the average.
inline double eigenvalue_error(const Eigen::VectorXd& estimated, const AnalyticSpectrum& truth, std::size_t L)
{
    require(L >= 1, ErrorCode::invalid_argument, "L must be positive");
    std::size_t zeros = 0;
    for (const auto& e : truth.entries)
        if (e.eigenvalue == 0.0) zeros += static_cast<std::size_t>(e.multiplicity);
    require(truth.total_multiplicity() >= zeros + L, ErrorCode::invalid_argument,
            "reference spectrum has fewer than " + std::to_string(L) + " nontrivial modes");
    require(static_cast<std::size_t>(estimated.size()) >= zeros + L, ErrorCode::invalid_argument,
            "only " + std::to_string(estimated.size()) + " estimated eigenvalues for " + std::to_string(zeros + L) +
                " modes");
    const std::vector<double> ref = truth.expanded(zeros + L);
    double total = 0.0;
    for (std::size_t j = zeros; j < zeros + L; ++j)
        total += std::abs(ref[j] - estimated(static_cast<Eigen::Index>(j))) / std::abs(ref[j]);
    return total / static_cast<double>(L);
}

inline double eigenvalue_error(const EigenResult& estimated, const AnalyticSpectrum& truth, std::size_t L)
{
    return eigenvalue_error(estimated.eigenvalues, truth, L);
}

/// Ambient vector field sum_k w(2i+k) t_k^(i) at every point (3 x N).
inline Eigen::MatrixXd lift_vector_field(const Eigen::VectorXd& w, const std::vector<TangentFrame>& frames)
{
    const auto n_points = static_cast<Eigen::Index>(frames.size());
    require(w.size() == 2 * n_points, ErrorCode::invalid_argument, "vector field length must be twice the point count");
    const Eigen::Index n = n_points > 0 ? frames[0].ambient_dim() : 0;
    Eigen::MatrixXd out(n, n_points);
    for (Eigen::Index i = 0; i < n_points; ++i)
        out.col(i) = frames[static_cast<std::size_t>(i)].tangent() * w.segment<2>(2 * i);
    return out;
}

/// Contiguous run of estimated eigenvalues that belong to one level.
struct EigenCluster
{
    Eigen::Index begin = 0;
    Eigen::Index size = 0;
    double mean = 0.0;
};

/// Splits an ascending list where consecutive values differ by more than
/// rel_gap * max(|value|, abs_floor).
inline std::vector<EigenCluster> split_clusters(const Eigen::VectorXd& values, double rel_gap = 0.15,
                                                double abs_floor = 0.1)
{
    std::vector<EigenCluster> out;
    if (values.size() == 0) return out;
    EigenCluster cur{0, 1, values(0)};
    for (Eigen::Index j = 1; j < values.size(); ++j) {
        const double gap = values(j) - values(j - 1);
        if (gap > rel_gap * std::max(std::abs(values(j - 1)), abs_floor)) {
            cur.mean /= static_cast<double>(cur.size);
            out.push_back(cur);
            cur = {j, 0, 0.0};
        }
        ++cur.size;
        cur.mean += values(j);
    }
    cur.mean /= static_cast<double>(cur.size);
    out.push_back(cur);
    return out;
}

struct EigenvectorErrorOptions
{
    /// An estimate belongs to a level when within this fraction of the
    /// distance from the level to its nearest neighbouring level.
    double cluster_fraction = 0.25;
};

/// Mean squared error between the first L analytic fields and their least-
/// squares reconstructions from the estimated eigenvectors of the matching
/// cluster. Analytic fields are scaled to unit discrete norm
/// (1/N) sum_i |W(x_i)|^2 = 1; `levels` supplies the reference levels used
/// for the cluster tolerance.
inline double eigenvector_error(const EigenResult& estimated, const std::vector<AnalyticEigenfieldSet>& truth_fields,
                                const PointCloud& cloud, const std::vector<TangentFrame>& frames, std::size_t L,
                                const AnalyticSpectrum& levels, const EigenvectorErrorOptions& options = {})
{
    const Eigen::Index n_points = cloud.size();
    require(static_cast<Eigen::Index>(frames.size()) == n_points, ErrorCode::invalid_argument,
            "frames and cloud differ in size");
    require(estimated.eigenvectors.rows() == 2 * n_points, ErrorCode::invalid_argument,
            "eigenvectors must have 2N rows");
    require(L >= 1, ErrorCode::invalid_argument, "L must be positive");
    require(levels.entries.size() >= 2, ErrorCode::invalid_argument, "need at least two reference levels");

    auto tolerance_of = [&](double level) {
        double gap = std::numeric_limits<double>::infinity();
        for (const auto& e : levels.entries)
            if (e.eigenvalue != level) gap = std::min(gap, std::abs(e.eigenvalue - level));
        return options.cluster_fraction * gap;
    };

    std::vector<Eigen::MatrixXd> lifted;
    for (Eigen::Index c = 0; c < estimated.eigenvectors.cols(); ++c)
        lifted.push_back(lift_vector_field(estimated.eigenvectors.col(c), frames));

    double total = 0.0;
    std::size_t used = 0;
    for (const auto& set : truth_fields) {
        if (used == L) break;
        const double tol = tolerance_of(set.eigenvalue);
        std::vector<Eigen::Index> cluster;
        for (Eigen::Index c = 0; c < estimated.eigenvalues.size(); ++c) {
            const double v = estimated.eigenvalues(c);
            if (std::abs(v - set.eigenvalue) > tol) continue;
            for (const auto& e : levels.entries)
                if (e.eigenvalue != set.eigenvalue && std::abs(v - e.eigenvalue) <= tolerance_of(e.eigenvalue))
                    fail(ErrorCode::ambiguous_cluster, "estimate " + std::to_string(v) + " matches levels " +
                                                           std::to_string(set.eigenvalue) + " and " +
                                                           std::to_string(e.eigenvalue));
            cluster.push_back(c);
        }

        Eigen::MatrixXd basis(3 * n_points, static_cast<Eigen::Index>(cluster.size()));
        for (std::size_t c = 0; c < cluster.size(); ++c)
            basis.col(static_cast<Eigen::Index>(c)) =
                lifted[static_cast<std::size_t>(cluster[c])].reshaped(3 * n_points, 1);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
        if (!cluster.empty()) qr.compute(basis);

        for (const auto& field : set.fields) {
            if (used == L) break;
            Eigen::MatrixXd target(3, n_points);
            for (Eigen::Index i = 0; i < n_points; ++i) target.col(i) = field(cloud.point(i));
            const double norm2 = target.squaredNorm() / static_cast<double>(n_points);
            require(norm2 > 0.0, ErrorCode::invalid_argument, "analytic field vanishes on the cloud");
            target /= std::sqrt(norm2);
            const Eigen::VectorXd t = target.reshaped();
            Eigen::VectorXd resid = t;
            if (!cluster.empty()) resid = t - basis * qr.solve(t);
            total += resid.squaredNorm();
            ++used;
        }
    }
    require(used == L, ErrorCode::invalid_argument,
            "only " + std::to_string(used) + " analytic fields available for L = " + std::to_string(L));
    return total / (static_cast<double>(n_points) * static_cast<double>(L));
}

struct ConvergenceReport
{
    std::vector<double> Ns;
    std::vector<double> errors;       // per-N means
    std::vector<double> error_stderr; // per-N standard errors of the mean
    double fitted_rate = 0.0;
    double rate_stderr = 0.0;
};

/// Least-squares slope of log(mean error) against log(N). Repeated N values
/// are averaged first.
inline ConvergenceReport fit_convergence_rate(const std::vector<std::pair<double, double>>& samples)
{
    std::map<double, std::vector<double>> by_n;
    for (const auto& [n, e] : samples) {
        require(n > 0.0, ErrorCode::invalid_argument, "sample sizes must be positive");
        require(e > 0.0, ErrorCode::invalid_argument, "errors must be positive for a log-log fit");
        by_n[n].push_back(e);
    }
    require(by_n.size() >= 3, ErrorCode::invalid_argument, "rate fit needs at least 3 distinct N");

    ConvergenceReport rep;
    for (const auto& [n, es] : by_n) {
        double mean = 0.0;
        for (double e : es) mean += e;
        mean /= static_cast<double>(es.size());
        double var = 0.0;
        for (double e : es) var += (e - mean) * (e - mean);
        const double se = es.size() > 1 ? std::sqrt(var / static_cast<double>(es.size() - 1) /
                                                    static_cast<double>(es.size()))
                                        : 0.0;
        rep.Ns.push_back(n);
        rep.errors.push_back(mean);
        rep.error_stderr.push_back(se);
    }

    const auto m = static_cast<double>(rep.Ns.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < rep.Ns.size(); ++j) {
        mx += std::log(rep.Ns[j]);
        my += std::log(rep.errors[j]);
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < rep.Ns.size(); ++j) {
        const double dx = std::log(rep.Ns[j]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(rep.errors[j]) - my);
    }
    rep.fitted_rate = sxy / sxx;
    double ssr = 0.0;
    for (std::size_t j = 0; j < rep.Ns.size(); ++j) {
        const double r = std::log(rep.errors[j]) - my - rep.fitted_rate * (std::log(rep.Ns[j]) - mx);
        ssr += r * r;
    }
    rep.rate_stderr = std::sqrt(ssr / (m - 2.0) / sxx);
    return rep;
}

inline ConvergenceReport fit_convergence_rate(const std::vector<double>& Ns, const std::vector<double>& errors)
{
    require(Ns.size() == errors.size(), ErrorCode::invalid_argument, "N and error lists differ in length");
    std::vector<std::pair<double, double>> samples;
    for (std::size_t j = 0; j < Ns.size(); ++j) samples.emplace_back(Ns[j], errors[j]);
    return fit_convergence_rate(samples);
}

/// True when the means decrease with N, allowing up to `allowed_inversions`
/// increases that stay within one combined standard error.
inline bool decreasing_within_stderr(const ConvergenceReport& rep, int allowed_inversions = 1)
{
    int inversions = 0;
    for (std::size_t j = 1; j < rep.errors.size(); ++j) {
        if (rep.errors[j] < rep.errors[j - 1]) continue;
        const double se = std::hypot(rep.error_stderr[j], rep.error_stderr[j - 1]);
        if (rep.errors[j] - rep.errors[j - 1] > se) return false;
        ++inversions;
    }
    return inversions <= allowed_inversions;
}

} // namespace curvmesh
