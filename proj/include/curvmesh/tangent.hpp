#pragma once

#include "curvmesh/errors.hpp"
#include "curvmesh/neighbors.hpp"
#include "curvmesh/point_cloud.hpp"

#include <Eigen/Eigenvalues>

#include <limits>
#include <optional>

namespace curvmesh {

/// Orthonormal basis at a sample: the first `intrinsic_dim` columns span the
/// estimated tangent space, the rest the estimated normal space.
struct TangentFrame
{
    Eigen::Index base_index = 0;
    Eigen::MatrixXd basis;           // n x n, orthonormal columns
    Eigen::VectorXd pca_eigenvalues; // nonincreasing
    int intrinsic_dim = 2;

    auto tangent() const { return basis.leftCols(intrinsic_dim); }
    auto normal() const { return basis.rightCols(basis.cols() - intrinsic_dim); }
    Eigen::Index ambient_dim() const { return basis.rows(); }

    /// lambda_d / lambda_{d+1}; infinite when the normal variance vanishes.
    double eigen_gap() const
    {
        if (intrinsic_dim >= pca_eigenvalues.size()) return std::numeric_limits<double>::infinity();
        const double below = pca_eigenvalues(intrinsic_dim);
        return below > 0.0 ? pca_eigenvalues(intrinsic_dim - 1) / below
                           : std::numeric_limits<double>::infinity();
    }
};

/// Gap ratio lambda_d / lambda_{d+1} above which an automatically detected
/// dimension is accepted.
inline constexpr double kDimensionGapThreshold = 5.0;

/// Local PCA about the neighbor mean. When `dim` is absent the dimension is
/// taken at the largest eigenvalue gap, and must clear kDimensionGapThreshold.
inline TangentFrame local_pca(const PointCloud& cloud, const NeighborSet& nbrs,
                              std::optional<int> dim = std::nullopt)
{
    const Eigen::Index n = cloud.ambient_dim();
    const Eigen::Index k = static_cast<Eigen::Index>(nbrs.size());
    require(k >= 1, ErrorCode::invalid_argument, "empty neighbor set");
    if (dim) {
        require(*dim >= 1 && *dim < n, ErrorCode::invalid_argument, "intrinsic dimension must lie in [1, n)");
        require(k >= *dim + 1, ErrorCode::insufficient_neighbors, "local PCA needs k >= d + 1");
    }

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (auto idx : nbrs.indices) mean += cloud.point(idx);
    mean /= static_cast<double>(k);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (auto idx : nbrs.indices) {
        const Eigen::VectorXd centered = cloud.point(idx) - mean;
        cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
    }
    cov = cov.selfadjointView<Eigen::Lower>();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    TangentFrame frame;
    frame.base_index = nbrs.base_index;
    frame.pca_eigenvalues = eig.eigenvalues().reverse().cwiseMax(0.0);
    frame.basis = eig.eigenvectors().rowwise().reverse();

    const double top = frame.pca_eigenvalues(0);
    if (dim) {
        frame.intrinsic_dim = *dim;
    } else {
        require(n >= 2, ErrorCode::invalid_argument, "cannot detect a dimension in R^1");
        double best_ratio = -1.0;
        int best_dim = 1;
        for (int d = 1; d < n; ++d) {
            const double below = frame.pca_eigenvalues(d);
            const double ratio = below > 0.0 ? frame.pca_eigenvalues(d - 1) / below
                                             : std::numeric_limits<double>::infinity();
            if (ratio > best_ratio) {
                best_ratio = ratio;
                best_dim = d;
            }
        }
        require(best_ratio >= kDimensionGapThreshold, ErrorCode::degenerate_neighborhood,
                "no clear eigenvalue gap; pass the intrinsic dimension explicitly");
        frame.intrinsic_dim = best_dim;
    }
    require(top > 0.0 && frame.pca_eigenvalues(frame.intrinsic_dim - 1) > 1e-12 * top,
            ErrorCode::degenerate_neighborhood,
            "neighborhood of point " + std::to_string(nbrs.base_index) + " has rank below " +
                std::to_string(frame.intrinsic_dim));
    return frame;
}

/// Neighborhood expressed in the frame at its base point: tangent
/// coordinates (d x k) and normal components ((n-d) x k).
struct ProjectedNeighborhood
{
    Eigen::Index base_index = 0;
    std::vector<Eigen::Index> indices; // global indices, base first
    Eigen::MatrixXd coords;            // d x k
    Eigen::MatrixXd normal_components; // (n-d) x k
    std::vector<double> ambient_distances;

    Eigen::Index size() const { return coords.cols(); }
};

inline ProjectedNeighborhood project_neighborhood(const TangentFrame& frame, const PointCloud& cloud,
                                                  const NeighborSet& nbrs)
{
    require(frame.base_index == nbrs.base_index, ErrorCode::invalid_argument,
            "frame and neighbor set refer to different base points");
    const Eigen::Index k = static_cast<Eigen::Index>(nbrs.size());
    const auto base = cloud.point(nbrs.base_index);
    ProjectedNeighborhood proj;
    proj.base_index = nbrs.base_index;
    proj.indices = nbrs.indices;
    proj.ambient_distances = nbrs.distances;
    proj.coords.resize(frame.intrinsic_dim, k);
    proj.normal_components.resize(frame.ambient_dim() - frame.intrinsic_dim, k);
    for (Eigen::Index r = 0; r < k; ++r) {
        const Eigen::VectorXd offset = cloud.point(nbrs.indices[static_cast<std::size_t>(r)]) - base;
        proj.coords.col(r) = frame.tangent().transpose() * offset;
        proj.normal_components.col(r) = frame.normal().transpose() * offset;
    }
    return proj;
}

} // namespace curvmesh
