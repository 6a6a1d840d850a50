#pragma once

#include "curvmesh/errors.hpp"
#include "curvmesh/gmls.hpp"
#include "curvmesh/local_mesh.hpp"
#include "curvmesh/neighbors.hpp"
#include "curvmesh/tangent.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <vector>

namespace curvmesh {

struct LocalModelOptions
{
    Eigen::Index k = 0; // 0 selects default_neighbor_count(N)
    int intrinsic_dim = 2;
    GmlsOptions gmls;
    /// Re-mesh each point with the vertices of every ring triangle that
    /// touches it added to its candidate set. PCA and GMLS still use the
    /// k nearest neighbours.
    bool augment_candidates = true;
    /// Keep only triangles present in the rings of all three vertices.
    bool shared_triangles_only = true;
    /// Take vector dof frames from the tangent plane of the fitted chart
    /// instead of the PCA plane.
    bool fitted_vector_frames = true;
};

/// Counters collected while building per-point rings and charts.
struct LocalModelStats
{
    Eigen::Index k = 0;
    int empty_rings = 0;
    int degenerate_neighborhoods = 0;
    int failed_charts = 0;
    int dropped_triangles = 0;
    Eigen::Index ring_triangles = 0;
    int augmented_points = 0;
    Eigen::Index unshared_triangles = 0;
    int unshared_rings_kept = 0;
};

/// Per-point tangent frames, first rings and GMLS charts for a cloud.
/// A point whose ring cannot be built keeps an empty ring and contributes no
/// integrals of its own; a point whose chart fit fails is flagged in
/// `chart_valid` and its triangles are skipped during assembly.
struct LocalModel
{
    std::vector<ProjectedNeighborhood> neighborhoods;
    std::vector<TangentFrame> frames;        // PCA frames; chart coordinates
    std::vector<TangentFrame> vector_frames; // basis of the vector dofs at each point
    std::vector<FirstRing> rings;
    std::vector<GmlsPolynomial> polys;
    std::vector<char> chart_valid;
    LocalModelStats stats;

    Eigen::Index size() const { return static_cast<Eigen::Index>(frames.size()); }
};

namespace detail {

using TriangleKey = std::array<Eigen::Index, 3>;

inline TriangleKey triangle_key(const RingTriangle& t)
{
    TriangleKey k = t.vertex_indices;
    std::sort(k.begin(), k.end());
    return k;
}

/// Delaunay ring of point i; returns false (and counts the reason) when no
/// ring exists.
inline bool mesh_point(const ProjectedNeighborhood& proj, FirstRing& ring, LocalModelStats& stats)
{
    try {
        ring = delaunay_first_ring(proj);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::empty_ring) ++stats.empty_rings;
        else if (e.code() == ErrorCode::degenerate_neighborhood) ++stats.degenerate_neighborhoods;
        else throw;
        ring.triangles.clear();
        return false;
    }
    return true;
}

/// Second meshing pass over kNN sets widened by the vertices of all ring
/// triangles incident to each point.
inline void augment_rings(const PointCloud& cloud, LocalModel& model)
{
    const std::size_t n = model.rings.size();
    std::vector<std::set<Eigen::Index>> extra(n);
    for (const auto& ring : model.rings)
        for (const auto& t : ring.triangles)
            for (auto a : t.vertex_indices)
                for (auto b : t.vertex_indices)
                    if (a != b) extra[static_cast<std::size_t>(a)].insert(b);

    for (std::size_t i = 0; i < n; ++i) {
        if (model.rings[i].triangles.empty()) continue;
        const auto& knn = model.neighborhoods[i];
        NeighborSet wide{static_cast<Eigen::Index>(i), knn.indices, knn.ambient_distances};
        const std::set<Eigen::Index> have(knn.indices.begin(), knn.indices.end());
        for (auto j : extra[i]) {
            if (have.count(j)) continue;
            wide.indices.push_back(j);
            wide.distances.push_back((cloud.point(j) - cloud.point(static_cast<Eigen::Index>(i))).norm());
        }
        if (wide.indices.size() == knn.indices.size()) continue;
        ++model.stats.augmented_points;
        FirstRing ring;
        ring.base_index = static_cast<Eigen::Index>(i);
        const auto proj = project_neighborhood(model.frames[i], cloud, wide);
        LocalModelStats scratch;
        if (mesh_point(proj, ring, scratch)) model.rings[i] = std::move(ring);
    }
}

inline void keep_shared_triangles(LocalModel& model)
{
    std::map<TriangleKey, int> count;
    for (const auto& ring : model.rings)
        for (const auto& t : ring.triangles) ++count[triangle_key(t)];
    for (auto& ring : model.rings) {
        if (ring.triangles.empty()) continue;
        std::vector<RingTriangle> kept;
        for (const auto& t : ring.triangles)
            if (count[triangle_key(t)] == 3) kept.push_back(t);
        // A point with no shared triangle keeps its own ring.
        if (kept.empty()) {
            ++model.stats.unshared_rings_kept;
            continue;
        }
        model.stats.unshared_triangles += static_cast<Eigen::Index>(ring.triangles.size() - kept.size());
        ring.triangles = std::move(kept);
    }
}

} // namespace detail

/// Frames, rings and charts for every point. Ring triangles keep the local
/// slots of the meshing candidate set; slots below k coincide with the kNN
/// neighbourhood.
inline LocalModel build_local_model(const PointCloud& cloud, const LocalModelOptions& options = {})
{
    const Eigen::Index n_points = cloud.size();
    const Eigen::Index k = options.k > 0 ? options.k : default_neighbor_count(n_points);
    require(n_points > k, ErrorCode::invalid_argument,
            "meshing needs more points than neighbors (N=" + std::to_string(n_points) +
                ", k=" + std::to_string(k) + ")");

    const KnnIndex index(cloud);
    LocalModel model;
    model.stats.k = k;
    model.neighborhoods.resize(static_cast<std::size_t>(n_points));
    model.frames.resize(static_cast<std::size_t>(n_points));
    model.vector_frames.resize(static_cast<std::size_t>(n_points));
    model.rings.resize(static_cast<std::size_t>(n_points));
    model.polys.resize(static_cast<std::size_t>(n_points));
    model.chart_valid.assign(static_cast<std::size_t>(n_points), 0);

    for (Eigen::Index i = 0; i < n_points; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const NeighborSet nbrs = index.query(i, k);
        model.frames[ui] = local_pca(cloud, nbrs, options.intrinsic_dim);
        model.vector_frames[ui] = model.frames[ui];
        model.neighborhoods[ui] = project_neighborhood(model.frames[ui], cloud, nbrs);
        model.rings[ui].base_index = i;
        model.polys[ui].base_index = i;
        if (!detail::mesh_point(model.neighborhoods[ui], model.rings[ui], model.stats)) continue;
        try {
            model.polys[ui] = gmls_fit(model.neighborhoods[ui], options.gmls);
            if (options.fitted_vector_frames)
                model.vector_frames[ui] = gmls_tangent_frame(model.frames[ui], model.polys[ui]);
            model.chart_valid[ui] = 1;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ill_conditioned_fit && e.code() != ErrorCode::insufficient_neighbors) throw;
            ++model.stats.failed_charts;
        }
    }

    if (options.augment_candidates) detail::augment_rings(cloud, model);
    if (options.shared_triangles_only) detail::keep_shared_triangles(model);
    for (const auto& ring : model.rings) {
        model.stats.dropped_triangles += ring.dropped_degenerate;
        model.stats.ring_triangles += static_cast<Eigen::Index>(ring.triangles.size());
    }
    return model;
}

} // namespace curvmesh
