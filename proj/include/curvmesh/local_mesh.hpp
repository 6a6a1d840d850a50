#pragma once

#include "curvmesh/errors.hpp"
#include "curvmesh/point_cloud.hpp"
#include "curvmesh/predicates.hpp"
#include "curvmesh/tangent.hpp"

#include <array>
#include <optional>
#include <vector>

namespace curvmesh {

/// Triangle of a first ring. Vertex 0 is the base point (the origin of the
/// projected chart); (0, v_j, v_k) is counterclockwise in chart coordinates.
struct RingTriangle
{
    Eigen::Index base_index = 0;
    std::array<Eigen::Index, 3> vertex_indices{}; // global indices (base, j, k)
    std::array<Eigen::Index, 3> local_slots{};    // positions in the neighborhood
    Eigen::Vector2d v_j = Eigen::Vector2d::Zero();
    Eigen::Vector2d v_k = Eigen::Vector2d::Zero();
    /// Integration weight of this triangle in the ring of the base point.
    double weight = 1.0;

    double projected_area() const { return 0.5 * std::abs(v_j.x() * v_k.y() - v_j.y() * v_k.x()); }

    /// Columns v_j, v_k: the linear part of the barycentric map.
    Eigen::Matrix2d edge_matrix() const
    {
        Eigen::Matrix2d m;
        m << v_j, v_k;
        return m;
    }

    /// Same triangle with the two non-base vertices swapped.
    RingTriangle swapped() const
    {
        RingTriangle t = *this;
        std::swap(t.vertex_indices[1], t.vertex_indices[2]);
        std::swap(t.local_slots[1], t.local_slots[2]);
        std::swap(t.v_j, t.v_k);
        return t;
    }
};

struct FirstRing
{
    Eigen::Index base_index = 0;
    std::vector<RingTriangle> triangles;
    int dropped_degenerate = 0;

    /// Sum of the triangle angles at the base vertex (diagnostic only).
    double angle_sum() const
    {
        double total = 0.0;
        for (const auto& t : triangles)
            total += std::atan2(std::abs(t.v_j.x() * t.v_k.y() - t.v_j.y() * t.v_k.x()), t.v_j.dot(t.v_k));
        return total;
    }
};

/// Ring triangles with projected area below this fraction of r_i^2 are dropped.
inline constexpr double kDegenerateAreaFraction = 1e-12;

namespace detail {

// Delaunay neighbor of the directed edge 0 -> a on its left (ccw) or right
// side, by a linear scan over the pencil of circles through 0 and a.
// Cocircular ties resolve towards the candidate angularly closest to a.
inline std::optional<Eigen::Index> wrap_step(const std::vector<Eigen::Vector2d>& pts,
                                             const std::vector<bool>& usable, Eigen::Index a, bool ccw)
{
    const Eigen::Vector2d& o = pts[0];
    std::optional<Eigen::Index> best;
    const int side = ccw ? 1 : -1;
    for (Eigen::Index c = 1; c < static_cast<Eigen::Index>(pts.size()); ++c) {
        if (!usable[static_cast<std::size_t>(c)] || c == a) continue;
        if (predicates::orient2d(o, pts[a], pts[c]) != side) continue;
        if (!best) {
            best = c;
            continue;
        }
        const int in = ccw ? predicates::incircle(o, pts[a], pts[*best], pts[c])
                           : predicates::incircle(o, pts[*best], pts[a], pts[c]);
        if (in > 0 || (in == 0 && predicates::orient2d(o, pts[*best], pts[c]) == -side)) best = c;
    }
    return best;
}

} // namespace detail

/// Triangles of the 2-D Delaunay triangulation of the projected neighborhood
/// that are incident to the base point. The star is built by gift wrapping
/// around the origin, starting from its nearest neighbor (always a Delaunay
/// edge) with exact orientation and in-circle predicates.
inline FirstRing delaunay_first_ring(const ProjectedNeighborhood& proj)
{
    require(proj.coords.rows() == 2, ErrorCode::invalid_argument, "local meshing needs d = 2");
    const Eigen::Index k = proj.size();
    require(k >= 3, ErrorCode::insufficient_neighbors, "local meshing needs at least 3 points");

    std::vector<Eigen::Vector2d> pts(static_cast<std::size_t>(k));
    std::vector<bool> usable(static_cast<std::size_t>(k), true);
    double radius2 = 0.0;
    for (Eigen::Index r = 0; r < k; ++r) {
        pts[static_cast<std::size_t>(r)] = proj.coords.col(r);
        radius2 = std::max(radius2, pts[static_cast<std::size_t>(r)].squaredNorm());
    }
    // Points that coincide with the base in projection cannot form a triangle.
    for (Eigen::Index r = 1; r < k; ++r)
        if (pts[static_cast<std::size_t>(r)].squaredNorm() == 0.0) usable[static_cast<std::size_t>(r)] = false;

    std::optional<Eigen::Index> start;
    for (Eigen::Index r = 1; r < k; ++r) {
        if (!usable[static_cast<std::size_t>(r)]) continue;
        if (!start || pts[static_cast<std::size_t>(r)].squaredNorm() < pts[static_cast<std::size_t>(*start)].squaredNorm())
            start = r;
    }
    require(start.has_value(), ErrorCode::degenerate_neighborhood, "all neighbors project onto the base point");
    bool collinear = true;
    for (Eigen::Index r = 1; r < k && collinear; ++r)
        if (usable[static_cast<std::size_t>(r)] && predicates::orient2d(pts[0], pts[static_cast<std::size_t>(*start)], pts[static_cast<std::size_t>(r)]) != 0)
            collinear = false;
    require(!collinear, ErrorCode::degenerate_neighborhood,
            "projected neighborhood of point " + std::to_string(proj.base_index) + " is collinear");

    std::vector<std::pair<Eigen::Index, Eigen::Index>> fan; // ccw pairs (j, k)
    bool closed = false;
    Eigen::Index a = *start;
    for (Eigen::Index step = 0; step < k; ++step) {
        const auto b = detail::wrap_step(pts, usable, a, true);
        if (!b) break;
        fan.emplace_back(a, *b);
        if (*b == *start) {
            closed = true;
            break;
        }
        a = *b;
    }
    if (!closed) {
        a = *start;
        for (Eigen::Index step = 0; step < k; ++step) {
            const auto b = detail::wrap_step(pts, usable, a, false);
            if (!b) break;
            fan.emplace_back(*b, a);
            a = *b;
        }
    }

    FirstRing ring;
    ring.base_index = proj.base_index;
    const double min_area = kDegenerateAreaFraction * radius2;
    for (const auto& [j, kk] : fan) {
        RingTriangle t;
        t.base_index = proj.base_index;
        t.vertex_indices = {proj.indices[0], proj.indices[static_cast<std::size_t>(j)],
                            proj.indices[static_cast<std::size_t>(kk)]};
        t.local_slots = {0, j, kk};
        t.v_j = pts[static_cast<std::size_t>(j)];
        t.v_k = pts[static_cast<std::size_t>(kk)];
        if (t.projected_area() < min_area) {
            ++ring.dropped_degenerate;
            continue;
        }
        ring.triangles.push_back(t);
    }
    require(!ring.triangles.empty(), ErrorCode::empty_ring,
            "point " + std::to_string(proj.base_index) + " has no incident triangle");
    return ring;
}

/// u1 * v_j + u2 * v_k for u in the reference simplex.
inline Eigen::Vector2d barycentric_map(const RingTriangle& tri, const Eigen::Vector2d& u)
{
    constexpr double slack = 1e-14;
    require(u.x() >= -slack && u.y() >= -slack && u.x() + u.y() <= 1.0 + slack, ErrorCode::invalid_argument,
            "point lies outside the reference simplex");
    return u.x() * tri.v_j + u.y() * tri.v_k;
}

/// Gram matrix of the ambient edge vectors of a flat ring triangle.
inline Eigen::Matrix2d linear_mesh_metric(const RingTriangle& tri, const PointCloud& cloud)
{
    const Eigen::VectorXd ej = cloud.point(tri.vertex_indices[1]) - cloud.point(tri.vertex_indices[0]);
    const Eigen::VectorXd ek = cloud.point(tri.vertex_indices[2]) - cloud.point(tri.vertex_indices[0]);
    Eigen::Matrix2d g;
    g(0, 0) = ej.squaredNorm();
    g(0, 1) = g(1, 0) = ej.dot(ek);
    g(1, 1) = ek.squaredNorm();
    return g;
}

} // namespace curvmesh
