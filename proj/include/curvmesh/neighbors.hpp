#pragma once

#include "curvmesh/errors.hpp"
#include "curvmesh/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <vector>

namespace curvmesh {

/// k nearest samples of a base point. The base point itself comes first.
struct NeighborSet
{
    Eigen::Index base_index = 0;
    std::vector<Eigen::Index> indices;
    std::vector<double> distances;

    std::size_t size() const { return indices.size(); }
};

namespace detail {

inline double squared_distance(const Eigen::MatrixXd& pts, Eigen::Index a, Eigen::Index b)
{
    double s = 0.0;
    for (Eigen::Index c = 0; c < pts.rows(); ++c) {
        const double d = pts(c, a) - pts(c, b);
        s += d * d;
    }
    return s;
}

struct Candidate
{
    double dist2;
    Eigen::Index index;
    // Ties in distance are broken by ascending index.
    bool operator<(const Candidate& o) const
    {
        return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
    }
};

inline NeighborSet to_neighbor_set(Eigen::Index base, std::vector<Candidate> best)
{
    std::sort(best.begin(), best.end());
    // The base point is at distance 0; make sure it leads even if duplicates exist.
    auto self = std::find_if(best.begin(), best.end(), [&](const Candidate& c) { return c.index == base; });
    if (self != best.end() && self != best.begin()) std::rotate(best.begin(), self, self + 1);
    NeighborSet out;
    out.base_index = base;
    out.indices.reserve(best.size());
    out.distances.reserve(best.size());
    for (const auto& c : best) {
        out.indices.push_back(c.index);
        out.distances.push_back(std::sqrt(c.dist2));
    }
    return out;
}

} // namespace detail

/// Exhaustive O(N) scan. Used for small clouds and as the test oracle.
inline NeighborSet knn_brute_force(const PointCloud& cloud, Eigen::Index i, Eigen::Index k)
{
    require(k >= 1 && k <= cloud.size(), ErrorCode::invalid_argument,
            "knn needs 1 <= k <= N (k=" + std::to_string(k) + ", N=" + std::to_string(cloud.size()) + ")");
    require(i >= 0 && i < cloud.size(), ErrorCode::invalid_argument, "knn base index out of range");
    std::vector<detail::Candidate> all(static_cast<std::size_t>(cloud.size()));
    for (Eigen::Index j = 0; j < cloud.size(); ++j)
        all[static_cast<std::size_t>(j)] = {detail::squared_distance(cloud.points, i, j), j};
    std::partial_sort(all.begin(), all.begin() + k, all.end());
    all.resize(static_cast<std::size_t>(k));
    return detail::to_neighbor_set(i, std::move(all));
}

/// Static kd-tree over a point cloud. Immutable after construction, so
/// concurrent queries are safe. The cloud must outlive the index.
class KnnIndex
{
public:
    explicit KnnIndex(const PointCloud& cloud, int leaf_size = 16)
        : m_points(&cloud.points)
        , m_leaf_size(std::max(1, leaf_size))
    {
        m_order.resize(static_cast<std::size_t>(cloud.size()));
        std::iota(m_order.begin(), m_order.end(), Eigen::Index{0});
        if (!m_order.empty()) build(0, m_order.size());
    }

    Eigen::Index size() const { return m_points->cols(); }

    NeighborSet query(Eigen::Index i, Eigen::Index k) const
    {
        require(k >= 1 && k <= size(), ErrorCode::invalid_argument,
                "knn needs 1 <= k <= N (k=" + std::to_string(k) + ", N=" + std::to_string(size()) + ")");
        require(i >= 0 && i < size(), ErrorCode::invalid_argument, "knn base index out of range");
        std::priority_queue<detail::Candidate> heap;
        search(0, i, k, heap);
        std::vector<detail::Candidate> best;
        best.reserve(heap.size());
        while (!heap.empty()) {
            best.push_back(heap.top());
            heap.pop();
        }
        return detail::to_neighbor_set(i, std::move(best));
    }

private:
    struct Node
    {
        std::size_t begin = 0, end = 0;
        int axis = -1; // -1 marks a leaf
        double split = 0.0;
        std::size_t left = 0, right = 0;
    };

    std::size_t build(std::size_t begin, std::size_t end)
    {
        const std::size_t id = m_nodes.size();
        m_nodes.push_back({begin, end});
        if (end - begin <= static_cast<std::size_t>(m_leaf_size)) return id;

        const auto& pts = *m_points;
        int axis = 0;
        double widest = -1.0;
        for (Eigen::Index c = 0; c < pts.rows(); ++c) {
            double lo = pts(c, m_order[begin]), hi = lo;
            for (std::size_t t = begin; t < end; ++t) {
                lo = std::min(lo, pts(c, m_order[t]));
                hi = std::max(hi, pts(c, m_order[t]));
            }
            if (hi - lo > widest) {
                widest = hi - lo;
                axis = static_cast<int>(c);
            }
        }
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(m_order.begin() + static_cast<std::ptrdiff_t>(begin),
                         m_order.begin() + static_cast<std::ptrdiff_t>(mid),
                         m_order.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](Eigen::Index a, Eigen::Index b) { return pts(axis, a) < pts(axis, b); });
        const double split = pts(axis, m_order[mid]);
        const std::size_t left = build(begin, mid);
        const std::size_t right = build(mid, end);
        m_nodes[id].axis = axis;
        m_nodes[id].split = split;
        m_nodes[id].left = left;
        m_nodes[id].right = right;
        return id;
    }

    void search(std::size_t node_id, Eigen::Index query, Eigen::Index k,
                std::priority_queue<detail::Candidate>& heap) const
    {
        const Node& node = m_nodes[node_id];
        if (node.axis < 0) {
            for (std::size_t t = node.begin; t < node.end; ++t) {
                const detail::Candidate c{detail::squared_distance(*m_points, query, m_order[t]), m_order[t]};
                if (static_cast<Eigen::Index>(heap.size()) < k) {
                    heap.push(c);
                } else if (c < heap.top()) {
                    heap.pop();
                    heap.push(c);
                }
            }
            return;
        }
        const double diff = (*m_points)(node.axis, query) - node.split;
        const std::size_t near = diff < 0.0 ? node.left : node.right;
        const std::size_t far = diff < 0.0 ? node.right : node.left;
        search(near, query, k, heap);
        // <= keeps equal-distance candidates on the far side reachable for tie breaking.
        if (static_cast<Eigen::Index>(heap.size()) < k || diff * diff <= heap.top().dist2)
            search(far, query, k, heap);
    }

    const Eigen::MatrixXd* m_points;
    int m_leaf_size;
    std::vector<Eigen::Index> m_order;
    std::vector<Node> m_nodes;
};

/// Default neighborhood size: max(12, ceil(2 log2 N)).
inline Eigen::Index default_neighbor_count(Eigen::Index n_points)
{
    const double grown = std::ceil(2.0 * std::log2(static_cast<double>(std::max<Eigen::Index>(n_points, 1))));
    return std::max<Eigen::Index>(12, static_cast<Eigen::Index>(grown));
}

} // namespace curvmesh
