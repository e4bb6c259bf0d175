#pragma once

// Neighbor graphs over feature points and shortest-path graph distances,
// including virtual insertion of a query point for inductive prediction.

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "frechet/errors.hpp"

namespace frechet {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// All N feature points in R^p; the first labeled_count rows carry responses.
struct FeatureMatrix {
    Eigen::MatrixXd x;  // N x p, row per point
    Eigen::Index labeled_count = 0;

    Eigen::Index size() const { return x.rows(); }
    Eigen::Index dim() const { return x.cols(); }

    void validate() const {
        if (labeled_count < 0 || labeled_count > x.rows())
            throw DimensionMismatch("labeled_count out of range");
        if (!x.allFinite())
            throw DimensionMismatch("feature matrix has non-finite entries");
    }
};

struct GraphRule {
    enum class Kind { RGraph, Knn };
    Kind kind = Kind::RGraph;
    double radius = 0.0;
    int k = 0;

    static GraphRule r_graph(double r) { return {Kind::RGraph, r, 0}; }
    static GraphRule knn(int k) { return {Kind::Knn, 0.0, k}; }
};

struct NeighborGraph {
    // Per-vertex sorted list of (neighbor index, edge weight).
    std::vector<std::vector<std::pair<int, double>>> adjacency;
    GraphRule rule;
    double fermat_s = 1.0;

    int num_vertices() const { return static_cast<int>(adjacency.size()); }

    std::size_t num_edges() const {
        std::size_t deg = 0;
        for (const auto& a : adjacency) deg += a.size();
        return deg / 2;
    }
};

// Graph distances from one query to every labeled vertex; +inf = unreachable.
struct DistanceField {
    Eigen::VectorXd query;
    Eigen::VectorXd dists;  // length n (labeled vertices only)

    bool all_unreachable() const {
        return (dists.array() == kInf).all();
    }
};

// r = 1.2 * max_i min_{j != i} |X_i - X_j|; guarantees no isolated vertex.
inline double default_radius(const FeatureMatrix& features) {
    features.validate();
    const Eigen::Index n = features.size();
    if (n < 2)
        throw TooFewPoints("default_radius needs at least two points");
    double max_min = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double min_d = kInf;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            min_d = std::min(min_d, (features.x.row(i) - features.x.row(j)).norm());
        }
        max_min = std::max(max_min, min_d);
    }
    return 1.2 * max_min;
}

namespace detail {

// k nearest neighbors of row i by Euclidean distance, ties by lower index.
inline std::vector<int> knn_of_point(const Eigen::MatrixXd& points,
                                     const Eigen::RowVectorXd& query,
                                     int k, int skip_index) {
    const int n = static_cast<int>(points.rows());
    std::vector<std::pair<double, int>> cand;
    cand.reserve(n);
    for (int j = 0; j < n; ++j) {
        if (j == skip_index) continue;
        cand.emplace_back((points.row(j) - query).norm(), j);
    }
    const int take = std::min<int>(k, static_cast<int>(cand.size()));
    std::partial_sort(cand.begin(), cand.begin() + take, cand.end());
    std::vector<int> out(take);
    for (int t = 0; t < take; ++t) out[t] = cand[t].second;
    return out;
}

inline void add_edge(std::vector<std::vector<std::pair<int, double>>>& adj,
                     int i, int j, double w) {
    auto& ai = adj[i];
    auto it = std::lower_bound(ai.begin(), ai.end(), std::make_pair(j, -kInf));
    if (it != ai.end() && it->first == j) return;
    ai.insert(it, {j, w});
}

inline Eigen::VectorXd dijkstra(
    const NeighborGraph& graph, int source,
    const std::vector<std::pair<int, double>>* virtual_source_edges = nullptr) {
    const int n = graph.num_vertices();
    Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, kInf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    if (virtual_source_edges) {
        for (const auto& [v, w] : *virtual_source_edges) {
            if (w < dist[v]) {
                dist[v] = w;
                heap.emplace(w, v);
            }
        }
    } else {
        dist[source] = 0.0;
        heap.emplace(0.0, source);
    }
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        for (const auto& [v, w] : graph.adjacency[u]) {
            const double nd = d + w;
            if (nd < dist[v]) {
                dist[v] = nd;
                heap.emplace(nd, v);
            }
        }
    }
    return dist;
}

}  // namespace detail

inline NeighborGraph build_graph(const FeatureMatrix& features, GraphRule rule,
                                 double fermat_s = 1.0) {
    features.validate();
    if (fermat_s < 1.0)
        throw ConfigError("fermat_s must be >= 1");
    const int n = static_cast<int>(features.size());
    if (rule.kind == GraphRule::Kind::RGraph && !(rule.radius > 0.0))
        throw ConfigError("r-graph radius must be positive");
    if (rule.kind == GraphRule::Kind::Knn && (rule.k < 1 || rule.k >= n))
        throw ConfigError("knn-graph requires 1 <= k < N");

    NeighborGraph g;
    g.rule = rule;
    g.fermat_s = fermat_s;
    g.adjacency.resize(n);

    if (rule.kind == GraphRule::Kind::RGraph) {
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double d = (features.x.row(i) - features.x.row(j)).norm();
                if (d <= rule.radius) {
                    const double w = std::pow(d, fermat_s);
                    detail::add_edge(g.adjacency, i, j, w);
                    detail::add_edge(g.adjacency, j, i, w);
                }
            }
        }
    } else {
        // Mutualized union: edge (i,j) iff j in knn(i) or i in knn(j).
        for (int i = 0; i < n; ++i) {
            const auto nbrs =
                detail::knn_of_point(features.x, features.x.row(i), rule.k, i);
            for (int j : nbrs) {
                const double d = (features.x.row(i) - features.x.row(j)).norm();
                const double w = std::pow(d, fermat_s);
                detail::add_edge(g.adjacency, i, j, w);
                detail::add_edge(g.adjacency, j, i, w);
            }
        }
    }
    return g;
}

// Shortest-path distances from an existing vertex to every vertex.
inline Eigen::VectorXd vertex_distances(const NeighborGraph& graph, int source) {
    return detail::dijkstra(graph, source);
}

// Inserts the query as a virtual vertex (r-graph: connect within radius;
// knn-graph: expand-only connection to its k nearest vertices) and returns
// shortest-path distances to the labeled vertices. The graph is not mutated.
inline DistanceField query_distances(const NeighborGraph& graph,
                                     const FeatureMatrix& features,
                                     const Eigen::VectorXd& query) {
    if (query.size() != features.dim())
        throw DimensionMismatch("query dimension does not match features");
    const int n_labeled = static_cast<int>(features.labeled_count);

    std::vector<std::pair<int, double>> edges;
    if (graph.rule.kind == GraphRule::Kind::RGraph) {
        for (int j = 0; j < graph.num_vertices(); ++j) {
            const double d = (features.x.row(j) - query.transpose()).norm();
            if (d <= graph.rule.radius)
                edges.emplace_back(j, std::pow(d, graph.fermat_s));
        }
    } else {
        for (int j : detail::knn_of_point(features.x, query.transpose(),
                                          graph.rule.k, -1)) {
            const double d = (features.x.row(j) - query.transpose()).norm();
            edges.emplace_back(j, std::pow(d, graph.fermat_s));
        }
    }

    DistanceField field;
    field.query = query;
    if (edges.empty()) {
        field.dists = Eigen::VectorXd::Constant(n_labeled, kInf);
        return field;
    }
    Eigen::VectorXd all = detail::dijkstra(graph, -1, &edges);
    field.dists = all.head(n_labeled);
    return field;
}

// Symmetric n x n matrix of graph distances among labeled vertices, computed
// over the full N-vertex graph (unlabeled vertices serve as waypoints).
inline Eigen::MatrixXd pairwise_labeled_distances(const NeighborGraph& graph,
                                                  const FeatureMatrix& features) {
    const int n = static_cast<int>(features.labeled_count);
    Eigen::MatrixXd out(n, n);
    for (int i = 0; i < n; ++i)
        out.row(i) = detail::dijkstra(graph, i).head(n).transpose();
    // Dijkstra from each source is exact; enforce symmetry bit-for-bit.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            out(j, i) = out(i, j);
    return out;
}

// Edge list with src < dst, each undirected edge once.
struct EdgeRecord {
    int src;
    int dst;
    double weight;
};

inline std::vector<EdgeRecord> edge_list(const NeighborGraph& graph) {
    std::vector<EdgeRecord> out;
    for (int i = 0; i < graph.num_vertices(); ++i)
        for (const auto& [j, w] : graph.adjacency[i])
            if (i < j) out.push_back({i, j, w});
    return out;
}

inline int connected_components(const NeighborGraph& graph) {
    const int n = graph.num_vertices();
    std::vector<int> label(n, -1);
    int comps = 0;
    std::vector<int> stack;
    for (int s = 0; s < n; ++s) {
        if (label[s] >= 0) continue;
        label[s] = comps;
        stack.push_back(s);
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (const auto& [v, w] : graph.adjacency[u]) {
                if (label[v] < 0) {
                    label[v] = comps;
                    stack.push_back(v);
                }
            }
        }
        ++comps;
    }
    return comps;
}

}  // namespace frechet
