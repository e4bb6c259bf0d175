#pragma once

// The four Frechet regressors (supervised / semi-supervised x NW / kNN),
// kernel machinery, and leave-one-out cross-validation for h and k.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frechet/errors.hpp"
#include "frechet/graph.hpp"
#include "frechet/metric_space.hpp"

namespace frechet {

struct LabeledSet {
    Eigen::MatrixXd features;  // n x p
    std::vector<MetricPoint> responses;

    Eigen::Index size() const { return features.rows(); }

    void validate() const {
        if (static_cast<std::size_t>(features.rows()) != responses.size())
            throw DimensionMismatch("feature/response length mismatch");
        for (const auto& y : responses)
            if (!y.same_space(responses.front()))
                throw VariantMismatch("responses mix metric spaces");
    }
};

struct RegressorSpec {
    enum class Family { NW, Knn };
    enum class Mode { Supervised, SemiSupervised };

    Family family = Family::NW;
    Mode mode = Mode::Supervised;
    double bandwidth = 0.0;  // NW only
    int k = 0;               // Knn only

    static RegressorSpec nw(double h, Mode m) { return {Family::NW, m, h, 0}; }
    static RegressorSpec knn(int k, Mode m) { return {Family::Knn, m, 0.0, k}; }

    double hyperparam() const {
        return family == Family::NW ? bandwidth : static_cast<double>(k);
    }
};

struct FittedRegressor {
    RegressorSpec spec;
    LabeledSet labeled;
    // SemiSupervised only: graph over all N feature points (labeled first).
    std::shared_ptr<const NeighborGraph> graph;
    std::shared_ptr<const FeatureMatrix> all_features;

    bool semi() const {
        return spec.mode == RegressorSpec::Mode::SemiSupervised;
    }
};

// Epanechnikov kernel on [0, 1].
inline double kernel_eval(double u) {
    return u < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

namespace detail {

inline Eigen::VectorXd euclidean_distances(const Eigen::MatrixXd& points,
                                           const Eigen::VectorXd& query) {
    return (points.rowwise() - query.transpose()).rowwise().norm();
}

inline Eigen::VectorXd distances_for(const FittedRegressor& fit,
                                     const Eigen::VectorXd& query) {
    if (!fit.semi())
        return euclidean_distances(fit.labeled.features, query);
    DistanceField field = query_distances(*fit.graph, *fit.all_features, query);
    if (field.all_unreachable())
        throw IsolatedQuery("query is not connected to any labeled vertex");
    return field.dists;
}

}  // namespace detail

// NW prediction from an already computed distance vector. The 1/(n h^p)
// normalization of K_h cancels in the argmin and is omitted.
inline MetricPoint nw_from_distances(const LabeledSet& labeled,
                                     const Eigen::VectorXd& dists, double h) {
    if (!(h > 0.0) || !std::isfinite(h))
        throw ConfigError("NW bandwidth must be positive and finite");
    WeightedSample sample;
    double total = 0.0;
    for (Eigen::Index i = 0; i < labeled.size(); ++i) {
        const double d = dists[i];
        const double w = std::isfinite(d) ? kernel_eval(d / h) : 0.0;
        sample.points.push_back(labeled.responses[i]);
        sample.weights.push_back(w);
        total += w;
    }
    if (total <= 0.0)
        throw EmptyNeighborhood("no labeled point within bandwidth " +
                                std::to_string(h));
    return frechet_mean(sample);
}

// kNN prediction from a distance vector; ties broken by lower label index.
inline MetricPoint knn_from_distances(const LabeledSet& labeled,
                                      const Eigen::VectorXd& dists, int k) {
    const Eigen::Index n = labeled.size();
    if (k < 1 || k > n)
        throw ConfigError("k must satisfy 1 <= k <= n");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return dists[a] < dists[b]; });
    WeightedSample sample;
    for (int t = 0; t < k; ++t) {
        if (!std::isfinite(dists[order[t]]))
            throw NotEnoughReachable("fewer than k labeled vertices reachable");
        sample.points.push_back(labeled.responses[order[t]]);
        sample.weights.push_back(1.0);
    }
    return frechet_mean(sample);
}

inline MetricPoint predict_nw(const FittedRegressor& fit,
                              const Eigen::VectorXd& query) {
    return nw_from_distances(fit.labeled, detail::distances_for(fit, query),
                             fit.spec.bandwidth);
}

inline MetricPoint predict_knn(const FittedRegressor& fit,
                               const Eigen::VectorXd& query) {
    return knn_from_distances(fit.labeled, detail::distances_for(fit, query),
                              fit.spec.k);
}

inline MetricPoint predict(const FittedRegressor& fit,
                           const Eigen::VectorXd& query) {
    return fit.spec.family == RegressorSpec::Family::NW ? predict_nw(fit, query)
                                                        : predict_knn(fit, query);
}

// Minimal distance of each point to the others, given a full distance matrix.
inline Eigen::VectorXd min_offdiagonal(const Eigen::MatrixXd& dists) {
    const Eigen::Index n = dists.rows();
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double m = kInf;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) m = std::min(m, dists(i, j));
        out[i] = m;
    }
    return out;
}

inline Eigen::MatrixXd euclidean_pairwise(const Eigen::MatrixXd& points) {
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out(i, j) = (points.row(i) - points.row(j)).norm();
    return out;
}

// Bandwidth grid {5^0.1 h0, ..., 5^1.0 h0} with h0 the median of each labeled
// point's minimal distance to the others (Euclidean or graph, per mode).
inline std::vector<double> default_bandwidth_grid(const Eigen::VectorXd& min_dists) {
    std::vector<double> finite;
    for (Eigen::Index i = 0; i < min_dists.size(); ++i)
        if (std::isfinite(min_dists[i])) finite.push_back(min_dists[i]);
    if (finite.size() < 2)
        throw DegenerateDistances("need at least two points with finite distances");
    std::sort(finite.begin(), finite.end());
    const std::size_t n = finite.size();
    const double h0 = n % 2 == 1 ? finite[n / 2]
                                 : 0.5 * (finite[n / 2 - 1] + finite[n / 2]);
    if (!(h0 > 0.0))
        throw DegenerateDistances("median minimal distance is zero");
    std::vector<double> grid(10);
    for (int j = 1; j <= 10; ++j)
        grid[j - 1] = std::pow(5.0, 0.1 * j) * h0;
    return grid;
}

namespace detail {

// CV loss of one candidate over all leave-one-out folds; +inf folds when the
// reduced regressor cannot predict (empty neighborhood, unreachable, ...).
inline double loocv_loss(const LabeledSet& labeled,
                         const Eigen::MatrixXd& pairwise,
                         const RegressorSpec& cand) {
    const Eigen::Index n = labeled.size();
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        LabeledSet reduced;
        reduced.features.resize(n - 1, labeled.features.cols());
        Eigen::VectorXd dists(n - 1);
        Eigen::Index t = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            reduced.features.row(t) = labeled.features.row(j);
            reduced.responses.push_back(labeled.responses[j]);
            dists[t] = pairwise(i, j);
            ++t;
        }
        try {
            MetricPoint pred =
                cand.family == RegressorSpec::Family::NW
                    ? nw_from_distances(reduced, dists, cand.bandwidth)
                    : knn_from_distances(reduced, dists, cand.k);
            const double err = distance(pred, labeled.responses[i]);
            total += err * err;
        } catch (const Error&) {
            return kInf;
        }
    }
    return total / static_cast<double>(n);
}

}  // namespace detail

// Selects the candidate with minimal leave-one-out CV loss. In the
// semi-supervised mode the held-out point stays in the graph as an unlabeled
// vertex, so the precomputed pairwise graph distances apply unchanged.
// Ties break toward the earlier candidate (grids are ascending in h / k).
inline RegressorSpec loocv_select(const LabeledSet& labeled,
                                  std::vector<RegressorSpec> candidates,
                                  const NeighborGraph* graph = nullptr,
                                  const FeatureMatrix* all_features = nullptr) {
    labeled.validate();
    if (candidates.empty())
        throw ConfigError("empty candidate grid");
    if (labeled.size() < 2)
        throw ConfigError("LOOCV needs at least two labeled points");

    const bool semi =
        candidates.front().mode == RegressorSpec::Mode::SemiSupervised;
    Eigen::MatrixXd pairwise =
        semi ? pairwise_labeled_distances(*graph, *all_features)
             : euclidean_pairwise(labeled.features);

    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const RegressorSpec& a, const RegressorSpec& b) {
                         return a.hyperparam() < b.hyperparam();
                     });

    double best_loss = kInf;
    const RegressorSpec* best = nullptr;
    for (const auto& cand : candidates) {
        const double loss = detail::loocv_loss(labeled, pairwise, cand);
        if (loss < best_loss) {
            best_loss = loss;
            best = &cand;
        }
    }
    if (!best)
        throw AllCandidatesFailed("every candidate has infinite CV loss");
    return *best;
}

}  // namespace frechet
