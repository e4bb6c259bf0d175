#pragma once

// Benchmark generators: Swiss-roll features in R^3 / R^6, SPD and sphere
// response settings, the analytic unrolled geodesic, and the Monte-Carlo
// experiment driver with AMSE scoring against the noiseless target.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "frechet/errors.hpp"
#include "frechet/graph.hpp"
#include "frechet/metric_space.hpp"
#include "frechet/regression.hpp"
#include "frechet/rng.hpp"

namespace frechet {

enum class Setting { I, II, III, IV };
enum class Ambient { R3, R6 };
enum class LatentSource { Uniform, TruncatedNormal };

struct LatentSample {
    double u1 = 0.0;
    double u2 = 0.0;
};

inline double spiral_angle(double u) { return 4.0 * M_PI * (u + 0.5); }

inline Eigen::VectorXd embed_swiss_roll(const LatentSample& u, Ambient ambient) {
    if (ambient == Ambient::R3) {
        const double theta = spiral_angle(u.u1);
        Eigen::VectorXd x(3);
        x << theta * std::cos(theta) / 10.0, 4.0 * u.u2,
            theta * std::sin(theta) / 10.0;
        return x;
    }
    const double t1 = spiral_angle(u.u1);
    const double t2 = spiral_angle(u.u2);
    Eigen::VectorXd x(6);
    x << t1 * std::cos(t1) / 10.0, u.u2, t1 * std::sin(t1) / 10.0,
        t2 * std::cos(t2) / 10.0, -u.u1, t2 * std::sin(t2) / 10.0;
    return x;
}

namespace detail {

// Antiderivative of sqrt(1 + t^2) / 10 wrt theta, scaled for the /10 spiral.
inline double spiral_arc_antiderivative(double t) {
    return (t * std::sqrt(1.0 + t * t) + std::asinh(t)) / 20.0;
}

// Arc length of the R^3 spiral from theta(0) to theta(u).
inline double spiral_arc_length(double u) {
    return spiral_arc_antiderivative(spiral_angle(u)) -
           spiral_arc_antiderivative(spiral_angle(0.0));
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fb,
                        double fm, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol = 1e-12) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fb, fm, whole, tol, 40);
}

// Flat coordinate for one latent axis of the R^6 embedding: the spiral in two
// ambient coordinates plus one linear coordinate traversed by the same latent.
inline double r6_flat_coordinate(double u) {
    const double c = 2.0 * M_PI / 5.0;  // d(theta)/du / 10
    return integrate(
        [c](double t) {
            const double th = spiral_angle(t);
            return std::sqrt(c * c * (1.0 + th * th) + 1.0);
        },
        0.0, u);
}

}  // namespace detail

// Intrinsic geodesic distance between two latent points under the Swiss-roll
// embedding; both embeddings are isometric to flat planar strips.
inline double swiss_roll_geodesic(const LatentSample& a, const LatentSample& b,
                                  Ambient ambient) {
    if (ambient == Ambient::R3) {
        const double ds = detail::spiral_arc_length(a.u1) -
                          detail::spiral_arc_length(b.u1);
        const double dt = 4.0 * (a.u2 - b.u2);
        return std::hypot(ds, dt);
    }
    const double d1 =
        detail::r6_flat_coordinate(a.u1) - detail::r6_flat_coordinate(b.u1);
    const double d2 =
        detail::r6_flat_coordinate(a.u2) - detail::r6_flat_coordinate(b.u2);
    return std::hypot(d1, d2);
}

inline LatentSample sample_latent(LatentSource source, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (source == LatentSource::Uniform)
        return {unif(rng), unif(rng)};
    // Rejection from N((0.5, 0.5), [[1, 0.5], [0.5, 1]]) truncated to [0,1]^2.
    std::normal_distribution<double> norm(0.0, 1.0);
    const double l21 = 0.5, l22 = std::sqrt(0.75);
    for (;;) {
        const double z1 = norm(rng), z2 = norm(rng);
        const double u1 = 0.5 + z1;
        const double u2 = 0.5 + l21 * z1 + l22 * z2;
        if (u1 >= 0.0 && u1 <= 1.0 && u2 >= 0.0 && u2 <= 1.0)
            return {u1, u2};
    }
}

// Mean matrix D(U) for the SPD settings.
inline Eigen::MatrixXd setting_mean_matrix(Setting setting, const LatentSample& u) {
    if (setting == Setting::I) {
        const double rho = std::cos(4.0 * M_PI * (0.75 * u.u1 + 0.25 * u.u2));
        Eigen::Matrix2d d;
        d << 1.0, rho, rho, 1.0;
        return d;
    }
    const double r1 = 0.8 * std::cos(4.0 * M_PI * (0.75 * u.u1 + 0.25 * u.u2));
    const double r2 = 0.4 * std::cos(4.0 * M_PI * (0.25 * u.u1 + 0.75 * u.u2));
    Eigen::Matrix3d d;
    d << 1.0, r1, r2, r1, 1.0, r1, r2, r1, 1.0;
    return d;
}

// Symmetric matrix-variate normal draw: N(0,1) diagonal, N(0, 1/2)
// off-diagonal entries, scaled by sigma and shifted by the mean matrix.
inline Eigen::MatrixXd symmetric_normal(const Eigen::MatrixXd& mean, double sigma,
                                        std::mt19937_64& rng) {
    std::normal_distribution<double> norm(0.0, 1.0);
    const Eigen::Index d = mean.rows();
    Eigen::MatrixXd z(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        z(i, i) = norm(rng);
        for (Eigen::Index j = i + 1; j < d; ++j) {
            z(i, j) = norm(rng) / std::sqrt(2.0);
            z(j, i) = z(i, j);
        }
    }
    return mean + sigma * z;
}

inline MetricPoint gen_setting_spd(Setting setting, const LatentSample& u,
                                   double sigma, std::mt19937_64& rng) {
    return MetricPoint::spd(
        sym_matrix_exp(symmetric_normal(setting_mean_matrix(setting, u), sigma, rng)));
}

inline Eigen::Vector3d setting3_mean(const LatentSample& u) {
    const double b1u = u.u1;  // beta1 = (1, 0)
    const double b2u = u.u2;  // beta2 = (0, 1)
    const double s = std::sqrt(std::max(0.0, 1.0 - b1u * b1u));
    return {s * std::cos(M_PI * b2u), s * std::sin(M_PI * b2u), b1u};
}

// Orthonormal tangent basis at m: Gram-Schmidt of the canonical basis vectors
// against m, keeping the two with the largest residual norm, ordered by index.
inline std::pair<Eigen::Vector3d, Eigen::Vector3d> sphere_tangent_basis(
    const Eigen::Vector3d& m) {
    Eigen::Vector3d residuals[3];
    double norms[3];
    for (int i = 0; i < 3; ++i) {
        Eigen::Vector3d e = Eigen::Vector3d::Unit(i);
        residuals[i] = e - e.dot(m) * m;
        norms[i] = residuals[i].norm();
    }
    int a = 0, b = 1;
    // two largest residual norms, ties toward lower index
    int order[3] = {0, 1, 2};
    std::stable_sort(order, order + 3, [&](int i, int j) { return norms[i] > norms[j]; });
    a = std::min(order[0], order[1]);
    b = std::max(order[0], order[1]);
    Eigen::Vector3d v1 = residuals[a] / norms[a];
    Eigen::Vector3d r2 = residuals[b] - residuals[b].dot(v1) * v1;
    return {v1, r2 / r2.norm()};
}

inline constexpr double kSphereNoiseSd = 0.2;

inline MetricPoint gen_setting_III(const LatentSample& u, std::mt19937_64& rng) {
    std::normal_distribution<double> norm(0.0, kSphereNoiseSd);
    const Eigen::Vector3d m = setting3_mean(u);
    const double d1 = norm(rng), d2 = norm(rng);
    auto [v1, v2] = sphere_tangent_basis(m);
    const Eigen::Vector3d eps = d1 * v1 + d2 * v2;
    return MetricPoint::sphere(sphere_exp(m, eps));
}

inline Eigen::Vector3d setting4_point(const LatentSample& u, double e1, double e2) {
    const double a = u.u1 + e1;  // beta1 = (1, 0)
    const double b = u.u2 + e2;  // beta2 = (0, 1)
    Eigen::Vector3d y(std::sin(a) * std::sin(b), std::sin(a) * std::cos(b),
                      std::abs(std::cos(a)));
    return y / y.norm();
}

inline MetricPoint gen_setting_IV(const LatentSample& u, std::mt19937_64& rng) {
    std::normal_distribution<double> norm(0.0, kSphereNoiseSd);
    const double e1 = norm(rng);
    const double e2 = norm(rng);
    return MetricPoint::sphere(setting4_point(u, e1, e2));
}

// The regression target m_X: the zero-noise generator output.
inline MetricPoint noiseless_response(Setting setting, const LatentSample& u) {
    switch (setting) {
        case Setting::I:
        case Setting::II:
            return MetricPoint::spd(sym_matrix_exp(setting_mean_matrix(setting, u)));
        case Setting::III:
            return MetricPoint::sphere(setting3_mean(u));
        default:
            return MetricPoint::sphere(setting4_point(u, 0.0, 0.0));
    }
}

inline MetricPoint gen_response(Setting setting, const LatentSample& u,
                                double sigma, std::mt19937_64& rng) {
    switch (setting) {
        case Setting::I:
        case Setting::II:
            return gen_setting_spd(setting, u, sigma, rng);
        case Setting::III:
            return gen_setting_III(u, rng);
        default:
            return gen_setting_IV(u, rng);
    }
}

inline constexpr std::uint64_t kCalibrationSeed = 0x5eedca1bf00dULL;
inline constexpr int kCalibrationDraws = 100000;

// sigma for a target snr: the pooled standard deviation of the free entries
// of D(U) over a fixed batch of latent draws, divided by snr.
inline double calibrate_sigma(Setting setting, double snr, LatentSource source) {
    if (setting == Setting::III || setting == Setting::IV) return 0.0;
    if (!(snr > 0.0))
        throw ConfigError("snr must be positive");
    auto rng = child_rng(kCalibrationSeed, static_cast<int>(setting));
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    for (int t = 0; t < kCalibrationDraws; ++t) {
        const Eigen::MatrixXd d = setting_mean_matrix(setting, sample_latent(source, rng));
        for (Eigen::Index i = 0; i < d.rows(); ++i)
            for (Eigen::Index j = i; j < d.cols(); ++j) {
                sum += d(i, j);
                sum_sq += d(i, j) * d(i, j);
                ++count;
            }
    }
    const double mean = sum / static_cast<double>(count);
    const double var = sum_sq / static_cast<double>(count) - mean * mean;
    return std::sqrt(std::max(0.0, var)) / snr;
}

struct ExperimentConfig {
    Setting setting = Setting::I;
    Ambient ambient = Ambient::R3;
    LatentSource latent = LatentSource::Uniform;
    int n = 100;
    std::vector<int> m_values = {0};
    int n_test = 1000;
    int realizations = 100;
    double snr = 4.0;  // SPD settings only
    std::uint64_t seed = 1;
    std::vector<std::string> methods = {"nw", "knn", "semi-nw", "semi-knn"};
    int k_grid_max = 10;
    GraphRule::Kind graph_kind = GraphRule::Kind::RGraph;
    double radius = 0.0;  // 0 => auto (default_radius per realization)
    int graph_k = 4;
    double fermat_s = 1.0;
    int threads = 0;  // 0 => hardware concurrency

    void validate() const {
        if (n < 2) throw ConfigError("n must be >= 2");
        if (n_test < 1) throw ConfigError("n_test must be >= 1");
        if (realizations < 1) throw ConfigError("realizations must be >= 1");
        if (m_values.empty()) throw ConfigError("m list must be nonempty");
        for (int m : m_values)
            if (m < 0) throw ConfigError("m must be >= 0");
        if ((setting == Setting::I || setting == Setting::II) && !(snr > 0.0))
            throw ConfigError("snr must be positive for SPD settings");
        for (const auto& method : methods)
            if (method != "nw" && method != "knn" && method != "semi-nw" &&
                method != "semi-knn")
                throw ConfigError("unknown method '" + method + "'");
        if (fermat_s < 1.0) throw ConfigError("fermat_s must be >= 1");
    }
};

struct TrialResult {
    int realization = 0;
    int m = 0;
    std::string method;
    double mse = 0.0;
    double hyperparam = 0.0;
    double seconds = 0.0;
    std::string error;  // empty on success; module error kind otherwise
};

struct SummaryRow {
    std::string method;
    int m = 0;
    double amse = 0.0;
    double se = 0.0;
    int trials_ok = 0;
};

struct ExperimentResult {
    std::vector<TrialResult> trials;
    std::vector<SummaryRow> summary;
    double sigma = 0.0;
};

namespace detail {

inline bool is_semi(const std::string& method) {
    return method.rfind("semi-", 0) == 0;
}

struct TrialData {
    LabeledSet labeled;
    FeatureMatrix all_features;
    std::vector<Eigen::VectorXd> test_features;
    std::vector<MetricPoint> test_targets;
    std::vector<LatentSample> test_latents;
};

// Child streams are split per role so the labeled sample, responses, and test
// points are identical across different unlabeled sizes m (the unlabeled sets
// are nested prefixes of one stream).
inline TrialData draw_trial_data(const ExperimentConfig& cfg, int m,
                                 int realization, double sigma) {
    TrialData data;
    auto rng_labeled = child_rng(cfg.seed, 4 * realization + 0);
    auto rng_unlabeled = child_rng(cfg.seed, 4 * realization + 1);
    auto rng_test = child_rng(cfg.seed, 4 * realization + 2);
    auto rng_resp = child_rng(cfg.seed, 4 * realization + 3);

    std::vector<LatentSample> labeled_u(cfg.n);
    for (auto& u : labeled_u) u = sample_latent(cfg.latent, rng_labeled);

    const Eigen::Index p = cfg.ambient == Ambient::R3 ? 3 : 6;
    data.all_features.x.resize(cfg.n + m, p);
    data.all_features.labeled_count = cfg.n;
    data.labeled.features.resize(cfg.n, p);
    for (int i = 0; i < cfg.n; ++i) {
        data.all_features.x.row(i) = embed_swiss_roll(labeled_u[i], cfg.ambient);
        data.labeled.features.row(i) = data.all_features.x.row(i);
        data.labeled.responses.push_back(
            gen_response(cfg.setting, labeled_u[i], sigma, rng_resp));
    }
    for (int i = 0; i < m; ++i)
        data.all_features.x.row(cfg.n + i) =
            embed_swiss_roll(sample_latent(cfg.latent, rng_unlabeled), cfg.ambient);

    for (int i = 0; i < cfg.n_test; ++i) {
        const LatentSample u = sample_latent(cfg.latent, rng_test);
        data.test_latents.push_back(u);
        data.test_features.push_back(embed_swiss_roll(u, cfg.ambient));
        data.test_targets.push_back(noiseless_response(cfg.setting, u));
    }
    return data;
}

inline std::vector<RegressorSpec> nw_candidates(const Eigen::VectorXd& min_dists,
                                                RegressorSpec::Mode mode) {
    std::vector<RegressorSpec> out;
    for (double h : default_bandwidth_grid(min_dists))
        out.push_back(RegressorSpec::nw(h, mode));
    return out;
}

inline std::vector<RegressorSpec> knn_candidates(int k_max, int n,
                                                 RegressorSpec::Mode mode) {
    std::vector<RegressorSpec> out;
    for (int k = 1; k <= std::min(k_max, n - 1); ++k)
        out.push_back(RegressorSpec::knn(k, mode));
    return out;
}

inline std::vector<TrialResult> run_trial(const ExperimentConfig& cfg, int m,
                                          int realization, double sigma) {
    const TrialData data = draw_trial_data(cfg, m, realization, sigma);

    bool any_semi = false;
    for (const auto& method : cfg.methods) any_semi |= is_semi(method);

    NeighborGraph graph;
    Eigen::MatrixXd graph_pairwise;
    std::vector<DistanceField> test_fields;
    if (any_semi) {
        GraphRule rule = cfg.graph_kind == GraphRule::Kind::RGraph
                             ? GraphRule::r_graph(cfg.radius > 0.0
                                                      ? cfg.radius
                                                      : default_radius(data.all_features))
                             : GraphRule::knn(cfg.graph_k);
        graph = build_graph(data.all_features, rule, cfg.fermat_s);
        graph_pairwise = pairwise_labeled_distances(graph, data.all_features);
        test_fields.reserve(data.test_features.size());
        for (const auto& q : data.test_features)
            test_fields.push_back(query_distances(graph, data.all_features, q));
    }
    const Eigen::MatrixXd euclid_pairwise = euclidean_pairwise(data.labeled.features);

    std::vector<TrialResult> results;
    for (const auto& method : cfg.methods) {
        TrialResult tr;
        tr.realization = realization;
        tr.m = m;
        tr.method = method;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const bool semi = is_semi(method);
            const bool nw = method == "nw" || method == "semi-nw";
            const auto mode = semi ? RegressorSpec::Mode::SemiSupervised
                                   : RegressorSpec::Mode::Supervised;
            const Eigen::MatrixXd& pd = semi ? graph_pairwise : euclid_pairwise;

            std::vector<RegressorSpec> candidates =
                nw ? nw_candidates(min_offdiagonal(pd), mode)
                   : knn_candidates(cfg.k_grid_max, cfg.n, mode);
            RegressorSpec spec =
                loocv_select(data.labeled, candidates,
                             semi ? &graph : nullptr,
                             semi ? &data.all_features : nullptr);
            tr.hyperparam = spec.hyperparam();

            double mse = 0.0;
            for (std::size_t i = 0; i < data.test_features.size(); ++i) {
                Eigen::VectorXd dists;
                if (semi) {
                    if (test_fields[i].all_unreachable())
                        throw IsolatedQuery("test query " + std::to_string(i) +
                                            " unreachable");
                    dists = test_fields[i].dists;
                } else {
                    dists = euclidean_distances(data.labeled.features,
                                                data.test_features[i]);
                }
                MetricPoint pred =
                    nw ? nw_from_distances(data.labeled, dists, spec.bandwidth)
                       : knn_from_distances(data.labeled, dists, spec.k);
                const double err = distance(pred, data.test_targets[i]);
                mse += err * err;
            }
            tr.mse = mse / static_cast<double>(data.test_features.size());
        } catch (const Error& e) {
            tr.mse = std::numeric_limits<double>::quiet_NaN();
            tr.error = e.kind();
        }
        tr.seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
        results.push_back(std::move(tr));
    }
    return results;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    result.sigma = calibrate_sigma(cfg.setting, cfg.snr, cfg.latent);

    struct Task {
        int m;
        int realization;
    };
    std::vector<Task> tasks;
    for (int m : cfg.m_values)
        for (int j = 0; j < cfg.realizations; ++j)
            tasks.push_back({m, j});

    std::vector<std::vector<TrialResult>> slots(tasks.size());
    const unsigned hw = std::thread::hardware_concurrency();
    const int n_threads = cfg.threads > 0 ? cfg.threads
                                          : static_cast<int>(hw ? hw : 1);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            slots[t] = detail::run_trial(cfg, tasks[t].m, tasks[t].realization,
                                         result.sigma);
        }
    };
    if (n_threads <= 1 || tasks.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (auto& slot : slots)
        for (auto& tr : slot) result.trials.push_back(std::move(tr));

    for (int m : cfg.m_values) {
        for (const auto& method : cfg.methods) {
            SummaryRow row;
            row.method = method;
            row.m = m;
            double sum = 0.0, sum_sq = 0.0;
            int count = 0;
            for (const auto& tr : result.trials) {
                if (tr.m != m || tr.method != method || !tr.error.empty())
                    continue;
                sum += tr.mse;
                sum_sq += tr.mse * tr.mse;
                ++count;
            }
            row.trials_ok = count;
            if (count > 0) {
                row.amse = sum / count;
                const double var =
                    count > 1 ? (sum_sq - sum * sum / count) / (count - 1) : 0.0;
                row.se = std::sqrt(std::max(0.0, var) / count);
            } else {
                row.amse = std::numeric_limits<double>::quiet_NaN();
                row.se = std::numeric_limits<double>::quiet_NaN();
            }
            result.summary.push_back(std::move(row));
        }
    }
    return result;
}

}  // namespace frechet
