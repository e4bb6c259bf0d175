#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "frechet/simulation.hpp"
#include "oracles.hpp"

using namespace frechet;

TEST_CASE("embed_swiss_roll: R3 and R6 anchor points") {
    const Eigen::VectorXd a = embed_swiss_roll({0.0, 0.0}, Ambient::R3);
    REQUIRE(a[0] == Catch::Approx(2.0 * M_PI / 10.0).margin(1e-12));
    REQUIRE(a[1] == 0.0);
    REQUIRE(a[2] == Catch::Approx(0.0).margin(1e-12));

    const Eigen::VectorXd b = embed_swiss_roll({0.25, 1.0}, Ambient::R3);
    REQUIRE(b[0] == Catch::Approx(-3.0 * M_PI / 10.0).margin(1e-12));
    REQUIRE(b[1] == Catch::Approx(4.0).margin(0));
    REQUIRE(b[2] == Catch::Approx(0.0).margin(1e-12));

    const Eigen::VectorXd c = embed_swiss_roll({0.0, 0.0}, Ambient::R6);
    REQUIRE(c.size() == 6);
    REQUIRE(c[0] == Catch::Approx(2.0 * M_PI / 10.0).margin(1e-12));
    REQUIRE(c[1] == 0.0);
    REQUIRE(c[3] == Catch::Approx(2.0 * M_PI / 10.0).margin(1e-12));
    REQUIRE(c[4] == 0.0);
}

TEST_CASE("swiss_roll_geodesic: degenerate and flat-direction cases") {
    REQUIRE(swiss_roll_geodesic({0.3, 0.7}, {0.3, 0.7}, Ambient::R3) == 0.0);
    REQUIRE(swiss_roll_geodesic({0.0, 0.0}, {0.0, 0.5}, Ambient::R3) ==
            Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("swiss_roll_geodesic: spiral arc matches quadrature") {
    const double expected = oracle::simpson(
        [](double t) { return std::sqrt(1.0 + t * t) / 10.0; }, 2.0 * M_PI,
        6.0 * M_PI);
    REQUIRE(swiss_roll_geodesic({0.0, 0.0}, {1.0, 0.0}, Ambient::R3) ==
            Catch::Approx(expected).margin(1e-8));
}

TEST_CASE("swiss_roll_geodesic: R6 flat coordinates match quadrature") {
    auto speed = [](double u) {
        const double th = spiral_angle(u);
        const double c = 2.0 * M_PI / 5.0;
        return std::sqrt(c * c * (1.0 + th * th) + 1.0);
    };
    const double f_along_u1 = oracle::simpson(speed, 0.0, 0.8);
    REQUIRE(swiss_roll_geodesic({0.0, 0.3}, {0.8, 0.3}, Ambient::R6) ==
            Catch::Approx(f_along_u1).margin(1e-7));
    // symmetric roles of the two latent coordinates
    REQUIRE(swiss_roll_geodesic({0.3, 0.0}, {0.3, 0.8}, Ambient::R6) ==
            Catch::Approx(f_along_u1).margin(1e-7));
}

TEST_CASE("swiss_roll_geodesic: latent-space metric axioms") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const LatentSample a{unif(rng), unif(rng)};
        const LatentSample b{unif(rng), unif(rng)};
        const LatentSample c{unif(rng), unif(rng)};
        const double ab = swiss_roll_geodesic(a, b, Ambient::R3);
        REQUIRE(ab == swiss_roll_geodesic(b, a, Ambient::R3));
        REQUIRE(ab >= 0.0);
        REQUIRE(ab <= swiss_roll_geodesic(a, c, Ambient::R3) +
                          swiss_roll_geodesic(c, b, Ambient::R3) + 1e-10);
    }
}

TEST_CASE("setting I/II: noiseless anchor values") {
    // beta'u = 0.25 => rho = cos(pi) = -1
    Eigen::Matrix2d d1;
    d1 << 1.0, -1.0, -1.0, 1.0;
    const LatentSample u1{1.0 / 3.0, 0.0};  // 0.75/3 = 0.25
    REQUIRE(setting_mean_matrix(Setting::I, u1).isApprox(d1, 1e-12));
    const auto y1 = noiseless_response(Setting::I, u1);
    REQUIRE(y1.mat().isApprox(sym_matrix_exp(d1), 1e-12));

    const LatentSample u2{0.5, 0.5};  // beta_i'u = 0.5, cos(2 pi) = 1
    const auto d2 = setting_mean_matrix(Setting::II, u2);
    REQUIRE(d2(0, 1) == Catch::Approx(0.8).margin(1e-12));
    REQUIRE(d2(0, 2) == Catch::Approx(0.4).margin(1e-12));
    REQUIRE(d2(1, 2) == Catch::Approx(0.8).margin(1e-12));
    REQUIRE(noiseless_response(Setting::II, u2).mat().isApprox(sym_matrix_exp(d2), 1e-12));
}

TEST_CASE("setting I: log responses have the right mean (Monte-Carlo)") {
    const LatentSample u{0.37, 0.61};
    const Eigen::Matrix2d target = setting_mean_matrix(Setting::I, u);
    const double sigma = 0.25;
    auto rng = child_rng(7, 0);
    const int draws = 100000;
    Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
    for (int t = 0; t < draws; ++t)
        acc += sym_matrix_log(gen_setting_spd(Setting::I, u, sigma, rng).mat());
    acc /= draws;
    // diagonal entries have sd sigma, off-diagonal sigma/sqrt(2)
    const double se_diag = sigma / std::sqrt(double(draws));
    REQUIRE(std::abs(acc(0, 0) - target(0, 0)) < 3.5 * se_diag);
    REQUIRE(std::abs(acc(1, 1) - target(1, 1)) < 3.5 * se_diag);
    REQUIRE(std::abs(acc(0, 1) - target(0, 1)) < 3.5 * se_diag / std::sqrt(2.0));
}

TEST_CASE("setting III: noiseless anchors and noisy concentration") {
    const auto m0 = setting3_mean({0.0, 0.0});
    REQUIRE((m0 - Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);
    const auto m1 = setting3_mean({1.0, 0.5});
    REQUIRE((m1 - Eigen::Vector3d(0, 0, 1)).norm() < 1e-12);

    auto rng = child_rng(11, 0);
    const LatentSample u{0.4, 0.3};
    const auto m = MetricPoint::sphere(setting3_mean(u));
    WeightedSample s;
    for (int t = 0; t < 10000; ++t) {
        s.points.push_back(gen_setting_III(u, rng));
        s.weights.push_back(1.0);
    }
    REQUIRE(distance(frechet_mean(s), m) < 0.02);
}

TEST_CASE("setting IV: anchors and unit norm") {
    const auto y = setting4_point({0.5, 0.25}, 0.0, 0.0);
    REQUIRE(y[0] == Catch::Approx(std::sin(0.5) * std::sin(0.25)).margin(1e-14));
    REQUIRE(y[1] == Catch::Approx(std::sin(0.5) * std::cos(0.25)).margin(1e-14));
    REQUIRE(y[2] == Catch::Approx(std::abs(std::cos(0.5))).margin(1e-14));
    REQUIRE((setting4_point({0.0, 0.0}, 0.0, 0.0) - Eigen::Vector3d(0, 0, 1))
                .norm() < 1e-14);

    auto rng = child_rng(13, 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < 100000; ++t) {
        const auto p = gen_setting_IV({unif(rng), unif(rng)}, rng);
        REQUIRE(std::abs(p.vec().norm() - 1.0) < 1e-9);
    }
}

TEST_CASE("sphere tangent basis is orthonormal and deterministic") {
    auto rng = child_rng(17, 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const Eigen::Vector3d m = setting3_mean({unif(rng), unif(rng)});
        auto [v1, v2] = sphere_tangent_basis(m);
        REQUIRE(std::abs(v1.norm() - 1.0) < 1e-12);
        REQUIRE(std::abs(v2.norm() - 1.0) < 1e-12);
        REQUIRE(std::abs(v1.dot(v2)) < 1e-12);
        REQUIRE(std::abs(v1.dot(m)) < 1e-12);
        REQUIRE(std::abs(v2.dot(m)) < 1e-12);
        auto [w1, w2] = sphere_tangent_basis(m);
        REQUIRE(v1 == w1);
        REQUIRE(v2 == w2);
    }
}

TEST_CASE("sample_latent: uniform moments and truncated-normal support") {
    auto rng = child_rng(19, 0);
    const int draws = 100000;
    double s1 = 0.0, s2 = 0.0;
    for (int t = 0; t < draws; ++t) {
        const auto u = sample_latent(LatentSource::Uniform, rng);
        s1 += u.u1;
        s2 += u.u2;
    }
    const double se = std::sqrt(1.0 / 12.0 / draws);
    REQUIRE(std::abs(s1 / draws - 0.5) < 3.0 * se);
    REQUIRE(std::abs(s2 / draws - 0.5) < 3.0 * se);

    double c11 = 0.0, c22 = 0.0, c12 = 0.0, m1 = 0.0, m2 = 0.0;
    std::vector<LatentSample> ts(draws);
    for (auto& u : ts) {
        u = sample_latent(LatentSource::TruncatedNormal, rng);
        REQUIRE(u.u1 >= 0.0);
        REQUIRE(u.u1 <= 1.0);
        REQUIRE(u.u2 >= 0.0);
        REQUIRE(u.u2 <= 1.0);
        m1 += u.u1;
        m2 += u.u2;
    }
    m1 /= draws;
    m2 /= draws;
    for (const auto& u : ts) {
        c11 += (u.u1 - m1) * (u.u1 - m1);
        c22 += (u.u2 - m2) * (u.u2 - m2);
        c12 += (u.u1 - m1) * (u.u2 - m2);
    }
    // positive correlation survives truncation, matching an independent
    // rejection sampler (eigendecomposition factor instead of Cholesky)
    const double rho = c12 / std::sqrt(c11 * c22);
    REQUIRE(rho > 0.0);

    Eigen::Matrix2d sigma;
    sigma << 1.0, 0.5, 0.5, 1.0;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sigma);
    const Eigen::Matrix2d a = es.eigenvectors() *
                              es.eigenvalues().cwiseSqrt().asDiagonal();
    std::normal_distribution<double> norm(0.0, 1.0);
    double o11 = 0.0, o22 = 0.0, o12 = 0.0, om1 = 0.0, om2 = 0.0;
    std::vector<LatentSample> os(draws);
    for (auto& u : os) {
        for (;;) {
            const Eigen::Vector2d x =
                Eigen::Vector2d(0.5, 0.5) + a * Eigen::Vector2d(norm(rng), norm(rng));
            if (x[0] >= 0.0 && x[0] <= 1.0 && x[1] >= 0.0 && x[1] <= 1.0) {
                u = {x[0], x[1]};
                break;
            }
        }
        om1 += u.u1;
        om2 += u.u2;
    }
    om1 /= draws;
    om2 /= draws;
    for (const auto& u : os) {
        o11 += (u.u1 - om1) * (u.u1 - om1);
        o22 += (u.u2 - om2) * (u.u2 - om2);
        o12 += (u.u1 - om1) * (u.u2 - om2);
    }
    const double rho_oracle = o12 / std::sqrt(o11 * o22);
    REQUIRE(rho == Catch::Approx(rho_oracle).margin(0.02));
    // and the marginal moments agree with the oracle too
    REQUIRE(m1 == Catch::Approx(om1).margin(0.01));
    REQUIRE(std::sqrt(c11 / draws) == Catch::Approx(std::sqrt(o11 / draws)).margin(0.01));
}

TEST_CASE("calibrate_sigma: fixed seed, scales inversely with snr") {
    const double s2 = calibrate_sigma(Setting::I, 2.0, LatentSource::Uniform);
    const double s4 = calibrate_sigma(Setting::I, 4.0, LatentSource::Uniform);
    REQUIRE(s2 == Catch::Approx(2.0 * s4).epsilon(1e-12));
    REQUIRE(s4 > 0.0);
    REQUIRE(calibrate_sigma(Setting::I, 2.0, LatentSource::Uniform) == s2);
    REQUIRE(calibrate_sigma(Setting::III, 2.0, LatentSource::Uniform) == 0.0);
}

TEST_CASE("run_experiment: row counts, determinism, and exact-duplicate test point") {
    ExperimentConfig cfg;
    cfg.setting = Setting::III;
    cfg.n = 30;
    cfg.m_values = {0, 50};
    cfg.n_test = 20;
    cfg.realizations = 2;
    cfg.seed = 4242;
    cfg.threads = 2;
    const auto result = run_experiment(cfg);
    REQUIRE(result.trials.size() == 2 * 2 * 4);
    REQUIRE(result.summary.size() == 2 * 4);
    for (const auto& tr : result.trials) {
        REQUIRE(tr.error.empty());
        REQUIRE(tr.mse >= 0.0);
    }

    const auto again = run_experiment(cfg);
    for (std::size_t i = 0; i < result.summary.size(); ++i) {
        REQUIRE(result.summary[i].amse == again.summary[i].amse);
        REQUIRE(result.summary[i].se == again.summary[i].se);
    }

    // k=1 semi-kNN at a test point duplicating a labeled point, no noise:
    // prediction equals that label, MSE contribution zero
    auto rng = child_rng(23, 0);
    const int n = 15;
    FeatureMatrix all;
    all.x.resize(n, 3);
    LabeledSet labeled;
    labeled.features.resize(n, 3);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<LatentSample> us(n);
    for (int i = 0; i < n; ++i) {
        us[i] = {unif(rng), unif(rng)};
        all.x.row(i) = embed_swiss_roll(us[i], Ambient::R3);
        labeled.features.row(i) = all.x.row(i);
        labeled.responses.push_back(noiseless_response(Setting::III, us[i]));
    }
    all.labeled_count = n;
    const auto graph = build_graph(all, GraphRule::r_graph(default_radius(all)));
    const auto field = query_distances(graph, all, all.x.row(4).transpose());
    const auto pred = knn_from_distances(labeled, field.dists, 1);
    REQUIRE(distance(pred, labeled.responses[4]) == 0.0);
}
