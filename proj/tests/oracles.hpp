#pragma once

// Test-only oracles, implemented independently of the library code paths
// they check: a textbook Cholesky routine, a derivative-free simplex
// minimizer, scalar quadrature, and dense shortest paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Plain doubly-nested-loop Cholesky; returns false if not positive definite.
inline bool cholesky_lower(const Eigen::MatrixXd& a, Eigen::MatrixXd& l) {
    const int n = static_cast<int>(a.rows());
    l = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0) return false;
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return true;
}

// Log-Cholesky distance evaluated directly from the formula.
inline double log_cholesky_distance(const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& b) {
    Eigen::MatrixXd la, lb;
    if (!cholesky_lower(a, la) || !cholesky_lower(b, lb))
        return std::numeric_limits<double>::quiet_NaN();
    double acc = 0.0;
    const int n = static_cast<int>(a.rows());
    for (int i = 0; i < n; ++i) {
        const double d = std::log(la(i, i)) - std::log(lb(i, i));
        acc += d * d;
        for (int j = 0; j < i; ++j) {
            const double o = la(i, j) - lb(i, j);
            acc += o * o;
        }
    }
    return std::sqrt(acc);
}

// Nelder-Mead over R^d; good enough for the small instances used in tests.
inline Eigen::VectorXd nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& f,
    Eigen::VectorXd x0, double step = 0.1, int max_iter = 5000,
    double ftol = 1e-12) {
    const int d = static_cast<int>(x0.size());
    std::vector<Eigen::VectorXd> simplex(d + 1, x0);
    std::vector<double> fx(d + 1);
    for (int i = 0; i < d; ++i) simplex[i + 1][i] += step;
    for (int i = 0; i <= d; ++i) fx[i] = f(simplex[i]);

    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<int> order(d + 1);
        for (int i = 0; i <= d; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return fx[a] < fx[b]; });
        std::vector<Eigen::VectorXd> s2(d + 1);
        std::vector<double> f2(d + 1);
        for (int i = 0; i <= d; ++i) {
            s2[i] = simplex[order[i]];
            f2[i] = fx[order[i]];
        }
        simplex = s2;
        fx = f2;
        if (std::abs(fx[d] - fx[0]) < ftol) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) centroid += simplex[i];
        centroid /= d;

        Eigen::VectorXd xr = centroid + (centroid - simplex[d]);
        const double fr = f(xr);
        if (fr < fx[0]) {
            Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex[d]);
            const double fe = f(xe);
            if (fe < fr) {
                simplex[d] = xe;
                fx[d] = fe;
            } else {
                simplex[d] = xr;
                fx[d] = fr;
            }
        } else if (fr < fx[d - 1]) {
            simplex[d] = xr;
            fx[d] = fr;
        } else {
            Eigen::VectorXd xc = centroid + 0.5 * (simplex[d] - centroid);
            const double fc = f(xc);
            if (fc < fx[d]) {
                simplex[d] = xc;
                fx[d] = fc;
            } else {
                for (int i = 1; i <= d; ++i) {
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
                    fx[i] = f(simplex[i]);
                }
            }
        }
    }
    int best = 0;
    for (int i = 1; i <= d; ++i)
        if (fx[i] < fx[best]) best = i;
    return simplex[best];
}

// Composite Simpson on a fixed fine grid; independent of the library's
// adaptive routine.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int intervals = 100000) {
    if (intervals % 2 != 0) ++intervals;
    const double h = (b - a) / intervals;
    double acc = f(a) + f(b);
    for (int i = 1; i < intervals; ++i)
        acc += f(a + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
    return acc * h / 3.0;
}

// Floyd-Warshall over a dense weight matrix (inf = no edge).
inline Eigen::MatrixXd all_pairs_shortest(Eigen::MatrixXd w) {
    const int n = static_cast<int>(w.rows());
    for (int i = 0; i < n; ++i) w(i, i) = 0.0;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                w(i, j) = std::min(w(i, j), w(i, k) + w(k, j));
    return w;
}

}  // namespace oracle
