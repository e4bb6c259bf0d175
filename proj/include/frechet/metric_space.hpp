#pragma once

// Response metric spaces: Euclidean vectors, the unit sphere S^2 with the
// geodesic (arc) distance, and SPD matrices under the Log-Cholesky metric,
// together with the weighted Frechet mean solvers every regressor uses.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "frechet/errors.hpp"

namespace frechet {

inline constexpr double kUnitTol = 1e-9;
inline constexpr double kSymTol = 1e-9;
inline constexpr double kSphereGradTol = 1e-8;
inline constexpr int kSphereMaxIter = 200;

class MetricPoint {
public:
    enum class Space { Euclidean, Sphere, Spd };

    static MetricPoint euclidean(Eigen::VectorXd v) {
        if (!v.allFinite())
            throw InvalidPoint("euclidean point has non-finite entries");
        MetricPoint p;
        p.space_ = Space::Euclidean;
        p.vec_ = std::move(v);
        return p;
    }

    static MetricPoint sphere(const Eigen::Vector3d& v) {
        if (!v.allFinite() || std::abs(v.norm() - 1.0) > kUnitTol)
            throw InvalidPoint("sphere point is not unit norm");
        MetricPoint p;
        p.space_ = Space::Sphere;
        p.vec_ = v;
        return p;
    }

    static MetricPoint spd(const Eigen::MatrixXd& m);

    Space space() const noexcept { return space_; }

    // Euclidean or Sphere payload.
    const Eigen::VectorXd& vec() const { return vec_; }
    // Spd payload.
    const Eigen::MatrixXd& mat() const { return mat_; }

    Eigen::Index dim() const {
        return space_ == Space::Spd ? mat_.rows() : vec_.size();
    }

    bool same_space(const MetricPoint& other) const {
        return space_ == other.space_ && dim() == other.dim();
    }

private:
    MetricPoint() = default;
    Space space_ = Space::Euclidean;
    Eigen::VectorXd vec_;
    Eigen::MatrixXd mat_;
};

inline const char* space_name(MetricPoint::Space s) {
    switch (s) {
        case MetricPoint::Space::Euclidean: return "euclidean";
        case MetricPoint::Space::Sphere: return "sphere";
        default: return "spd";
    }
}

// Lower-triangular Cholesky factor with strictly positive diagonal.
struct CholeskyFactor {
    Eigen::MatrixXd lower;

    Eigen::MatrixXd strictly_lower() const {
        return lower.triangularView<Eigen::StrictlyLower>();
    }
    Eigen::VectorXd log_diagonal() const {
        return lower.diagonal().array().log().matrix();
    }
};

inline CholeskyFactor cholesky_factor(const Eigen::MatrixXd& y) {
    if (y.rows() != y.cols())
        throw NotSpd("matrix is not square");
    if ((y - y.transpose()).cwiseAbs().maxCoeff() > kSymTol)
        throw NotSymmetric("matrix is not symmetric within 1e-9");
    Eigen::LLT<Eigen::MatrixXd> llt(y);
    if (llt.info() != Eigen::Success)
        throw NotSpd("Cholesky factorization failed");
    CholeskyFactor f{llt.matrixL()};
    if ((f.lower.diagonal().array() <= 0.0).any())
        throw NotSpd("Cholesky factor has non-positive diagonal");
    return f;
}

inline MetricPoint MetricPoint::spd(const Eigen::MatrixXd& m) {
    if (!m.allFinite())
        throw InvalidPoint("spd point has non-finite entries");
    cholesky_factor(m);  // validates symmetry and positive definiteness
    MetricPoint p;
    p.space_ = Space::Spd;
    p.mat_ = 0.5 * (m + m.transpose());
    return p;
}

namespace detail {

inline double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

inline double log_cholesky_distance(const CholeskyFactor& a,
                                    const CholeskyFactor& b) {
    const double lower = (a.strictly_lower() - b.strictly_lower()).squaredNorm();
    const double diag = (a.log_diagonal() - b.log_diagonal()).squaredNorm();
    return std::sqrt(lower + diag);
}

}  // namespace detail

inline double distance(const MetricPoint& a, const MetricPoint& b) {
    if (!a.same_space(b))
        throw VariantMismatch(std::string("cannot compare ") + space_name(a.space()) +
                              " point of dim " + std::to_string(a.dim()) + " with " +
                              space_name(b.space()) + " point of dim " +
                              std::to_string(b.dim()));
    switch (a.space()) {
        case MetricPoint::Space::Euclidean:
            return (a.vec() - b.vec()).norm();
        case MetricPoint::Space::Sphere:
            // Geodesic arc length via the chord: 2 asin(|a-b|/2) equals
            // acos(a.b) for unit vectors but is exact near coincident points.
            return 2.0 * std::asin(std::min(1.0, 0.5 * (a.vec() - b.vec()).norm()));
        default:
            return detail::log_cholesky_distance(cholesky_factor(a.mat()),
                                                 cholesky_factor(b.mat()));
    }
}

// Riemannian exponential map on S^2: follows the great circle from `base` in
// the direction of `tangent` for arc length |tangent|.
inline Eigen::Vector3d sphere_exp(const Eigen::Vector3d& base,
                                  const Eigen::Vector3d& tangent) {
    const double norm = tangent.norm();
    if (std::abs(tangent.dot(base)) > 1e-8 * std::max(1.0, norm))
        throw NotTangent("tangent vector is not orthogonal to the base point");
    if (norm < 1e-18) return base;
    Eigen::Vector3d out = std::cos(norm) * base + std::sin(norm) * (tangent / norm);
    return out / out.norm();
}

// Inverse of sphere_exp; |result| equals the geodesic distance to target.
inline Eigen::Vector3d sphere_log(const Eigen::Vector3d& base,
                                  const Eigen::Vector3d& target) {
    const double c = detail::clamp_unit(base.dot(target));
    Eigen::Vector3d residual = target - c * base;
    const double rnorm = residual.norm();
    if (rnorm < 1e-12) {
        // residual vanishes at both poles of the base point; the sign of the
        // cosine tells coincident (log = 0) from antipodal (undefined)
        if (c < 0.0)
            throw AntipodalPair("sphere_log undefined for antipodal points");
        return Eigen::Vector3d::Zero();
    }
    return (std::acos(c) / rnorm) * residual;
}

inline Eigen::MatrixXd sym_matrix_exp(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() ||
        (a - a.transpose()).cwiseAbs().maxCoeff() > kSymTol)
        throw NotSymmetric("sym_matrix_exp requires a symmetric matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
    Eigen::MatrixXd out = es.eigenvectors() *
                          es.eigenvalues().array().exp().matrix().asDiagonal() *
                          es.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

inline Eigen::MatrixXd sym_matrix_log(const Eigen::MatrixXd& y) {
    if (y.rows() != y.cols() ||
        (y - y.transpose()).cwiseAbs().maxCoeff() > kSymTol)
        throw NotSymmetric("sym_matrix_log requires a symmetric matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (y + y.transpose()));
    if ((es.eigenvalues().array() <= 0.0).any())
        throw NotSpd("sym_matrix_log requires positive eigenvalues");
    Eigen::MatrixXd out = es.eigenvectors() *
                          es.eigenvalues().array().log().matrix().asDiagonal() *
                          es.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

struct WeightedSample {
    std::vector<MetricPoint> points;
    std::vector<double> weights;

    void validate() const {
        if (points.size() != weights.size())
            throw EmptySample("points and weights have different lengths");
        if (points.empty())
            throw EmptySample("sample is empty");
        for (double w : weights)
            if (!(w >= 0.0) || !std::isfinite(w))
                throw EmptySample("weights must be finite and nonnegative");
        for (const auto& p : points)
            if (!p.same_space(points.front()))
                throw VariantMismatch("sample mixes metric spaces");
    }

    double total_weight() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

namespace detail {

inline MetricPoint euclidean_mean(const WeightedSample& s, double total) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(s.points.front().vec().size());
    for (std::size_t i = 0; i < s.points.size(); ++i)
        acc += s.weights[i] * s.points[i].vec();
    return MetricPoint::euclidean(acc / total);
}

// Log-Cholesky geometry is flat: the mean factor averages the strictly-lower
// parts and the log-diagonals, then squares back.
inline MetricPoint spd_mean(const WeightedSample& s, double total) {
    const Eigen::Index d = s.points.front().mat().rows();
    Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd log_diag = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        if (s.weights[i] == 0.0) continue;
        CholeskyFactor f = cholesky_factor(s.points[i].mat());
        lower += s.weights[i] * f.strictly_lower();
        log_diag += s.weights[i] * f.log_diagonal();
    }
    Eigen::MatrixXd mean_factor = lower / total;
    mean_factor.diagonal() = (log_diag / total).array().exp();
    return MetricPoint::spd(mean_factor * mean_factor.transpose());
}

inline void check_sphere_degeneracy(const WeightedSample& s) {
    // Flags the non-unique case: all mass on two antipodal points with equal
    // total weight.
    double w_ref = 0.0, w_anti = 0.0;
    Eigen::Vector3d pivot = Eigen::Vector3d::Zero();
    bool have_pivot = false;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        if (s.weights[i] == 0.0) continue;
        Eigen::Vector3d v = s.points[i].vec().head<3>();
        if (!have_pivot) {
            pivot = v;
            have_pivot = true;
        }
        if ((v - pivot).norm() <= 1e-9)
            w_ref += s.weights[i];
        else if ((v + pivot).norm() <= 1e-9)
            w_anti += s.weights[i];
        else
            return;  // mass off the antipodal pair, minimizer unique enough
    }
    if (w_anti > 0.0 && std::abs(w_ref - w_anti) <= 1e-12 * (w_ref + w_anti))
        throw DegenerateSphereSample(
            "two antipodal support points with equal weight: mean not unique");
}

inline MetricPoint sphere_mean(const WeightedSample& s, double total) {
    check_sphere_degeneracy(s);

    // Extrinsic weighted mean projected to the sphere; falls back to the
    // heaviest sample point when the extrinsic mean vanishes.
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    std::size_t heaviest = 0;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        x += s.weights[i] * s.points[i].vec().head<3>();
        if (s.weights[i] > s.weights[heaviest]) heaviest = i;
    }
    if (x.norm() < 1e-12)
        x = s.points[heaviest].vec().head<3>();
    x /= x.norm();

    for (int iter = 0; iter < kSphereMaxIter; ++iter) {
        Eigen::Vector3d grad = Eigen::Vector3d::Zero();
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            if (s.weights[i] == 0.0) continue;
            grad += s.weights[i] * sphere_log(x, s.points[i].vec().head<3>());
        }
        grad /= total;
        if (grad.norm() <= kSphereGradTol)
            return MetricPoint::sphere(x);
        x = sphere_exp(x, grad);
    }
    throw NoConvergence("sphere Frechet mean did not converge in 200 iterations");
}

}  // namespace detail

// Weighted Frechet mean: argmin over the space of sum_i w_i d^2(y_i, .).
inline MetricPoint frechet_mean(const WeightedSample& sample) {
    sample.validate();
    const double total = sample.total_weight();
    if (total <= 0.0)
        throw EmptySample("all weights are zero");
    switch (sample.points.front().space()) {
        case MetricPoint::Space::Euclidean:
            return detail::euclidean_mean(sample, total);
        case MetricPoint::Space::Spd:
            return detail::spd_mean(sample, total);
        default:
            return detail::sphere_mean(sample, total);
    }
}

// Objective the Frechet mean minimizes; exposed for tests and diagnostics.
inline double frechet_objective(const WeightedSample& sample,
                                const MetricPoint& candidate) {
    double acc = 0.0;
    for (std::size_t i = 0; i < sample.points.size(); ++i) {
        const double d = distance(sample.points[i], candidate);
        acc += sample.weights[i] * d * d;
    }
    return acc;
}

}  // namespace frechet
