#pragma once

#include "s3t/kernels.hpp"
#include "s3t/linalg.hpp"
#include "s3t/temporal.hpp"

#include <array>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace s3t {

/// Search grid over the temporal parameters. VAR1 grids are one axis of
/// theta values. VARMA11 grids are phi x eta; with a single eta value the
/// grid is one-dimensional in phi.
class ParameterGrid {
public:
    static ParameterGrid var1(std::vector<double> thetas);
    static ParameterGrid varma11(std::vector<double> phis, std::vector<double> etas);

    /// min, min + step, ... up to max (inclusive within step * 1e-9).
    static std::vector<double> range(double min, double max, double step);

    TemporalKind kind() const noexcept { return kind_; }
    /// Number of free parameters integrated over: 1, or 2 for a phi x eta grid.
    int dimension() const noexcept { return axis2_.size() > 1 ? 2 : 1; }
    std::size_t size() const noexcept { return axis1_.size() * axis2_.size(); }
    const std::vector<double>& axis1() const noexcept { return axis1_; }
    const std::vector<double>& axis2() const noexcept { return axis2_; }

    /// Flat index i = i1 * axis2().size() + i2.
    TemporalModel at(std::size_t i) const;
    TemporalModel model(double a, double b) const;
    double primary(std::size_t i) const { return axis1_.at(i / axis2_.size()); }
    double secondary(std::size_t i) const { return axis2_.at(i % axis2_.size()); }

    void validate() const;

private:
    ParameterGrid(TemporalKind kind, std::vector<double> a1, std::vector<double> a2)
        : kind_(kind), axis1_(std::move(a1)), axis2_(std::move(a2)) {}

    TemporalKind kind_;
    std::vector<double> axis1_;
    std::vector<double> axis2_;  // {0} for VAR1
};

struct ModelSpec {
    Matrix sigma;   // noise covariance
    Matrix lambda;  // spatial correlation of the signal
    ParameterGrid grid = ParameterGrid::var1({0.5});

    Eigen::Index p() const { return sigma.rows(); }
    /// Throws ShapeError, ParameterDomainError or IllConditionedError.
    void validate() const;
};

/// Spatial factors shared by every (tau, theta) cell.
struct SpatialGram {
    Eigen::Index p = 0;
    Matrix sigma_inv;
    Matrix sigma_inv_sqrt;
    Matrix lambda;
    Matrix M;           // sigma^-1 lambda
    Matrix Msym;        // sigma^-1/2 lambda sigma^-1/2
    Vector msym_eigs;   // descending
    std::array<double, 5> trM{};  // trM[k] = tr(M^k), k = 1..4
    Series sigma_inv_rows;
    Series lambda_rows;
};

SpatialGram precompute_spatial(const ModelSpec& spec);

struct CDConstants {
    double c = 0.0;
    double d = 0.0;
};

CDConstants c_d_constants(const SpatialGram& gram, const TemporalGram& R);

enum class StatKind { S3T, QuadraticScore };

struct StatValue {
    double value = 0.0;  // W, or the normalized quadratic score
    double raw = 0.0;    // q for S3T, S for the quadratic score
    int tau = 0;
    double theta = 0.0;  // theta, or phi for VARMA11
    double eta = 0.0;
    StatKind kind = StatKind::S3T;
};

/// u_i = sigma^-1 y_i and v_i = lambda u_i for every row.
struct Whitened {
    Series u;
    Series v;
};

Whitened whiten(const Series& y, const SpatialGram& gram);

/// G(i, j) = v_j . u_i; equals (sigma^-1 y_i)' lambda (sigma^-1 y_j).
inline double cross_term(const Whitened& w, Eigen::Index i, Eigen::Index j) {
    return kernels::dot(row_span(w.v, j), row_span(w.u, i));
}

/// Lag sums over rows [first, first + tau) of w: L[h] = sum_i G(i, i + h),
/// folded newest row first with kernels::add_into. This is the one
/// accumulation order used everywhere a window statistic is evaluated.
void window_lag_sums(const Whitened& w, Eigen::Index first, int tau, std::span<double> out);

double s3t_q(std::span<const double> lag_weights, std::span<const double> lag_sums);

/// W = (q - c) / sqrt(d) for a tau x p window, time-major.
StatValue s3t_statistic(const Series& window, const SpatialGram& gram, const TemporalGram& R, double c,
                        double d);

/// [ (q - c) / 2, sigma^-1 y_1, ..., sigma^-1 y_tau ].
Vector efficient_score(const Series& window, const SpatialGram& gram, const TemporalGram& R);

/// Exact null variance of S: 2 p tau + 10 + 48 tr(R^4) tr(M^4) / d^2.
double quadratic_score_variance(const SpatialGram& gram, const TemporalGram& R, double d);

/// S = (q - c)^2 / d + y' sigma_tau^-1 y, normalized by its null mean
/// p tau + 1 and exact variance. Throws DegenerateVarianceError.
StatValue quadratic_score(const Series& window, const SpatialGram& gram, const TemporalGram& R, double c,
                          double d);

/// Cached per-(tau, grid point) constants for repeated evaluation up to
/// max_tau: lag weights (r0, 2 r1, 2 r2, ...), c and sqrt(d). The quadratic
/// score variance is filled lazily since it needs tr(R^4).
class StatisticPlan {
public:
    StatisticPlan(const ModelSpec& spec, int max_tau);

    const SpatialGram& gram() const noexcept { return gram_; }
    const ParameterGrid& grid() const noexcept { return grid_; }
    int max_tau() const noexcept { return max_tau_; }

    std::span<const double> lag_weights(std::size_t k, int tau) const;
    double c(int tau, std::size_t k) const { return c_[index(tau, k)]; }
    double sqrt_d(int tau, std::size_t k) const { return sqrt_d_[index(tau, k)]; }
    double quadratic_variance(int tau, std::size_t k) const;

    double s3t(int tau, std::size_t k, std::span<const double> lag_sums) const;
    /// Returns the normalized quadratic score; y_quad = y' sigma_tau^-1 y.
    double quadratic(int tau, std::size_t k, std::span<const double> lag_sums, double y_quad) const;

private:
    std::size_t index(int tau, std::size_t k) const {
        return static_cast<std::size_t>(tau - 1) * grid_.size() + k;
    }

    SpatialGram gram_;
    ParameterGrid grid_;
    int max_tau_;
    std::vector<Vector> weights_;  // per grid point, length max_tau
    std::vector<double> c_;
    std::vector<double> sqrt_d_;
    mutable std::vector<double> var_s_;  // NaN until computed
    mutable std::mutex var_mutex_;
};

}  // namespace s3t
