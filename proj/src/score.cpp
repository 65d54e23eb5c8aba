#include "s3t/score.hpp"

#include "s3t/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace s3t {

namespace {

void check_axis(const std::vector<double>& axis, const char* name) {
    if (axis.empty()) throw ParameterDomainError(std::string("parameter grid axis '") + name + "' is empty");
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (!(axis[i] > axis[i - 1]))
            throw ParameterDomainError(std::string("parameter grid axis '") + name + "' must be strictly increasing");
}

}  // namespace

ParameterGrid ParameterGrid::var1(std::vector<double> thetas) {
    ParameterGrid g(TemporalKind::VAR1, std::move(thetas), {0.0});
    g.validate();
    return g;
}

ParameterGrid ParameterGrid::varma11(std::vector<double> phis, std::vector<double> etas) {
    ParameterGrid g(TemporalKind::VARMA11, std::move(phis), std::move(etas));
    g.validate();
    return g;
}

std::vector<double> ParameterGrid::range(double min, double max, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw ParameterDomainError("grid step must be positive");
    if (!(max >= min)) throw ParameterDomainError("grid max must not be below min");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((max - min) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(min + static_cast<double>(i) * step);
    return out;
}

TemporalModel ParameterGrid::model(double a, double b) const {
    return kind_ == TemporalKind::VAR1 ? TemporalModel::var1(a) : TemporalModel::varma11(a, b);
}

TemporalModel ParameterGrid::at(std::size_t i) const {
    if (i >= size()) throw IndexError("parameter grid index out of range");
    return model(primary(i), secondary(i));
}

void ParameterGrid::validate() const {
    check_axis(axis1_, kind_ == TemporalKind::VAR1 ? "theta" : "phi");
    check_axis(axis2_, "eta");
    for (double a : axis1_) (void)model(a, axis2_.front());
    for (double b : axis2_) (void)model(axis1_.front(), b);
}

void ModelSpec::validate() const {
    if (sigma.rows() < 1 || sigma.rows() != sigma.cols()) throw ShapeError("sigma must be square and nonempty");
    if (lambda.rows() != sigma.rows() || lambda.cols() != sigma.cols())
        throw ShapeError("lambda must have the same shape as sigma");
    if (!sigma.allFinite() || !lambda.allFinite()) throw InputError("sigma and lambda must be finite");
    if (!is_symmetric(sigma, 1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff())))
        throw ParameterDomainError("sigma must be symmetric");
    if (!is_symmetric(lambda, 1e-12)) throw ParameterDomainError("lambda must be symmetric");
    const auto eig = symmetric_eigen(sigma);
    const double lo = eig.values[0];
    const double hi = eig.values[eig.values.size() - 1];
    if (lo <= 1e-10)
        throw IllConditionedError("sigma is not positive definite (smallest eigenvalue " + std::to_string(lo) + ")",
                                  lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
    if (min_eigenvalue(lambda) < -1e-8) throw ParameterDomainError("lambda must be positive semidefinite");
    grid.validate();
}

SpatialGram precompute_spatial(const ModelSpec& spec) {
    spec.validate();
    SpatialGram g;
    g.p = spec.p();
    const auto eig = symmetric_eigen(spec.sigma);
    const Vector inv = eig.values.cwiseInverse();
    const Vector inv_sqrt = inv.cwiseSqrt();
    g.sigma_inv = eig.vectors * inv.asDiagonal() * eig.vectors.transpose();
    g.sigma_inv = 0.5 * (g.sigma_inv + g.sigma_inv.transpose()).eval();
    g.sigma_inv_sqrt = eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose();
    g.sigma_inv_sqrt = 0.5 * (g.sigma_inv_sqrt + g.sigma_inv_sqrt.transpose()).eval();
    g.lambda = spec.lambda;
    g.M = g.sigma_inv * g.lambda;
    g.Msym = g.sigma_inv_sqrt * g.lambda * g.sigma_inv_sqrt;
    g.Msym = 0.5 * (g.Msym + g.Msym.transpose()).eval();
    g.msym_eigs = symmetric_eigen(g.Msym).values.reverse();

    Matrix power = g.M;
    for (int k = 1; k <= 4; ++k) {
        g.trM[k] = power.trace();
        power = (power * g.M).eval();
    }
    g.sigma_inv_rows = g.sigma_inv;
    g.lambda_rows = g.lambda;
    return g;
}

CDConstants c_d_constants(const SpatialGram& gram, const TemporalGram& R) {
    return {R.R.trace() * gram.trM[1], 2.0 * trace_R2(R.lags, R.tau) * gram.trM[2]};
}

Whitened whiten(const Series& y, const SpatialGram& gram) {
    if (y.cols() != gram.p)
        throw ShapeError("observation width " + std::to_string(y.cols()) + " does not match p = " +
                         std::to_string(gram.p));
    Whitened w{Series(y.rows(), y.cols()), Series(y.rows(), y.cols())};
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        mat_vec(gram.sigma_inv_rows, row_span(y, i), row_span(w.u, i));
        mat_vec(gram.lambda_rows, row_span(w.u, i), row_span(w.v, i));
    }
    return w;
}

void window_lag_sums(const Whitened& w, Eigen::Index first, int tau, std::span<double> out) {
    if (tau < 1 || first < 0 || first + tau > w.u.rows()) throw ShapeError("window outside the series");
    if (out.size() < static_cast<std::size_t>(tau)) throw ShapeError("lag-sum buffer too short");
    std::fill(out.begin(), out.begin() + tau, 0.0);
    std::vector<double> row(static_cast<std::size_t>(tau));
    const Eigen::Index last = first + tau - 1;
    for (Eigen::Index i = last; i >= first; --i) {
        const auto len = static_cast<std::size_t>(last - i + 1);
        for (std::size_t h = 0; h < len; ++h) row[h] = cross_term(w, i, i + static_cast<Eigen::Index>(h));
        kernels::add_into(out.first(len), std::span<const double>(row).first(len));
    }
}

double s3t_q(std::span<const double> lag_weights, std::span<const double> lag_sums) {
    return kernels::compensated_dot(lag_weights.first(lag_sums.size()), lag_sums);
}

namespace {

Vector lag_weights_of(const Vector& lags) {
    Vector w = 2.0 * lags;
    w[0] = lags[0];
    return w;
}

void check_window(const Series& window, const SpatialGram& gram, const TemporalGram& R) {
    if (window.rows() != R.tau)
        throw ShapeError("window has " + std::to_string(window.rows()) + " rows, expected tau = " +
                         std::to_string(R.tau));
    if (window.cols() != gram.p) throw ShapeError("window width does not match p");
}

double window_q(const Whitened& w, const TemporalGram& R) {
    std::vector<double> sums(static_cast<std::size_t>(R.tau));
    window_lag_sums(w, 0, R.tau, sums);
    const Vector weights = lag_weights_of(R.lags);
    return s3t_q({weights.data(), static_cast<std::size_t>(weights.size())}, sums);
}

double y_quad_of(const Series& y, const Whitened& w) {
    double s = 0.0;
    for (Eigen::Index i = y.rows() - 1; i >= 0; --i) s += kernels::dot(row_span(y, i), row_span(w.u, i));
    return s;
}

}  // namespace

StatValue s3t_statistic(const Series& window, const SpatialGram& gram, const TemporalGram& R, double c,
                        double d) {
    check_window(window, gram, R);
    const double q = window_q(whiten(window, gram), R);
    StatValue out;
    out.raw = q;
    out.value = (q - c) / std::sqrt(d);
    out.tau = R.tau;
    out.kind = StatKind::S3T;
    return out;
}

Vector efficient_score(const Series& window, const SpatialGram& gram, const TemporalGram& R) {
    check_window(window, gram, R);
    const auto w = whiten(window, gram);
    const auto cd = c_d_constants(gram, R);
    Vector score(1 + window.size());
    score[0] = 0.5 * (window_q(w, R) - cd.c);
    for (Eigen::Index i = 0; i < window.rows(); ++i)
        for (Eigen::Index j = 0; j < window.cols(); ++j) score[1 + i * window.cols() + j] = w.u(i, j);
    return score;
}

double quadratic_score_variance(const SpatialGram& gram, const TemporalGram& R, double d) {
    const Matrix R2 = R.R * R.R;
    const double trR4 = R2.squaredNorm();
    return 2.0 * static_cast<double>(gram.p) * R.tau + 10.0 + 48.0 * trR4 * gram.trM[4] / (d * d);
}

StatValue quadratic_score(const Series& window, const SpatialGram& gram, const TemporalGram& R, double c,
                          double d) {
    check_window(window, gram, R);
    const auto w = whiten(window, gram);
    const double q = window_q(w, R);
    const double s = (q - c) * (q - c) / d + y_quad_of(window, w);
    const double var = quadratic_score_variance(gram, R, d);
    if (!(var > 0.0) || !std::isfinite(var))
        throw DegenerateVarianceError("quadratic score variance is not positive (" + std::to_string(var) + ")");
    StatValue out;
    out.raw = s;
    out.value = (s - (static_cast<double>(gram.p) * R.tau + 1.0)) / std::sqrt(var);
    out.tau = R.tau;
    out.kind = StatKind::QuadraticScore;
    return out;
}

StatisticPlan::StatisticPlan(const ModelSpec& spec, int max_tau)
    : gram_(precompute_spatial(spec)), grid_(spec.grid), max_tau_(max_tau) {
    if (max_tau < 1) throw ShapeError("max_tau must be at least 1");
    const std::size_t n = grid_.size();
    weights_.reserve(n);
    c_.resize(static_cast<std::size_t>(max_tau) * n);
    sqrt_d_.resize(c_.size());
    var_s_.assign(c_.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < n; ++k) {
        const Vector lags = lag_sequence(grid_.at(k), max_tau);
        weights_.push_back(lag_weights_of(lags));
        // tr(R_tau^2) grows by r0^2 + 2 sum_{h<tau} r_h^2 per step.
        double tr2 = 0.0;
        double tail = 0.0;
        for (int tau = 1; tau <= max_tau; ++tau) {
            if (tau > 1) tail += lags[tau - 1] * lags[tau - 1];
            tr2 += lags[0] * lags[0] + 2.0 * tail;
            c_[index(tau, k)] = tau * lags[0] * gram_.trM[1];
            sqrt_d_[index(tau, k)] = std::sqrt(2.0 * tr2 * gram_.trM[2]);
        }
    }
}

std::span<const double> StatisticPlan::lag_weights(std::size_t k, int tau) const {
    const auto& w = weights_.at(k);
    return {w.data(), static_cast<std::size_t>(tau)};
}

double StatisticPlan::quadratic_variance(int tau, std::size_t k) const {
    std::lock_guard lock(var_mutex_);
    double& v = var_s_[index(tau, k)];
    if (std::isnan(v)) {
        const auto R = build_R(grid_.at(k), tau);
        const double sd = sqrt_d_[index(tau, k)];
        v = quadratic_score_variance(gram_, R, sd * sd);
        if (!(v > 0.0) || !std::isfinite(v))
            throw DegenerateVarianceError("quadratic score variance is not positive at tau = " +
                                          std::to_string(tau));
    }
    return v;
}

double StatisticPlan::s3t(int tau, std::size_t k, std::span<const double> lag_sums) const {
    return (s3t_q(lag_weights(k, tau), lag_sums.first(static_cast<std::size_t>(tau))) - c(tau, k)) /
           sqrt_d(tau, k);
}

double StatisticPlan::quadratic(int tau, std::size_t k, std::span<const double> lag_sums, double y_quad) const {
    const double q = s3t_q(lag_weights(k, tau), lag_sums.first(static_cast<std::size_t>(tau)));
    const double sd = sqrt_d(tau, k);
    const double dev = (q - c(tau, k)) / sd;
    const double s = dev * dev + y_quad;
    return (s - (static_cast<double>(gram_.p) * tau + 1.0)) / std::sqrt(quadratic_variance(tau, k));
}

}  // namespace s3t
