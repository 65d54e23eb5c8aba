#include "s3t/temporal.hpp"

#include "s3t/error.hpp"

#include <cmath>

namespace s3t {

TemporalModel TemporalModel::var1(double theta) {
    if (!(std::abs(theta) < 1.0)) throw ParameterDomainError("VAR(1) requires |theta| < 1");
    return {TemporalKind::VAR1, theta, 0.0};
}

TemporalModel TemporalModel::varma11(double phi, double eta) {
    if (!(std::abs(phi) < 1.0)) throw ParameterDomainError("VARMA(1,1) requires |phi| < 1");
    if (!std::isfinite(eta)) throw ParameterDomainError("VARMA(1,1) eta must be finite");
    return {TemporalKind::VARMA11, phi, eta};
}

// std::pow(0.0, 0) is 1, which is the convention we need at lag 1.
double TemporalModel::lag(int h) const {
    h = std::abs(h);
    if (kind_ == TemporalKind::VAR1) return std::pow(a_, h);
    const double phi = a_;
    const double eta = b_;
    if (h == 0) return 1.0 + eta * eta - 2.0 * phi * eta;
    return std::pow(phi, h - 1) * (phi - eta) * (1.0 - phi * eta);
}

double TemporalModel::lag_partial(int h, int param) const {
    if (param < 0 || param >= num_params()) throw IndexError("temporal parameter index out of range");
    h = std::abs(h);
    if (kind_ == TemporalKind::VAR1) return h == 0 ? 0.0 : h * std::pow(a_, h - 1);

    const double phi = a_;
    const double eta = b_;
    if (param == 0) {
        if (h == 0) return -2.0 * eta;
        const double lead = h >= 2 ? (h - 1) * std::pow(phi, h - 2) * (phi - eta) * (1.0 - phi * eta) : 0.0;
        return lead + std::pow(phi, h - 1) * (1.0 - 2.0 * phi * eta + eta * eta);
    }
    if (h == 0) return 2.0 * eta - 2.0 * phi;
    return std::pow(phi, h - 1) * (-1.0 + 2.0 * phi * eta - phi * phi);
}

Vector lag_sequence(const TemporalModel& model, int n) {
    Vector r(n);
    for (int h = 0; h < n; ++h) r[h] = model.lag(h);
    return r;
}

double trace_R2(const Vector& lags, int tau) {
    if (tau < 1 || tau > lags.size()) throw ShapeError("trace_R2: lag sequence shorter than tau");
    double s = tau * lags[0] * lags[0];
    for (int h = 1; h < tau; ++h) s += 2.0 * (tau - h) * lags[h] * lags[h];
    return s;
}

namespace {

Matrix toeplitz(const Vector& first_row) {
    const auto n = first_row.size();
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = first_row[std::abs(i - j)];
    return m;
}

}  // namespace

TemporalGram build_R(const TemporalModel& model, int tau) {
    if (tau < 1) throw ShapeError("tau must be at least 1");
    TemporalGram g;
    g.tau = tau;
    g.lags = lag_sequence(model, tau);
    g.R = toeplitz(g.lags);
    for (int k = 0; k < model.num_params(); ++k) {
        Vector d(tau);
        for (int h = 0; h < tau; ++h) d[h] = model.lag_partial(h, k);
        g.partials.push_back(toeplitz(d));
    }
    return g;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix signal_cross_cov_check(const TemporalModel& model, int tau, const Matrix& lambda, double gamma) {
    if (lambda.rows() != lambda.cols()) throw ShapeError("lambda must be square");
    if (min_eigenvalue(lambda) < -1e-8) throw ParameterDomainError("lambda must be positive semidefinite");
    return gamma * kron(build_R(model, tau).R, lambda);
}

}  // namespace s3t
