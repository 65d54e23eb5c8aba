#pragma once

#include "s3t/linalg.hpp"

#include <vector>

namespace s3t {

enum class TemporalKind { VAR1, VARMA11 };

/// Signal dynamics. VAR1 has one parameter theta; VARMA11 has (phi, eta).
/// The correlation is Toeplitz, so everything is driven by the lag sequence
/// r(h) and its parameter partials.
class TemporalModel {
public:
    static TemporalModel var1(double theta);
    static TemporalModel varma11(double phi, double eta);

    TemporalKind kind() const noexcept { return kind_; }
    /// theta for VAR1, phi for VARMA11.
    double primary() const noexcept { return a_; }
    /// eta for VARMA11, 0 for VAR1.
    double eta() const noexcept { return b_; }
    /// 1 for VAR1, 2 for VARMA11.
    int num_params() const noexcept { return kind_ == TemporalKind::VAR1 ? 1 : 2; }

    double lag(int h) const;
    /// d r(h) / d param; param 0 is theta (or phi), param 1 is eta.
    double lag_partial(int h, int param) const;

private:
    TemporalModel(TemporalKind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

    TemporalKind kind_;
    double a_;
    double b_;
};

struct TemporalGram {
    Matrix R;
    /// partials[0] is dR/dtheta (dR/dphi for VARMA11); partials[1] is dR/deta.
    std::vector<Matrix> partials;
    int tau = 0;
    /// r(0..tau-1), the first row of R.
    Vector lags;

    const Matrix& dR() const { return partials.front(); }
};

TemporalGram build_R(const TemporalModel& model, int tau);

/// r(0..n-1) without forming the matrix.
Vector lag_sequence(const TemporalModel& model, int n);

/// tr(R_tau^2) from the lag sequence: tau r0^2 + 2 sum_h (tau - h) r_h^2.
double trace_R2(const Vector& lags, int tau);

/// Block (i, j) of the result is gamma * R[i][j] * lambda.
Matrix signal_cross_cov_check(const TemporalModel& model, int tau, const Matrix& lambda, double gamma);

Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace s3t
