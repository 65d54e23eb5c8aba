#pragma once

#include "s3t/score.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace s3t {

/// Overshoot correction nu(x) = (2/x)(Phi(x/2) - 1/2) / ((x/2)Phi(x/2) + phi(x/2)).
double nu(double x);

/// mu(tau, theta) = tau [tr(R_{tau+1}^2) / tr(R_tau^2) - 1].
double mu_drift(const TemporalModel& model, int tau);

/// tr(dR R) / tr(R R) for parameter `param`.
double curvature(const TemporalModel& model, int tau, int param = 0);

/// Negative Hessian of the correlation between W(tau, theta) and
/// W(tau, theta') at theta' = theta, over the first `dim` parameters.
/// Entry (a, b) is [tr(dR_a dR_b) tr(RR) - tr(dR_a R) tr(dR_b R)] / tr(RR)^2.
Matrix h_matrix(const TemporalModel& model, int tau, int dim = 1);
/// Determinant of h_matrix, or the scalar H for dim = 1.
double h_term(const TemporalModel& model, int tau, int dim = 1);

/// Null correlation of W(n, a) and W(m, b) for n <= m (the shorter window is
/// the most recent n samples of the longer one).
double window_correlation(const TemporalModel& a, int n, const TemporalModel& b, int m);

struct ChangeOfMeasure {
    double xi0 = 0.0;
    double psi_at_xi0 = 0.0;
    double sigma2_xi0 = 0.0;
    double g = 0.0;
    int tau = 0;
    double theta = 0.0;
    double eta = 0.0;
    double b = 0.0;
};

/// Eigen-factorized view of one (tau, theta) cell: the spectrum of
/// B = sigma_tau^-1/2 V sigma_tau^-1/2 is every product r_i m_j.
class CellGeometry {
public:
    CellGeometry(const SpatialGram& gram, const TemporalModel& model, int tau);

    double c() const noexcept { return c_; }
    double d() const noexcept { return d_; }
    double lambda_max() const noexcept { return lambda_max_; }
    /// Supremum of the domain of psi: sqrt(d) / (2 lambda_max).
    double xi_upper() const noexcept { return xi_upper_; }
    std::span<const double> spectrum() const noexcept { return lambdas_; }

    double psi(double xi) const;
    double psi_prime(double xi) const;
    double psi_second(double xi) const;
    /// d^-1 sum (l / (1 - a l))^2 with a = 2 xi / sqrt(d); half of psi''.
    double sigma2(double xi) const;

    /// Root of psi'(xi) = b by bisection. Throws SaturationError when the
    /// root is not inside the domain.
    ChangeOfMeasure solve_xi0(double b) const;

private:
    void check_domain(double xi) const;

    std::vector<double> lambdas_;
    double sum_lambda_ = 0.0;  // tr(B) from the spectrum; equals c
    double c_ = 0.0;
    double d_ = 0.0;
    double sqrt_d_ = 0.0;
    double lambda_max_ = 0.0;
    double xi_upper_ = 0.0;
    int tau_ = 0;
    double theta_ = 0.0;
    double eta_ = 0.0;
};

ChangeOfMeasure solve_xi0(double b, int tau, const TemporalModel& model, const SpatialGram& gram);

enum class IntegrandForm {
    Hessian,    // (2 pi)^{-d/2} (b xi0)^{d/2} / xi0 * g * |H|^{1/2} * (b^2 mu / 2 tau) nu(.)
    Curvature,  // Riemann-sum form: 1 / (2 sqrt(pi)) * g * (b^2 mu / tau) nu(.) |gamma_curv|, d = 1 only
};

struct CalibrationOptions {
    IntegrandForm form = IntegrandForm::Hessian;
    /// Trapezoid panels per grid interval along each axis (1 = plain grid).
    int quadrature_refinement = 8;
    /// Width assigned to an axis with a single grid point.
    double single_point_width = 1.0;
    unsigned threads = 0;
};

struct CalibrationResult {
    double threshold = 0.0;
    double achieved = 0.0;
    std::vector<double> per_tau_contributions;
};

/// Integrand of the tail approximation at one cell.
double cell_integrand(double b, const CellGeometry& cell, const TemporalModel& model, int tau, int dim,
                      IntegrandForm form = IntegrandForm::Hessian);

/// Reuses cell geometry (eigenvalues, H, mu) across thresholds.
class Calibrator {
public:
    Calibrator(const ModelSpec& spec, CalibrationOptions options = {});

    /// P(max_{tau <= N, theta} W >= b) under the null.
    CalibrationResult significance_level(double b, int N) const;
    /// Null expected stopping time of the window-omega procedure.
    CalibrationResult arl(double b, int omega) const;

    double find_threshold_sl(double alpha, int N) const;
    double find_threshold_arl(double target, int omega) const;

    /// Quadrature nodes and weights along the flattened refined grid.
    std::size_t num_nodes() const noexcept { return nodes_.size(); }

private:
    struct Node {
        double a;
        double b;
        double weight;
    };
    struct Cell {
        CellGeometry geometry;
        double h;
        double mu;
        double gamma_curv;
    };

    const std::vector<std::unique_ptr<Cell>>& cells_for(int tau) const;
    void ensure_cells(const std::vector<int>& taus) const;
    std::vector<double> contributions(double b, const std::vector<int>& taus) const;

    SpatialGram gram_;
    ParameterGrid grid_;
    CalibrationOptions options_;
    std::vector<Node> nodes_;
    mutable std::map<int, std::vector<std::unique_ptr<Cell>>> cells_;  // by tau, one per node
    mutable std::mutex cells_mutex_;
};

inline CalibrationResult significance_level(double b, int N, const ModelSpec& spec, CalibrationOptions opt = {}) {
    return Calibrator(spec, opt).significance_level(b, N);
}

inline CalibrationResult arl(double b, int omega, const ModelSpec& spec, CalibrationOptions opt = {}) {
    return Calibrator(spec, opt).arl(b, omega);
}

struct ThresholdTarget {
    enum class Kind { SignificanceLevel, AverageRunLength } kind = Kind::SignificanceLevel;
    double value = 0.05;  // alpha, or the target ARL
    int horizon = 50;     // N, or the window omega
};

double find_threshold(const ThresholdTarget& target, const ModelSpec& spec, CalibrationOptions opt = {});

}  // namespace s3t
