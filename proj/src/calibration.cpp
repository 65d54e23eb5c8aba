#include "s3t/calibration.hpp"

#include "s3t/error.hpp"
#include "s3t/kernels.hpp"
#include "s3t/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace s3t {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

Vector lag_partials(const TemporalModel& model, int tau, int param) {
    Vector d(tau);
    for (int h = 0; h < tau; ++h) d[h] = model.lag_partial(h, param);
    return d;
}

// tr(AB) for symmetric Toeplitz A, B given by their first rows.
double toeplitz_trace(const Vector& a, const Vector& b, int tau) {
    double s = tau * a[0] * b[0];
    for (int h = 1; h < tau; ++h) s += 2.0 * (tau - h) * a[h] * b[h];
    return s;
}

}  // namespace

double nu(double x) {
    if (!(x >= 0.0)) throw ParameterDomainError("nu(x) requires x >= 0");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    const double half = 0.5 * x;
    // (2/x)(Phi(x/2) - 1/2) written through erf so it stays exact as x -> 0.
    const double numerator = std::erf(half / std::numbers::sqrt2) / x;
    const double denominator = half * std_normal_cdf(half) + std_normal_pdf(half);
    return numerator / denominator;
}

double mu_drift(const TemporalModel& model, int tau) {
    if (tau < 1) throw ShapeError("tau must be at least 1");
    const Vector lags = lag_sequence(model, tau + 1);
    return tau * (trace_R2(lags, tau + 1) / trace_R2(lags, tau) - 1.0);
}

double curvature(const TemporalModel& model, int tau, int param) {
    if (tau < 1) throw ShapeError("tau must be at least 1");
    const Vector r = lag_sequence(model, tau);
    const Vector dr = lag_partials(model, tau, param);
    return toeplitz_trace(dr, r, tau) / toeplitz_trace(r, r, tau);
}

Matrix h_matrix(const TemporalModel& model, int tau, int dim) {
    if (tau < 1) throw ShapeError("tau must be at least 1");
    if (dim < 1 || dim > model.num_params()) throw ParameterDomainError("H dimension exceeds model parameters");
    const Vector r = lag_sequence(model, tau);
    std::vector<Vector> dr;
    for (int k = 0; k < dim; ++k) dr.push_back(lag_partials(model, tau, k));
    const double rr = toeplitz_trace(r, r, tau);
    Matrix h(dim, dim);
    for (int a = 0; a < dim; ++a)
        for (int b = a; b < dim; ++b) {
            const double v = (toeplitz_trace(dr[a], dr[b], tau) * rr -
                              toeplitz_trace(dr[a], r, tau) * toeplitz_trace(dr[b], r, tau)) /
                             (rr * rr);
            h(a, b) = v;
            h(b, a) = v;
        }
    return h;
}

double h_term(const TemporalModel& model, int tau, int dim) {
    const Matrix h = h_matrix(model, tau, dim);
    return dim == 1 ? h(0, 0) : h.determinant();
}

double window_correlation(const TemporalModel& a, int n, const TemporalModel& b, int m) {
    if (n < 1 || m < n) throw ShapeError("window_correlation requires 1 <= n <= m");
    const Vector ra = lag_sequence(a, n);
    const Vector rb = lag_sequence(b, m);
    return toeplitz_trace(ra, rb, n) / std::sqrt(toeplitz_trace(ra, ra, n) * toeplitz_trace(rb, rb, m));
}

CellGeometry::CellGeometry(const SpatialGram& gram, const TemporalModel& model, int tau)
    : tau_(tau), theta_(model.primary()), eta_(model.eta()) {
    const auto R = build_R(model, tau);
    const Vector r = symmetric_eigen(R.R).values;
    lambdas_.reserve(static_cast<std::size_t>(r.size() * gram.msym_eigs.size()));
    for (Eigen::Index i = 0; i < r.size(); ++i)
        for (Eigen::Index j = 0; j < gram.msym_eigs.size(); ++j) lambdas_.push_back(r[i] * gram.msym_eigs[j]);
    lambda_max_ = *std::max_element(lambdas_.begin(), lambdas_.end());
    if (!(lambda_max_ > 0.0)) throw ParameterDomainError("signal covariance has no positive eigenvalue");

    const auto cd = c_d_constants(gram, R);
    c_ = cd.c;
    d_ = cd.d;
    sqrt_d_ = std::sqrt(d_);
    xi_upper_ = sqrt_d_ / (2.0 * lambda_max_);
    sum_lambda_ = kernels::tilt_sums(lambdas_, 0.0).first;
}

void CellGeometry::check_domain(double xi) const {
    if (!(xi >= 0.0 && xi < xi_upper_))
        throw ParameterDomainError("xi = " + std::to_string(xi) + " outside the domain [0, " +
                                   std::to_string(xi_upper_) + ")");
}

double CellGeometry::psi(double xi) const {
    check_domain(xi);
    const double a = 2.0 * xi / sqrt_d_;
    double logdet = 0.0;
    for (double l : lambdas_) logdet += std::log1p(-a * l);
    return -xi * sum_lambda_ / sqrt_d_ - 0.5 * logdet;
}

double CellGeometry::psi_prime(double xi) const {
    check_domain(xi);
    const auto s = kernels::tilt_sums(lambdas_, 2.0 * xi / sqrt_d_);
    return (s.first - sum_lambda_) / sqrt_d_;
}

double CellGeometry::sigma2(double xi) const {
    check_domain(xi);
    return kernels::tilt_sums(lambdas_, 2.0 * xi / sqrt_d_).second / d_;
}

double CellGeometry::psi_second(double xi) const { return 2.0 * sigma2(xi); }

ChangeOfMeasure CellGeometry::solve_xi0(double b) const {
    if (!(b > 0.0) || !std::isfinite(b)) throw ParameterDomainError("threshold b must be positive");
    double lo = 0.0;
    double hi = (1.0 - 1e-10) * xi_upper_;
    if (psi_prime(hi) < b)
        throw SaturationError("no root of psi'(xi) = " + std::to_string(b) + " below xi = " +
                                  std::to_string(xi_upper_) + " (tau = " + std::to_string(tau_) +
                                  ", theta = " + std::to_string(theta_) + ")",
                              xi_upper_);
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (psi_prime(mid) < b ? lo : hi) = mid;
    }
    double xi = 0.5 * (lo + hi);
    // A couple of safeguarded Newton steps take the residual to rounding level.
    for (int it = 0; it < 3; ++it) {
        const double step = (psi_prime(xi) - b) / psi_second(xi);
        const double next = xi - step;
        if (!(next > lo - 1e-12 && next < hi + 1e-12) || next >= xi_upper_ || next < 0.0) break;
        xi = next;
    }

    ChangeOfMeasure out;
    out.xi0 = xi;
    out.psi_at_xi0 = psi(xi);
    out.sigma2_xi0 = sigma2(xi);
    out.g = std::exp(-xi * b + out.psi_at_xi0) / (std::sqrt(out.sigma2_xi0) * std::sqrt(2.0 * std::numbers::pi));
    out.tau = tau_;
    out.theta = theta_;
    out.eta = eta_;
    out.b = b;
    return out;
}

ChangeOfMeasure solve_xi0(double b, int tau, const TemporalModel& model, const SpatialGram& gram) {
    return CellGeometry(gram, model, tau).solve_xi0(b);
}

namespace {

double integrand_from(double b, const ChangeOfMeasure& cm, double h, double mu, double gamma_curv, int tau,
                      int dim, IntegrandForm form) {
    const double drift = b * b * mu / tau;
    const double overshoot = nu(std::sqrt(drift));
    if (form == IntegrandForm::Curvature) {
        if (dim != 1) throw ParameterDomainError("the Riemann-sum form is defined for one parameter only");
        return 0.5 / std::sqrt(std::numbers::pi) * cm.g * drift * overshoot * std::abs(gamma_curv);
    }
    if (!(h > 0.0)) return 0.0;
    const double two_pi = 2.0 * std::numbers::pi;
    return std::pow(two_pi, -0.5 * dim) * std::pow(b * cm.xi0, 0.5 * dim) / cm.xi0 * cm.g * std::sqrt(h) *
           (0.5 * drift) * overshoot;
}

}  // namespace

double cell_integrand(double b, const CellGeometry& cell, const TemporalModel& model, int tau, int dim,
                      IntegrandForm form) {
    const double h = h_term(model, tau, dim);
    if (form == IntegrandForm::Hessian && !(h > 0.0)) return 0.0;
    return integrand_from(b, cell.solve_xi0(b), h, mu_drift(model, tau), curvature(model, tau), tau, dim, form);
}

namespace {

struct AxisNode {
    double x;
    double w;
};

std::vector<AxisNode> refine_axis(const std::vector<double>& axis, int k, double single_width) {
    if (axis.size() == 1) return {{axis.front(), single_width}};
    std::vector<AxisNode> nodes;
    for (std::size_t i = 0; i + 1 < axis.size(); ++i) {
        const double step = (axis[i + 1] - axis[i]) / k;
        for (int j = 0; j < k; ++j) {
            const double w = (i == 0 && j == 0) ? 0.5 * step : step;
            nodes.push_back({j == 0 ? axis[i] : axis[i] + j * step, w});
        }
    }
    nodes.push_back({axis.back(), 0.5 * (axis.back() - axis[axis.size() - 2]) / k});
    return nodes;
}

}  // namespace

Calibrator::Calibrator(const ModelSpec& spec, CalibrationOptions options)
    : gram_(precompute_spatial(spec)), grid_(spec.grid), options_(options) {
    if (options_.quadrature_refinement < 1) throw ParameterDomainError("quadrature refinement must be >= 1");
    if (options_.form == IntegrandForm::Curvature && grid_.dimension() != 1)
        throw ParameterDomainError("the Riemann-sum form is defined for one parameter only");
    const auto a = refine_axis(grid_.axis1(), options_.quadrature_refinement, options_.single_point_width);
    // A fixed eta (single-value second axis) is not integrated over.
    const auto b = grid_.dimension() == 2
                       ? refine_axis(grid_.axis2(), options_.quadrature_refinement, options_.single_point_width)
                       : std::vector<AxisNode>{{grid_.axis2().front(), 1.0}};
    for (const auto& x : a)
        for (const auto& y : b) nodes_.push_back({x.x, y.x, x.w * y.w});
}

void Calibrator::ensure_cells(const std::vector<int>& taus) const {
    std::lock_guard lock(cells_mutex_);
    std::vector<int> missing;
    for (int tau : taus)
        if (!cells_.count(tau)) missing.push_back(tau);
    if (missing.empty()) return;

    const std::size_t n_nodes = nodes_.size();
    std::vector<std::unique_ptr<Cell>> built(missing.size() * n_nodes);
    const int dim = grid_.dimension();
    parallel_for(
        built.size(),
        [&](std::size_t i) {
            const int tau = missing[i / n_nodes];
            const auto& node = nodes_[i % n_nodes];
            const auto model = grid_.model(node.a, node.b);
            built[i] = std::make_unique<Cell>(Cell{CellGeometry(gram_, model, tau), h_term(model, tau, dim),
                                                   mu_drift(model, tau), curvature(model, tau)});
        },
        options_.threads);
    for (std::size_t t = 0; t < missing.size(); ++t) {
        auto& slot = cells_[missing[t]];
        for (std::size_t j = 0; j < n_nodes; ++j) slot.push_back(std::move(built[t * n_nodes + j]));
    }
}

const std::vector<std::unique_ptr<Calibrator::Cell>>& Calibrator::cells_for(int tau) const {
    std::lock_guard lock(cells_mutex_);
    return cells_.at(tau);
}

std::vector<double> Calibrator::contributions(double b, const std::vector<int>& taus) const {
    if (!(b > 0.0) || !std::isfinite(b)) throw ParameterDomainError("threshold b must be positive");
    ensure_cells(taus);
    const std::size_t n_nodes = nodes_.size();
    std::vector<const Cell*> table;
    table.reserve(taus.size() * n_nodes);
    for (int tau : taus)
        for (const auto& c : cells_for(tau)) table.push_back(c.get());
    std::vector<double> values(taus.size() * n_nodes, 0.0);
    const int dim = grid_.dimension();
    parallel_for(
        values.size(),
        [&](std::size_t i) {
            const int tau = taus[i / n_nodes];
            const std::size_t node = i % n_nodes;
            const Cell& c = *table[i];
            if (options_.form == IntegrandForm::Hessian && !(c.h > 0.0)) return;
            const auto cm = c.geometry.solve_xi0(b);
            values[i] = nodes_[node].weight * integrand_from(b, cm, c.h, c.mu, c.gamma_curv, tau, dim, options_.form);
        },
        options_.threads);
    // Fixed-order reduction: the sum never depends on scheduling.
    std::vector<double> per_tau(taus.size(), 0.0);
    for (std::size_t t = 0; t < taus.size(); ++t)
        for (std::size_t j = 0; j < n_nodes; ++j) per_tau[t] += values[t * n_nodes + j];
    return per_tau;
}

CalibrationResult Calibrator::significance_level(double b, int N) const {
    if (N < 1) throw ShapeError("N must be at least 1");
    std::vector<int> taus(static_cast<std::size_t>(N));
    for (int t = 0; t < N; ++t) taus[static_cast<std::size_t>(t)] = t + 1;
    CalibrationResult out;
    out.threshold = b;
    out.per_tau_contributions = contributions(b, taus);
    for (double v : out.per_tau_contributions) out.achieved += v;
    return out;
}

CalibrationResult Calibrator::arl(double b, int omega) const {
    if (omega < 1) throw ShapeError("window omega must be at least 1");
    CalibrationResult out;
    out.threshold = b;
    out.per_tau_contributions = contributions(b, {omega});
    const double rate = out.per_tau_contributions.front();
    out.achieved = rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
    return out;
}

namespace {

constexpr double kMinB = 0.1;
constexpr double kMaxB = 50.0;

// Root of f(b) = target for f monotone in b; `increasing` gives the direction.
template <class F>
double invert_monotone(F&& f, double target, bool increasing, double start, const std::string& what) {
    auto above = [&](double b) {
        const double v = f(b);
        return increasing ? v >= target : v <= target;
    };
    double lo = start;
    double hi = start;
    if (above(start)) {
        // The approximations are large-b asymptotics and turn over at small
        // b; walking past the turning point would land on a spurious branch.
        double prev = f(start);
        while (true) {
            hi = lo;
            if (lo <= kMinB) throw UnattainableTargetError(what + ": cannot bracket the target above b = 0.1");
            lo = std::max(kMinB, lo / 2.0);
            const double v = f(lo);
            if (increasing ? v >= prev : v <= prev)
                throw UnattainableTargetError(what + ": target lies beyond the turning point of the approximation near b = " +
                                              std::to_string(hi));
            prev = v;
            if (increasing ? v < target : v > target) break;
        }
    } else {
        while (true) {
            lo = hi;
            if (hi >= kMaxB) throw UnattainableTargetError(what + ": cannot bracket the target below b = 50");
            hi = std::min(kMaxB, hi * 2.0);
            if (above(hi)) break;
        }
    }
    // Invariant: lo is below target side, hi is at or past it.
    for (int it = 0; it < 200 && hi - lo > 1e-10 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (above(mid) ? hi : lo) = mid;
    }
    const double b = 0.5 * (lo + hi);
    const double achieved = f(b);
    if (std::abs(achieved - target) > 0.01 * std::abs(target))
        throw UnattainableTargetError(what + ": target not reached within 1% (achieved " +
                                      std::to_string(achieved) + " at b = " + std::to_string(b) + ")");
    return b;
}

}  // namespace

double Calibrator::find_threshold_sl(double alpha, int N) const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterDomainError("significance level must lie in (0, 1)");
    return invert_monotone([&](double b) { return significance_level(b, N).achieved; }, alpha, false, 4.0,
                           "significance-level calibration");
}

double Calibrator::find_threshold_arl(double target, int omega) const {
    if (!(target >= 1.0)) throw ParameterDomainError("target ARL must be at least 1");
    return invert_monotone([&](double b) { return arl(b, omega).achieved; }, target, true, 4.0,
                           "ARL calibration");
}

double find_threshold(const ThresholdTarget& target, const ModelSpec& spec, CalibrationOptions opt) {
    const Calibrator cal(spec, opt);
    return target.kind == ThresholdTarget::Kind::SignificanceLevel
               ? cal.find_threshold_sl(target.value, target.horizon)
               : cal.find_threshold_arl(target.value, target.horizon);
}

}  // namespace s3t
