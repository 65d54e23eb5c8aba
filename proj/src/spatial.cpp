#include "s3t/spatial.hpp"

#include "s3t/csv.hpp"
#include "s3t/error.hpp"

#include <cmath>
#include <numbers>

namespace s3t {

namespace {

constexpr double kLatticeTol = 1e-9;

bool is_half_integer(double v, int& m) {
    const double twice = 2.0 * v;
    m = static_cast<int>(std::lround(twice - 1.0) / 2);
    return std::abs(twice - std::round(twice)) < 1e-12 && std::lround(twice) % 2 == 1 && m <= 3;
}

// x^v K_v(x) / (2^{v-1} Gamma(v)), which tends to 1 as x -> 0.
double matern_kernel(double v, double x) {
    int m = 0;
    if (is_half_integer(v, m)) {
        // exp(-x) times a polynomial of degree m
        switch (m) {
            case 0: return std::exp(-x);
            case 1: return (1.0 + x) * std::exp(-x);
            case 2: return (1.0 + x + x * x / 3.0) * std::exp(-x);
            default: return (1.0 + x + 0.4 * x * x + x * x * x / 15.0) * std::exp(-x);
        }
    }
    double k = 0.0;
    try {
        k = std::cyl_bessel_k(v, x);
    } catch (const std::exception&) {
        k = HUGE_VAL;
    }
    if (!std::isfinite(k)) {
        // small-argument expansion; only reachable for v > 1 and tiny x
        return v > 1.0 ? 1.0 - x * x / (4.0 * (v - 1.0)) : 1.0;
    }
    if (k == 0.0) return 0.0;
    const double log_value = v * std::log(x) + std::log(k) - (v - 1.0) * std::numbers::ln2 - std::lgamma(v);
    return std::min(1.0, std::exp(log_value));
}

}  // namespace

SpatialModel SpatialModel::spherical(double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterDomainError("spherical model requires 0 <= rho <= 1");
    return {SpatialKind::Spherical, rho, 0.0};
}

SpatialModel SpatialModel::exponential(double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ParameterDomainError("exponential model requires rho > 0");
    return {SpatialKind::Exponential, rho, 0.0};
}

SpatialModel SpatialModel::matern(double rho, double order) {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ParameterDomainError("Matern model requires rho > 0");
    if (!(order > 0.0) || !std::isfinite(order)) throw ParameterDomainError("Matern model requires order v > 0");
    return {SpatialKind::Matern, rho, order};
}

double correlation(const SpatialModel& model, double d) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw ParameterDomainError("distance must be finite and nonnegative");
    if (d == 0.0) return 1.0;
    switch (model.kind()) {
        case SpatialKind::Spherical:
            if (d < kLatticeTol) return 1.0;
            if (std::abs(d - 1.0) < kLatticeTol) return model.rho();
            if (std::abs(d - std::numbers::sqrt2) < kLatticeTol) return model.rho() / 2.0;
            return 0.0;
        case SpatialKind::Exponential:
            return std::exp(-d / model.rho());
        case SpatialKind::Matern: {
            const double v = model.order();
            return matern_kernel(v, std::sqrt(2.0 * v) * d / model.rho());
        }
    }
    return 0.0;
}

SensorLayout::SensorLayout(std::vector<Point2> coords) : coords_(std::move(coords)) {
    if (coords_.empty()) throw ShapeError("sensor layout must contain at least one sensor");
    for (const auto& c : coords_)
        if (!std::isfinite(c.x) || !std::isfinite(c.y)) throw InputError("sensor coordinates must be finite");
}

SensorLayout SensorLayout::lattice(int rows, int cols, double spacing) {
    if (rows < 1 || cols < 1) throw ShapeError("lattice needs at least one row and one column");
    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) pts.push_back({c * spacing, r * spacing});
    return SensorLayout(std::move(pts));
}

SensorLayout SensorLayout::from_csv(const std::string& path) {
    const auto table = csv::read_file(path);
    const auto xi = table.column("x");
    const auto yi = table.column("y");
    std::vector<Point2> pts;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size())
            throw InputError(path + ": row " + std::to_string(r + 2) + " has the wrong number of fields");
        pts.push_back({csv::parse_double(row[xi], path), csv::parse_double(row[yi], path)});
    }
    if (pts.empty()) throw InputError(path + ": no sensors");
    return SensorLayout(std::move(pts));
}

double SensorLayout::distance(std::size_t i, std::size_t j) const {
    const auto& a = coords_.at(i);
    const auto& b = coords_.at(j);
    return std::hypot(a.x - b.x, a.y - b.y);
}

Matrix build_lambda(const SpatialModel& model, const SensorLayout& layout) {
    const auto p = static_cast<Eigen::Index>(layout.size());
    Matrix lambda(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        lambda(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < p; ++j) {
            const double c = correlation(model, layout.distance(i, j));
            lambda(i, j) = c;
            lambda(j, i) = c;
        }
    }
    return lambda;
}

}  // namespace s3t
