#pragma once

#include "s3t/linalg.hpp"

#include <string>
#include <vector>

namespace s3t {

enum class SpatialKind { Spherical, Exponential, Matern };

/// Isotropic correlation family C(d | rho).
///
/// Spherical is the lattice model used on unit-spaced grids: it is nonzero
/// only at d = 0, 1 and sqrt(2) (distances matched to 1e-9) and requires
/// rho in [0, 1]. Exponential and Matern require rho > 0; Matern also takes
/// its smoothness order v > 0.
class SpatialModel {
public:
    static SpatialModel spherical(double rho);
    static SpatialModel exponential(double rho);
    static SpatialModel matern(double rho, double order);

    SpatialKind kind() const noexcept { return kind_; }
    double rho() const noexcept { return rho_; }
    double order() const noexcept { return order_; }

private:
    SpatialModel(SpatialKind kind, double rho, double order) : kind_(kind), rho_(rho), order_(order) {}

    SpatialKind kind_;
    double rho_;
    double order_;
};

double correlation(const SpatialModel& model, double d);

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

class SensorLayout {
public:
    explicit SensorLayout(std::vector<Point2> coords);

    /// rows x cols unit lattice, row-major sensor order.
    static SensorLayout lattice(int rows, int cols, double spacing = 1.0);
    /// CSV with header `x,y`, one row per sensor.
    static SensorLayout from_csv(const std::string& path);

    std::size_t size() const noexcept { return coords_.size(); }
    const Point2& operator[](std::size_t i) const { return coords_.at(i); }
    double distance(std::size_t i, std::size_t j) const;

private:
    std::vector<Point2> coords_;
};

/// p x p matrix of pairwise correlations; unit diagonal, exactly symmetric.
Matrix build_lambda(const SpatialModel& model, const SensorLayout& layout);

}  // namespace s3t
