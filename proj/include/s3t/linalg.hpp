#pragma once

#include <Eigen/Dense>

#include <span>

namespace s3t {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Row-major observation block: one row per time step, one column per sensor.
using Series = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SymmetricEigen {
    Vector values;   // ascending
    Matrix vectors;  // columns are eigenvectors
};

SymmetricEigen symmetric_eigen(const Matrix& a);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& a);

/// Symmetric square root Q diag(sqrt(max(l, 0))) Q'.
Matrix psd_sqrt(const Matrix& a);

bool is_symmetric(const Matrix& a, double tol = 0.0);

/// out = a * x, one kernels::dot per row so results do not depend on the
/// surrounding call pattern.
void mat_vec(const Series& a, std::span<const double> x, std::span<double> out);

inline std::span<const double> row_span(const Series& s, Eigen::Index row) {
    return {s.data() + row * s.cols(), static_cast<std::size_t>(s.cols())};
}

inline std::span<double> row_span(Series& s, Eigen::Index row) {
    return {s.data() + row * s.cols(), static_cast<std::size_t>(s.cols())};
}

}  // namespace s3t
