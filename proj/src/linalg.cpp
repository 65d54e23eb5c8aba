#include "s3t/linalg.hpp"

#include "s3t/error.hpp"
#include "s3t/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace s3t {

SymmetricEigen symmetric_eigen(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success) throw Error("symmetric eigendecomposition failed");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

double min_eigenvalue(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
}

Matrix psd_sqrt(const Matrix& a) {
    const auto eig = symmetric_eigen(a);
    Vector root = eig.values.unaryExpr([](double l) { return std::sqrt(std::max(l, 0.0)); });
    return eig.vectors * root.asDiagonal() * eig.vectors.transpose();
}

bool is_symmetric(const Matrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    return true;
}

void mat_vec(const Series& a, std::span<const double> x, std::span<double> out) {
    if (static_cast<std::size_t>(a.cols()) != x.size() || static_cast<std::size_t>(a.rows()) != out.size())
        throw ShapeError("mat_vec: dimension mismatch");
    for (Eigen::Index i = 0; i < a.rows(); ++i) out[i] = kernels::dot(row_span(a, i), x);
}

}  // namespace s3t
