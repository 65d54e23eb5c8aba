#pragma once

#include <stdexcept>
#include <string>

namespace s3t {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model parameter lies outside its admissible domain.
class ParameterDomainError : public Error {
public:
    using Error::Error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A location or segment index is out of range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Two network locations lie on disconnected trees.
class NoPathError : public Error {
public:
    using Error::Error;
};

/// Malformed input file, stream or configuration.
class InputError : public Error {
public:
    using Error::Error;
};

/// The noise covariance is singular or numerically indefinite.
class IllConditionedError : public Error {
public:
    IllConditionedError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// The closed-form variance of the quadratic score is not positive.
class DegenerateVarianceError : public Error {
public:
    using Error::Error;
};

/// No tilting parameter solves psi'(xi) = b inside the domain of psi.
class SaturationError : public Error {
public:
    SaturationError(const std::string& what, double xi_upper)
        : Error(what), xi_upper_(xi_upper) {}
    /// Upper end of the admissible xi interval, sqrt(d) / (2 lambda_max).
    double xi_upper() const noexcept { return xi_upper_; }

private:
    double xi_upper_;
};

/// Threshold search could not bracket the requested false-alarm target.
class UnattainableTargetError : public Error {
public:
    using Error::Error;
};

}  // namespace s3t
