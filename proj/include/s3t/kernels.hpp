#pragma once
// Data-parallel inner loops. Every kernel has a portable scalar reference and,
// on x86-64, an AVX2+FMA variant compiled separately and chosen at runtime.

#include <cstddef>
#include <span>
#include <string_view>

namespace s3t::kernels {

enum class Isa { Scalar, Avx2 };

/// Running sums used by the tilted-measure root finder:
/// first = sum l / (1 - a l), second = sum l^2 / (1 - a l)^2.
struct TiltSums {
    double first = 0.0;
    double second = 0.0;
};

Isa active_isa();
std::string_view isa_name(Isa isa);
bool avx2_supported();

/// Pin the dispatch table (tests and benchmarks). Requesting Avx2 on a CPU
/// without it is ignored and returns false.
bool force_isa(Isa isa);

/// Restores the automatically detected choice. Honors S3T_SIMD=scalar.
void reset_isa();

double dot(std::span<const double> a, std::span<const double> b);

/// acc[i] = x[i] + acc[i]. Element-wise, so bit-identical across variants.
void add_into(std::span<double> acc, std::span<const double> x);

/// Dot product with error-free transformations (twice-working precision).
double compensated_dot(std::span<const double> a, std::span<const double> b);

TiltSums tilt_sums(std::span<const double> lambda, double a);

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
void add_into(std::span<double> acc, std::span<const double> x);
double compensated_dot(std::span<const double> a, std::span<const double> b);
TiltSums tilt_sums(std::span<const double> lambda, double a);
}  // namespace scalar

#if defined(S3T_HAVE_AVX2)
namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b);
void add_into(std::span<double> acc, std::span<const double> x);
double compensated_dot(std::span<const double> a, std::span<const double> b);
TiltSums tilt_sums(std::span<const double> lambda, double a);
}  // namespace avx2
#endif

}  // namespace s3t::kernels
