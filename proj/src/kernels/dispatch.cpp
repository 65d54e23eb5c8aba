#include "s3t/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace s3t::kernels {

namespace {

struct Table {
    Isa isa;
    double (*dot)(std::span<const double>, std::span<const double>);
    void (*add_into)(std::span<double>, std::span<const double>);
    double (*compensated_dot)(std::span<const double>, std::span<const double>);
    TiltSums (*tilt_sums)(std::span<const double>, double);
};

constexpr Table kScalar{Isa::Scalar, scalar::dot, scalar::add_into, scalar::compensated_dot,
                        scalar::tilt_sums};
#if defined(S3T_HAVE_AVX2)
constexpr Table kAvx2{Isa::Avx2, avx2::dot, avx2::add_into, avx2::compensated_dot, avx2::tilt_sums};
#endif

const Table* detect() {
    if (const char* env = std::getenv("S3T_SIMD"); env && std::string(env) == "scalar") {
        return &kScalar;
    }
#if defined(S3T_HAVE_AVX2)
    if (avx2_supported()) return &kAvx2;
#endif
    return &kScalar;
}

std::atomic<const Table*> g_table{nullptr};

const Table& table() {
    const Table* t = g_table.load(std::memory_order_acquire);
    if (t == nullptr) {
        t = detect();
        g_table.store(t, std::memory_order_release);
    }
    return *t;
}

}  // namespace

bool avx2_supported() {
#if defined(S3T_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

Isa active_isa() { return table().isa; }

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool force_isa(Isa isa) {
    if (isa == Isa::Scalar) {
        g_table.store(&kScalar, std::memory_order_release);
        return true;
    }
#if defined(S3T_HAVE_AVX2)
    if (avx2_supported()) {
        g_table.store(&kAvx2, std::memory_order_release);
        return true;
    }
#endif
    return false;
}

void reset_isa() { g_table.store(detect(), std::memory_order_release); }

double dot(std::span<const double> a, std::span<const double> b) { return table().dot(a, b); }

void add_into(std::span<double> acc, std::span<const double> x) { table().add_into(acc, x); }

double compensated_dot(std::span<const double> a, std::span<const double> b) {
    return table().compensated_dot(a, b);
}

TiltSums tilt_sums(std::span<const double> lambda, double a) { return table().tilt_sums(lambda, a); }

}  // namespace s3t::kernels
