// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "s3t/kernels.hpp"

#include <immintrin.h>

#include <cassert>
#include <cmath>

namespace s3t::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    const double z = s - a;
    e = (a - (s - z)) + (b - z);
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    const std::size_t n = a.size();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i + 4), _mm256_loadu_pd(b.data() + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc = std::fma(a[i], b[i], acc);
    return acc;
}

void add_into(std::span<double> acc, std::span<const double> x) {
    assert(acc.size() == x.size());
    const std::size_t n = acc.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d s = _mm256_add_pd(_mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(acc.data() + i));
        _mm256_storeu_pd(acc.data() + i, s);
    }
    for (; i < n; ++i) acc[i] = x[i] + acc[i];
}

double compensated_dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    const std::size_t n = a.size();
    __m256d p = _mm256_setzero_pd();
    __m256d s = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(a.data() + i);
        const __m256d y = _mm256_loadu_pd(b.data() + i);
        const __m256d h = _mm256_mul_pd(x, y);
        const __m256d r = _mm256_fmsub_pd(x, y, h);
        // TwoSum(p, h) lane-wise
        const __m256d sum = _mm256_add_pd(p, h);
        const __m256d z = _mm256_sub_pd(sum, p);
        const __m256d q = _mm256_add_pd(_mm256_sub_pd(p, _mm256_sub_pd(sum, z)), _mm256_sub_pd(h, z));
        p = sum;
        s = _mm256_add_pd(s, _mm256_add_pd(q, r));
    }
    alignas(32) double pl[4];
    alignas(32) double sl[4];
    _mm256_store_pd(pl, p);
    _mm256_store_pd(sl, s);
    double total = pl[0];
    double err = sl[0] + sl[1] + sl[2] + sl[3];
    for (int k = 1; k < 4; ++k) {
        double e;
        two_sum(total, pl[k], total, e);
        err += e;
    }
    for (; i < n; ++i) {
        const double h = a[i] * b[i];
        const double r = std::fma(a[i], b[i], -h);
        double e;
        two_sum(total, h, total, e);
        err += e + r;
    }
    return total + err;
}

TiltSums tilt_sums(std::span<const double> lambda, double a) {
    const std::size_t n = lambda.size();
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d av = _mm256_set1_pd(a);
    __m256d f = _mm256_setzero_pd();
    __m256d g = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d l = _mm256_loadu_pd(lambda.data() + i);
        const __m256d t = _mm256_div_pd(l, _mm256_fnmadd_pd(av, l, one));
        f = _mm256_add_pd(f, t);
        g = _mm256_fmadd_pd(t, t, g);
    }
    TiltSums out{hsum(f), hsum(g)};
    for (; i < n; ++i) {
        const double t = lambda[i] / (1.0 - a * lambda[i]);
        out.first += t;
        out.second += t * t;
    }
    return out;
}

}  // namespace s3t::kernels::avx2
