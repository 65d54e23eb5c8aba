#include "s3t/kernels.hpp"

#include <cassert>

namespace s3t::kernels::scalar {

namespace {

// Veltkamp split; exact TwoProduct without relying on a hardware fma.
constexpr double kSplitter = 134217729.0;  // 2^27 + 1

inline void split(double a, double& hi, double& lo) {
    const double c = kSplitter * a;
    hi = c - (c - a);
    lo = a - hi;
}

inline void two_product(double a, double b, double& p, double& e) {
    p = a * b;
    double ah, al, bh, bl;
    split(a, ah, al);
    split(b, bh, bl);
    e = al * bl - (((p - ah * bh) - al * bh) - ah * bl);
}

inline void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    const double z = s - a;
    e = (a - (s - z)) + (b - z);
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void add_into(std::span<double> acc, std::span<const double> x) {
    assert(acc.size() == x.size());
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = x[i] + acc[i];
}

double compensated_dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    if (a.empty()) return 0.0;
    double p, s;
    two_product(a[0], b[0], p, s);
    for (std::size_t i = 1; i < a.size(); ++i) {
        double h, r, q;
        two_product(a[i], b[i], h, r);
        two_sum(p, h, p, q);
        s += q + r;
    }
    return p + s;
}

TiltSums tilt_sums(std::span<const double> lambda, double a) {
    TiltSums out;
    for (double l : lambda) {
        const double t = l / (1.0 - a * l);
        out.first += t;
        out.second += t * t;
    }
    return out;
}

}  // namespace s3t::kernels::scalar
