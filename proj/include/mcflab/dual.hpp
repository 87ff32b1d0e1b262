#pragma once

// Forward-mode hyper-dual numbers: a + b*e1 + c*e2 + d*e1e2 with e1^2 = e2^2 = 0.
// Seeding e1 along x_i and e2 along x_j yields f, df/dx_i, df/dx_j and d2f/dx_i dx_j
// exactly (no truncation error). The metric kernels are templated on the scalar
// type so that the connection and curvature come out of the same code path as
// the metric itself.

namespace mcflab {

struct HyperDual {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double d12 = 0.0;

    constexpr HyperDual() = default;
    constexpr HyperDual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
    constexpr HyperDual(double value, double e1, double e2, double e12)
        : v(value), d1(e1), d2(e2), d12(e12) {}

    HyperDual& operator+=(const HyperDual& o) {
        v += o.v; d1 += o.d1; d2 += o.d2; d12 += o.d12;
        return *this;
    }
    HyperDual& operator-=(const HyperDual& o) {
        v -= o.v; d1 -= o.d1; d2 -= o.d2; d12 -= o.d12;
        return *this;
    }
};

inline HyperDual operator+(HyperDual a, const HyperDual& b) { return a += b; }
inline HyperDual operator-(HyperDual a, const HyperDual& b) { return a -= b; }
inline HyperDual operator-(const HyperDual& a) { return {-a.v, -a.d1, -a.d2, -a.d12}; }

inline HyperDual operator*(const HyperDual& a, const HyperDual& b) {
    return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + a.v * b.d2,
            a.d12 * b.v + a.d1 * b.d2 + a.d2 * b.d1 + a.v * b.d12};
}

inline HyperDual inverse(const HyperDual& a) {
    const double inv = 1.0 / a.v;
    const double inv2 = inv * inv;
    return {inv, -a.d1 * inv2, -a.d2 * inv2, -a.d12 * inv2 + 2.0 * a.d1 * a.d2 * inv2 * inv};
}

inline HyperDual operator/(const HyperDual& a, const HyperDual& b) { return a * inverse(b); }

inline double value_of(double x) { return x; }
inline double value_of(const HyperDual& x) { return x.v; }

}  // namespace mcflab
