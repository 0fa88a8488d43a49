#ifndef TURNPIKE_JET_HPP
#define TURNPIKE_JET_HPP

#include <cmath>

namespace turnpike {

/// Value of a scalar function of (x, u) together with its first and second
/// partial derivatives, propagated exactly through arithmetic (truncated
/// second-order Taylor / jet arithmetic). The single dxu slot serves both
/// mixed-partial orders.
struct Jet2 {
    double v = 0.0;
    double dx = 0.0;
    double du = 0.0;
    double dxx = 0.0;
    double dxu = 0.0;
    double duu = 0.0;

    static constexpr Jet2 constant(double c) { return {c, 0, 0, 0, 0, 0}; }
    static constexpr Jet2 variable_x(double x0) { return {x0, 1, 0, 0, 0, 0}; }
    static constexpr Jet2 variable_u(double u0) { return {u0, 0, 1, 0, 0, 0}; }
};

constexpr Jet2 operator+(const Jet2& a, const Jet2& b) {
    return {a.v + b.v, a.dx + b.dx, a.du + b.du, a.dxx + b.dxx, a.dxu + b.dxu, a.duu + b.duu};
}

constexpr Jet2 operator-(const Jet2& a, const Jet2& b) {
    return {a.v - b.v, a.dx - b.dx, a.du - b.du, a.dxx - b.dxx, a.dxu - b.dxu, a.duu - b.duu};
}

constexpr Jet2 operator-(const Jet2& a) {
    return {-a.v, -a.dx, -a.du, -a.dxx, -a.dxu, -a.duu};
}

constexpr Jet2 operator*(const Jet2& a, const Jet2& b) {
    return {a.v * b.v,
            a.dx * b.v + a.v * b.dx,
            a.du * b.v + a.v * b.du,
            a.dxx * b.v + 2.0 * a.dx * b.dx + a.v * b.dxx,
            a.dxu * b.v + a.dx * b.du + a.du * b.dx + a.v * b.dxu,
            a.duu * b.v + 2.0 * a.du * b.du + a.v * b.duu};
}

constexpr Jet2 operator*(double c, const Jet2& a) {
    return {c * a.v, c * a.dx, c * a.du, c * a.dxx, c * a.dxu, c * a.duu};
}

/// Composition with a univariate g given g(f.v), g'(f.v), g''(f.v).
constexpr Jet2 compose(const Jet2& f, double g0, double g1, double g2) {
    return {g0,
            g1 * f.dx,
            g1 * f.du,
            g2 * f.dx * f.dx + g1 * f.dxx,
            g2 * f.dx * f.du + g1 * f.dxu,
            g2 * f.du * f.du + g1 * f.duu};
}

constexpr Jet2 reciprocal(const Jet2& a) {
    const double iv = 1.0 / a.v;
    return compose(a, iv, -iv * iv, 2.0 * iv * iv * iv);
}

constexpr Jet2 operator/(const Jet2& a, const Jet2& b) { return a * reciprocal(b); }

inline Jet2 exp(const Jet2& a) {
    const double e = std::exp(a.v);
    return compose(a, e, e, e);
}

inline Jet2 log(const Jet2& a) {
    const double iv = 1.0 / a.v;
    return compose(a, std::log(a.v), iv, -iv * iv);
}

inline Jet2 sin(const Jet2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return compose(a, s, c, -s);
}

inline Jet2 cos(const Jet2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return compose(a, c, -s, -c);
}

inline Jet2 sqrt(const Jet2& a) {
    const double s = std::sqrt(a.v);
    return compose(a, s, 0.5 / s, -0.25 / (s * a.v));
}

inline Jet2 tanh(const Jet2& a) {
    const double t = std::tanh(a.v), sech2 = 1.0 - t * t;
    return compose(a, t, sech2, -2.0 * t * sech2);
}

/// a^n by repeated squaring; valid for any base, including negative.
/// n == 0 yields the constant 1 (matching the polynomial convention x^0 = 1).
inline Jet2 pow_int(const Jet2& a, long long n) {
    if (n == 0) return Jet2::constant(1.0);
    const bool negative = n < 0;
    unsigned long long m = negative ? static_cast<unsigned long long>(-(n + 1)) + 1ull
                                    : static_cast<unsigned long long>(n);
    Jet2 result = Jet2::constant(1.0);
    Jet2 base = a;
    while (m > 0) {
        if (m & 1ull) result = result * base;
        base = base * base;
        m >>= 1;
    }
    return negative ? reciprocal(result) : result;
}

/// General power for positive base: a^b = exp(b log a).
inline Jet2 pow_general(const Jet2& a, const Jet2& b) { return exp(b * log(a)); }

} // namespace turnpike

#endif
