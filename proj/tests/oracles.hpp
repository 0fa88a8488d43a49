#ifndef TURNPIKE_TESTS_ORACLES_HPP
#define TURNPIKE_TESTS_ORACLES_HPP

// Closed-form reference data for the lake-harvest benchmark problem with
// b = 0.7, r = 1, c = 0.1. Everything here is independent of the library:
// the integrand restricted to u = 0 and its derivative are hand-derived,
// roots come from plain bisection, and durations from adaptive Simpson
// quadrature of dt = dx/u along the level set.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracle {

constexpr double b = 0.7, r = 1.0, c = 0.1;

// A(x) = F(x, 0)
inline double A(double x) {
    const double x2 = x * x;
    return b * b * x2 - 2 * b * r * x2 * x / (x2 + 1) - c * x2 +
           r * r * x2 * x2 / ((x2 + 1) * (x2 + 1));
}

// A'(x), hand-derived
inline double Ap(double x) {
    const double x2 = x * x;
    const double q = x2 + 1;
    return 2 * (b * b - c) * x - 2 * b * r * (x2 * x2 + 3 * x2) / (q * q) +
           4 * r * r * x2 * x / (q * q * q);
}

// B(x) = F_u(x, 0)
inline double B(double x) { return 2 * b * x - 2 * r * x * x / (x * x + 1); }

inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((flo < 0) == (fm < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline double x_P2() {
    static const double v = bisect(Ap, 1.4, 1.6);
    return v;
}
inline double x_O() {
    static const double v = bisect(Ap, 0.2, 0.35);
    return v;
}
inline double C2() { return A(x_P2()); }

// Entry velocity at x0 = 0.5: C(0.5, u) = A(0.5) - u^2 = C2.
inline double u_e() { return std::sqrt(A(0.5) - C2()); }

// Transversality-system roots: -c x^2 = C2, u = -(b x - r x^2/(x^2+1)).
inline double x_Q() { return std::sqrt(-C2() / c); }
inline double u_Q(double xq) { return -(b * xq - r * xq * xq / (xq * xq + 1)); }
inline double u_Q1() { return u_Q(-x_Q()); }
inline double u_Q2() { return u_Q(x_Q()); }

// Saddle exponent: the linearization at (x*, 0) has eigenvalues
// +/- sqrt(A''(x*)/2); A'' by a centered difference of the closed-form A'.
inline double lambda_P2() {
    const double h = 1e-6;
    return std::sqrt(0.5 * (Ap(x_P2() + h) - Ap(x_P2() - h)) / (2 * h));
}

namespace detail {
inline double simpson(const std::function<double(double)>& f, double a, double m, double b2,
                      double fa, double fm, double fb, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b2);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6 * (fa + 4 * flm + fm);
    const double right = (b2 - m) / 6 * (fm + 4 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol)
        return left + right + (left + right - whole) / 15;
    return simpson(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, rm, b2, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
} // namespace detail

inline double integrate(const std::function<double(double)>& f, double a, double b2,
                        double tol = 1e-9) {
    const double m = 0.5 * (a + b2);
    const double fa = f(a), fm = f(m), fb = f(b2);
    const double whole = (b2 - a) / 6 * (fa + 4 * fm + fb);
    return detail::simpson(f, a, m, b2, fa, fm, fb, whole, tol, 60);
}

// Time along the saddle's level set from x_from to x_P2 -/+ stop:
// dt = dx / sqrt(A(x) - C2).
inline double duration(double x_from, double stop) {
    const double to = x_P2() - stop;
    if (!(x_from < to)) throw std::invalid_argument("duration: expected x_from < x_P2 - stop");
    return integrate([](double x) { return 1.0 / std::sqrt(A(x) - C2()); }, x_from, to);
}

// Frozen cross-checks from an independent 40-digit computation; the
// closed-form oracles above must reproduce these (asserted in the tests).
constexpr double kXP2 = 1.506238324977112531839772652084611311688;
constexpr double kC2 = -0.09706376286906397199902617616977747448;
constexpr double kUe = 0.3075122158046147798578037496887001444519;
constexpr double kXQ = 0.9852094339228790190331826014530888735668;
constexpr double kUQ1 = 1.182196636567404788608992076235601164984;
constexpr double kUQ2 = -0.19709657092462583803746356579872325801;
constexpr double kLambdaP2 = 0.4410977653284834557998533712574955064929;
constexpr double kTe1em5 = 26.84828173039078428994176315491413223604;
constexpr double kTl1em5 = 24.94545872730726702833519467704390334913;

// Integrand text exactly as it appears in the problem files.
inline const char* integrand() {
    return "b^2*x^2 - 2*b*r*x^3/(x^2+1) + 2*b*x*u - c*x^2 + r^2*x^4/(x^2+1)^2 - "
           "2*r*x^2*u/(x^2+1) + u^2";
}

} // namespace oracle

#endif
