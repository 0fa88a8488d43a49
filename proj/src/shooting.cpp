#include "turnpike/shooting.hpp"

#include <algorithm>
#include <cmath>

namespace turnpike {

namespace {

struct Residual1D {
    const EulerField& field;
    const BoundaryConditions& bc;
    double tol;
    mutable int evals = 0;

    double operator()(double u0, Trajectory* out = nullptr) const {
        ++evals;
        Trajectory traj = integrate(field.rhs_fn(), {*bc.x0, u0}, {0.0, bc.T}, tol);
        const PhaseState end = traj.samples().back().s;
        const double r = bc.xT ? end.x - *bc.xT : field.transversality(end);
        if (out) *out = std::move(traj);
        return r;
    }
};

} // namespace

ShootResult shoot(const EulerField& field, const BoundaryConditions& bc, PhaseState guess,
                  const ShootOptions& opts) {
    if (!(bc.T > 0)) throw std::invalid_argument("shoot: horizon T must be positive");
    if (opts.lambda_max > 0 && bc.T * opts.lambda_max > opts.conditioning_limit)
        throw ConditioningError(bc.T, opts.lambda_max, opts.conditioning_limit);

    ShootResult result;

    if (bc.x0) {
        Residual1D res{field, bc, opts.tol};

        // Bracket a sign change around the guess, widening geometrically.
        double half = opts.bracket_halfwidth;
        double lo = 0, hi = 0, flo = 0, fhi = 0;
        bool bracketed = false;
        for (int attempt = 0; attempt < 30 && !bracketed; ++attempt) {
            lo = guess.u - half;
            hi = guess.u + half;
            const int n = 24;
            double up = lo, fp;
            try {
                fp = res(up);
            } catch (const std::exception&) {
                fp = std::numeric_limits<double>::quiet_NaN();
            }
            for (int i = 1; i <= n; ++i) {
                const double uc = lo + (hi - lo) * static_cast<double>(i) / n;
                double fc;
                try {
                    fc = res(uc);
                } catch (const std::exception&) {
                    fc = std::numeric_limits<double>::quiet_NaN();
                }
                if (std::isfinite(fp) && std::isfinite(fc) && (fp < 0) != (fc < 0)) {
                    lo = up;
                    hi = uc;
                    flo = fp;
                    fhi = fc;
                    bracketed = true;
                    break;
                }
                up = uc;
                fp = fc;
            }
            half *= 4.0;
        }
        if (!bracketed)
            throw std::runtime_error("shoot: no residual sign change in the search window");

        // Bisection to a safe width, then secant polishing.
        double a = lo, b = hi, fa = flo, fb = fhi;
        int it = 0;
        while (b - a > 1e-13 * (1.0 + std::abs(a)) && it < opts.max_iterations) {
            ++it;
            const double m = 0.5 * (a + b);
            const double fm = res(m);
            if (fm == 0.0) {
                a = b = m;
                fa = fb = 0.0;
                break;
            }
            if ((fa < 0) == (fm < 0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
                fb = fm;
            }
        }
        double u_best = std::abs(fa) <= std::abs(fb) ? a : b;
        double f_best = std::abs(fa) <= std::abs(fb) ? fa : fb;
        // Secant sharpening from the bracket ends.
        double u_prev = u_best == a ? b : a;
        double f_prev = u_best == a ? fb : fa;
        for (int k = 0; k < 8 && std::abs(f_best) > 0; ++k) {
            const double denom = f_best - f_prev;
            if (denom == 0.0) break;
            const double u_next = u_best - f_best * (u_best - u_prev) / denom;
            if (!std::isfinite(u_next) || u_next < lo - 1 || u_next > hi + 1) break;
            double f_next;
            try {
                f_next = res(u_next);
            } catch (const std::exception&) {
                break;
            }
            ++it;
            u_prev = u_best;
            f_prev = f_best;
            u_best = u_next;
            f_best = f_next;
            if (std::abs(f_best) < 1e-14) break;
        }

        Trajectory traj;
        const double r = res(u_best, &traj);
        result.trajectory = std::move(traj);
        result.u0 = u_best;
        result.residual_norm = std::abs(r);
        result.iterations = it;
        result.bracket_width = b - a;
    } else if (!bc.xT) {
        // Free/free: 2-d Newton on (x0, u0), end-condition residuals at both ends.
        double x0 = guess.x, u0 = guess.u;
        const auto residuals = [&](double xx, double uu, Trajectory* out = nullptr) {
            Trajectory traj = integrate(field.rhs_fn(), {xx, uu}, {0.0, bc.T}, opts.tol);
            const PhaseState end = traj.samples().back().s;
            const std::array<double, 2> r = {field.transversality({xx, uu}),
                                             field.transversality(end)};
            if (out) *out = std::move(traj);
            return r;
        };
        int it = 0;
        std::array<double, 2> r = residuals(x0, u0);
        while (std::max(std::abs(r[0]), std::abs(r[1])) > 1e-12 && it < opts.max_iterations) {
            ++it;
            const double hx = 1e-7 * (1.0 + std::abs(x0));
            const double hu = 1e-7 * (1.0 + std::abs(u0));
            const auto rxp = residuals(x0 + hx, u0), rxm = residuals(x0 - hx, u0);
            const auto rup = residuals(x0, u0 + hu), rum = residuals(x0, u0 - hu);
            const double j00 = (rxp[0] - rxm[0]) / (2 * hx), j01 = (rup[0] - rum[0]) / (2 * hu);
            const double j10 = (rxp[1] - rxm[1]) / (2 * hx), j11 = (rup[1] - rum[1]) / (2 * hu);
            const double det = j00 * j11 - j01 * j10;
            if (det == 0.0 || !std::isfinite(det))
                throw std::runtime_error("shoot: singular Jacobian in the free/free solve");
            x0 -= (r[0] * j11 - r[1] * j01) / det;
            u0 -= (j00 * r[1] - j10 * r[0]) / det;
            r = residuals(x0, u0);
        }
        Trajectory traj;
        r = residuals(x0, u0, &traj);
        result.trajectory = std::move(traj);
        result.u0 = u0;
        result.x0_solved = x0;
        result.residual_norm = std::max(std::abs(r[0]), std::abs(r[1]));
        result.iterations = it;
        result.bracket_width = 0.0;
    } else {
        throw std::invalid_argument("shoot: free initial point with fixed end is handled by the "
                                    "dual problem (reverse time); not supported directly");
    }

    if (result.residual_norm > opts.residual_tol)
        throw std::runtime_error("shoot: residual " + std::to_string(result.residual_norm) +
                                 " above tolerance (ill-conditioned horizon?)");
    return result;
}

CompareMetrics compare(const CurveFn& a, double a_lo, double a_hi, const CurveFn& b, double b_lo,
                       double b_hi, int n_samples, bool align_end) {
    if (n_samples < 2) throw std::invalid_argument("compare: need at least 2 samples");
    double shift = 0.0; // evaluate b at t + shift
    double lo, hi;
    if (align_end) {
        // Align the windows at their final times.
        shift = b_hi - a_hi;
        const double len = std::min(a_hi - a_lo, b_hi - b_lo);
        hi = a_hi;
        lo = a_hi - len;
    } else {
        lo = std::max(a_lo, b_lo);
        hi = std::min(a_hi, b_hi);
    }
    if (!(hi > lo)) throw std::invalid_argument("compare: empty overlap");

    CompareMetrics m;
    m.overlap = hi - lo;
    double sx = 0, su = 0;
    for (int i = 0; i < n_samples; ++i) {
        const double t = lo + (hi - lo) * static_cast<double>(i) / (n_samples - 1);
        const PhaseState pa = a(t);
        const PhaseState pb = b(t + shift);
        const double ddx = std::abs(pa.x - pb.x), ddu = std::abs(pa.u - pb.u);
        m.sup_x = std::max(m.sup_x, ddx);
        m.sup_u = std::max(m.sup_u, ddu);
        sx += ddx * ddx;
        su += ddu * ddu;
    }
    m.l2_x = std::sqrt(sx / n_samples * m.overlap);
    m.l2_u = std::sqrt(su / n_samples * m.overlap);
    return m;
}

CompareMetrics compare(const Trajectory& a, const Trajectory& b, int n_samples, bool align_end) {
    const double a_lo = std::min(a.t0(), a.t1()), a_hi = std::max(a.t0(), a.t1());
    const double b_lo = std::min(b.t0(), b.t1()), b_hi = std::max(b.t0(), b.t1());
    return compare([&a](double t) { return a.at(t); }, a_lo, a_hi,
                   [&b](double t) { return b.at(t); }, b_lo, b_hi, n_samples, align_end);
}

} // namespace turnpike
