#include "turnpike/odeint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace turnpike {

namespace {

// Dormand-Prince 5(4) tableau (FSAL).
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - bhat, for the embedded 4th-order error estimate.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output weights (rcont5).
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

double inf_norm(PhaseState s) { return std::max(std::abs(s.x), std::abs(s.u)); }

bool finite(PhaseState s) { return std::isfinite(s.x) && std::isfinite(s.u); }

struct StepResult {
    PhaseState y1;
    PhaseState k7; // derivative at the step end (FSAL)
    double err_norm = 0.0;
    Trajectory::Segment segment;
};

StepResult attempt_step(const RhsFn& f, double tau, PhaseState y0, PhaseState k1, double h,
                        double tol) {
    const PhaseState k2 = f(y0 + (h * a21) * k1);
    const PhaseState k3 = f(y0 + h * (a31 * k1 + a32 * k2));
    const PhaseState k4 = f(y0 + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const PhaseState k5 = f(y0 + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const PhaseState k6 = f(y0 + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const PhaseState y1 = y0 + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const PhaseState k7 = f(y1);

    const PhaseState err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double scale = tol * (1.0 + std::max(inf_norm(y0), inf_norm(y1)));

    StepResult r;
    r.y1 = y1;
    r.k7 = k7;
    r.err_norm = inf_norm(err) / scale;
    if (!finite(y1) || !finite(k7) || !std::isfinite(r.err_norm)) {
        r.err_norm = std::numeric_limits<double>::infinity();
        return r;
    }

    const PhaseState ydiff = y1 - y0;
    const PhaseState bspl = h * k1 - ydiff;
    r.segment.tau0 = tau;
    r.segment.h = h;
    r.segment.r1 = y0;
    r.segment.r2 = ydiff;
    r.segment.r3 = bspl;
    r.segment.r4 = ydiff - h * k7 - bspl;
    r.segment.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
    r.segment.y_end = y1;
    return r;
}

PhaseState eval_segment(const Trajectory::Segment& seg, double tau) {
    if (tau == seg.tau0) return seg.r1;
    if (tau == seg.tau0 + seg.h) return seg.y_end;
    const double th = (tau - seg.tau0) / seg.h;
    const double th1 = 1.0 - th;
    return seg.r1 + th * (seg.r2 + th1 * (seg.r3 + th * (seg.r4 + th1 * seg.r5)));
}

struct Stepper {
    const RhsFn& f_eff;
    double tol;
    IntegrateOptions opts;
    Trajectory traj;
    double tau = 0.0;
    double tau_prev = 0.0;
    PhaseState y;
    PhaseState k1;
    double h;
    double length;
    std::size_t steps = 0;

    Stepper(const RhsFn& rhs, PhaseState s0, double anchor, double slope, double span, double tol_,
            const IntegrateOptions& o)
        : f_eff(rhs), tol(tol_), opts(o), y(s0), length(span) {
        traj.init(anchor, slope, s0);
        k1 = f_eff(y); // throws if s0 is outside the field's domain
        if (!finite(k1))
            throw IntegrationError("non-finite derivative at the initial state", anchor, s0);
        h = std::min(length, 1e-2 * (1.0 + inf_norm(y)) / (1.0 + inf_norm(k1)));
        if (opts.max_step > 0) h = std::min(h, opts.max_step);
    }

    bool done() const { return tau >= length; }

    void advance() {
        const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(tau, 1.0);
        while (true) {
            if (++steps > opts.max_steps)
                throw IntegrationError("step limit exceeded", traj.presentation_time(tau), y);
            h = std::min(h, length - tau);
            bool threw = false;
            StepResult r{};
            try {
                r = attempt_step(f_eff, tau, y, k1, h, tol);
            } catch (const std::exception&) {
                threw = true;
            }
            if (!threw && r.err_norm <= 1.0) {
                traj.push_segment(r.segment, r.y1);
                tau_prev = tau;
                tau += h;
                y = r.y1;
                k1 = r.k7;
                const double factor = 0.9 * std::pow(std::max(r.err_norm, 1e-10), -0.2);
                h *= std::clamp(factor, 0.2, 5.0);
                if (opts.max_step > 0) h = std::min(h, opts.max_step);
                return;
            }
            if (threw) {
                h *= 0.5;
            } else {
                const double factor = 0.9 * std::pow(r.err_norm, -0.2);
                h *= std::clamp(factor, 0.1, 0.9);
            }
            if (h < h_min)
                throw IntegrationError("step size underflow (domain guard or stiff point)",
                                       traj.presentation_time(tau), y);
        }
    }
};

} // namespace

void Trajectory::init(double anchor, double slope, PhaseState s0) {
    anchor_ = anchor;
    slope_ = slope;
    length_ = 0.0;
    segments_.clear();
    samples_.assign(1, {anchor, s0});
}

void Trajectory::push_segment(const Segment& seg, PhaseState end_state) {
    segments_.push_back(seg);
    length_ = seg.tau0 + seg.h;
    samples_.push_back({presentation_time(length_), end_state});
}

PhaseState Trajectory::at_internal(double tau) const {
    if (segments_.empty()) {
        if (std::abs(tau) < 1e-12 && !samples_.empty()) return samples_.front().s;
        throw std::out_of_range("trajectory has no dense segments");
    }
    const double slack = 1e-9 * (1.0 + length_);
    if (tau < -slack || tau > length_ + slack)
        throw std::out_of_range("time outside trajectory span");
    const double tq = std::clamp(tau, 0.0, length_);
    auto it = std::upper_bound(segments_.begin(), segments_.end(), tq,
                               [](double v, const Segment& s) { return v < s.tau0; });
    const Segment& seg = it == segments_.begin() ? segments_.front() : *(it - 1);
    return eval_segment(seg, tq);
}

PhaseState Trajectory::at(double t) const { return at_internal(internal_time(t)); }

Trajectory Trajectory::reversed(double new_t0) const {
    Trajectory out(*this);
    out.anchor_ = new_t0 + length_;
    out.slope_ = -1.0; // presentation t = new_t0 + (length - tau)
    out.rebuild_samples();
    std::reverse(out.samples_.begin(), out.samples_.end());
    return out;
}

void Trajectory::truncate(double tau_cut) {
    if (tau_cut >= length_) return;
    const PhaseState end = at_internal(tau_cut);
    auto it = std::upper_bound(segments_.begin(), segments_.end(), tau_cut,
                               [](double v, const Segment& s) { return v < s.tau0; });
    if (it != segments_.begin()) segments_.erase(it, segments_.end());
    length_ = tau_cut;
    rebuild_samples();
    if (samples_.empty() || internal_time(samples_.back().t) < tau_cut)
        samples_.push_back({presentation_time(tau_cut), end});
}

void Trajectory::rebuild_samples() {
    samples_.clear();
    if (segments_.empty()) return;
    samples_.push_back({presentation_time(0.0), segments_.front().r1});
    for (const Segment& seg : segments_) {
        const double tau_end = seg.tau0 + seg.h;
        if (tau_end > length_) break;
        samples_.push_back({presentation_time(tau_end), eval_segment(seg, tau_end)});
    }
}

Trajectory integrate(const RhsFn& rhs, PhaseState s0, std::pair<double, double> t_span, double tol,
                     const IntegrateOptions& opts) {
    const auto [t_start, t_end] = t_span;
    if (t_start == t_end) throw std::invalid_argument("t_span endpoints must be distinct");
    if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
    const double slope = t_end > t_start ? 1.0 : -1.0;
    // Backward runs integrate the negated field forward in internal time.
    const RhsFn f_eff =
        slope > 0 ? rhs : RhsFn([&rhs](const PhaseState& s) { return -1.0 * rhs(s); });

    Stepper st(f_eff, s0, t_start, slope, std::abs(t_end - t_start), tol, opts);
    while (!st.done()) st.advance();
    return std::move(st.traj);
}

EventResult integrate_until(const RhsFn& rhs, PhaseState s0, const EventFn& event,
                            EventDirection direction, double t_max, double tol,
                            const IntegrateOptions& opts) {
    if (t_max == 0.0) throw std::invalid_argument("t_max must be nonzero");
    const double slope = t_max > 0 ? 1.0 : -1.0;
    const RhsFn f_eff =
        slope > 0 ? rhs : RhsFn([&rhs](const PhaseState& s) { return -1.0 * rhs(s); });

    Stepper st(f_eff, s0, 0.0, slope, std::abs(t_max), tol, opts);

    const auto crosses = [direction](double a, double b) {
        switch (direction) {
            case EventDirection::Rising: return a < 0.0 && b >= 0.0;
            case EventDirection::Falling: return a > 0.0 && b <= 0.0;
            case EventDirection::Any: return (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0);
        }
        return false;
    };

    double phi_prev = event(s0);
    while (!st.done()) {
        st.advance();
        const double tau_a = st.tau_prev;
        const double tau_b = st.tau;

        // Scan the accepted step on a small dense grid for a sign change.
        const std::size_t n = std::max<std::size_t>(opts.event_subsamples, 1);
        double ta = tau_a, pa = phi_prev;
        bool found = false;
        double lo = 0, hi = 0, plo = 0;
        for (std::size_t i = 1; i <= n; ++i) {
            const double tb = tau_a + (tau_b - tau_a) * static_cast<double>(i) / static_cast<double>(n);
            const double pb = event(st.traj.at_internal(tb));
            if (crosses(pa, pb)) {
                found = true;
                lo = ta;
                hi = tb;
                plo = pa;
                break;
            }
            ta = tb;
            pa = pb;
        }
        if (!found) {
            phi_prev = pa;
            continue;
        }

        // Bisection on the dense interpolant, <= 80 iterations.
        double mid = 0.5 * (lo + hi);
        for (int it = 0; it < 80; ++it) {
            mid = 0.5 * (lo + hi);
            const double pm = event(st.traj.at_internal(mid));
            if (std::abs(pm) < 1e-12) break;
            if ((plo < 0.0) == (pm < 0.0)) {
                lo = mid;
                plo = pm;
            } else {
                hi = mid;
            }
            if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi))) {
                mid = 0.5 * (lo + hi);
                break;
            }
        }
        const double t_event = st.traj.presentation_time(mid);
        st.traj.truncate(mid);
        return {std::move(st.traj), t_event};
    }
    return {std::move(st.traj), std::nullopt};
}

} // namespace turnpike
