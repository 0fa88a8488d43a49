#ifndef TURNPIKE_ODEINT_HPP
#define TURNPIKE_ODEINT_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace turnpike {

struct PhaseState {
    double x = 0.0;
    double u = 0.0;
};

inline PhaseState operator+(PhaseState a, PhaseState b) { return {a.x + b.x, a.u + b.u}; }
inline PhaseState operator-(PhaseState a, PhaseState b) { return {a.x - b.x, a.u - b.u}; }
inline PhaseState operator*(double c, PhaseState a) { return {c * a.x, c * a.u}; }

struct TimedState {
    double t = 0.0;
    PhaseState s;
};

/// Raised when a step cannot be completed (step size underflow near a domain
/// guard, or a non-finite derivative). Carries the last valid time and state.
class IntegrationError : public std::runtime_error {
  public:
    IntegrationError(std::string message, double t_last, PhaseState s_last)
        : std::runtime_error(std::move(message)), t_last_(t_last), s_last_(s_last) {}
    double t_last() const { return t_last_; }
    PhaseState last_state() const { return s_last_; }

  private:
    double t_last_;
    PhaseState s_last_;
};

using RhsFn = std::function<PhaseState(const PhaseState&)>;
using EventFn = std::function<double(const PhaseState&)>;

enum class EventDirection { Rising, Falling, Any };

/// Piecewise-polynomial solution of a planar autonomous field. Sample times
/// are strictly monotone: increasing for forward runs, decreasing for
/// backward runs. Dense evaluation at any covered time reproduces the
/// accepted-step samples exactly at the sample times.
class Trajectory {
  public:
    struct Segment {
        double tau0 = 0.0;      // internal (forward) time at the step start
        double h = 0.0;         // step length, always positive
        PhaseState r1, r2, r3, r4, r5; // quartic interpolant coefficients
        PhaseState y_end;       // accepted end state, reproduced exactly
    };

    Trajectory() = default;

    double t0() const { return anchor_; }
    double t1() const { return anchor_ + slope_ * length_; }
    double length() const { return length_; }

    const std::vector<TimedState>& samples() const { return samples_; }

    /// Dense evaluation; t must lie between t0() and t1() (inclusive, with a
    /// small round-off slack).
    PhaseState at(double t) const;

    /// Same path re-parameterized so presentation time runs forward from
    /// new_t0 toward the internal start point (used to present a backward
    /// integration in forward time, start-side last).
    Trajectory reversed(double new_t0) const;

    /// Restrict to internal times [0, tau_cut] and re-list samples.
    void truncate(double tau_cut);

    // Construction interface used by the integrator.
    void init(double anchor, double slope, PhaseState s0);
    void push_segment(const Segment& seg, PhaseState end_state);
    double internal_time(double t) const { return slope_ * (t - anchor_); }
    double presentation_time(double tau) const { return anchor_ + slope_ * tau; }
    PhaseState at_internal(double tau) const;

  private:
    void rebuild_samples();

    double anchor_ = 0.0;
    double slope_ = 1.0; // +1 forward, -1 backward
    double length_ = 0.0;
    std::vector<Segment> segments_;
    std::vector<TimedState> samples_;
};

struct IntegrateOptions {
    double max_step = 0.0;        // 0 = no cap
    std::size_t max_steps = 2'000'000;
    std::size_t event_subsamples = 8; // event sign checks per accepted step
};

/// Adaptive Dormand-Prince 5(4) with dense output. Local error per step is
/// bounded by tol*(1 + max(|x|,|u|)). Backward spans (t1 < t0) integrate the
/// negated field forward.
Trajectory integrate(const RhsFn& rhs, PhaseState s0, std::pair<double, double> t_span, double tol,
                     const IntegrateOptions& opts = {});

struct EventResult {
    Trajectory trajectory;
    std::optional<double> t_event;
};

/// Integrate until the event function changes sign in the requested
/// direction; the crossing is localized on the dense output by bisection and
/// the trajectory is truncated there. Without a crossing, runs to t_max.
EventResult integrate_until(const RhsFn& rhs, PhaseState s0, const EventFn& event,
                            EventDirection direction, double t_max, double tol,
                            const IntegrateOptions& opts = {});

} // namespace turnpike

#endif
