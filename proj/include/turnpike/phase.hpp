#ifndef TURNPIKE_PHASE_HPP
#define TURNPIKE_PHASE_HPP

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include "turnpike/expr.hpp"
#include "turnpike/odeint.hpp"

namespace turnpike {

/// Raised when the field is evaluated where |F_uu| falls below the guard
/// floor (the boundary of the set where the vector field is defined).
class GuardViolation : public std::runtime_error {
  public:
    GuardViolation(double x, double u, double f_uu)
        : std::runtime_error("field undefined: |F_uu| below guard floor at (x=" +
                             std::to_string(x) + ", u=" + std::to_string(u) + ")"),
          x_(x), u_(u), f_uu_(f_uu) {}
    double x() const { return x_; }
    double u() const { return u_; }
    double f_uu() const { return f_uu_; }

  private:
    double x_, u_, f_uu_;
};

/// The planar vector field of the variational problem's stationarity
/// condition: xdot = u, udot = (F_x - u F_xu)/F_uu, defined where
/// |F_uu| >= guard_floor.
class EulerField {
  public:
    EulerField(Expression f, ConstantMap constants, double guard_floor = 1e-9)
        : f_(std::move(f)), constants_(std::move(constants)), guard_floor_(guard_floor) {}

    const Expression& integrand() const { return f_; }
    const ConstantMap& constants() const { return constants_; }
    double guard_floor() const { return guard_floor_; }

    Jet2 jet(PhaseState s) const { return f_.eval(s.x, s.u, constants_); }

    PhaseState rhs(PhaseState s) const;

    /// C(x,u) = F - u F_u, constant along trajectories.
    double hamiltonian(PhaseState s) const {
        const Jet2 j = jet(s);
        return j.v - s.u * j.du;
    }

    /// F_u(x,u); its zero set is the free-endpoint condition curve.
    double transversality(PhaseState s) const { return jet(s).du; }

    RhsFn rhs_fn() const {
        return [this](const PhaseState& s) { return rhs(s); };
    }

  private:
    Expression f_;
    ConstantMap constants_;
    double guard_floor_;
};

EulerField build_field(const Expression& f, const ConstantMap& constants,
                       double guard_floor = 1e-9);

enum class EquilibriumKind { Saddle, Node, Focus, CenterOrFocus, Degenerate };

const char* to_string(EquilibriumKind k);

struct Equilibrium {
    PhaseState location;                           // u is exactly 0
    std::array<std::array<double, 2>, 2> jacobian; // row-major d(rhs)/d(x,u)
    std::array<std::complex<double>, 2> eigenvalues;
    // Unit eigenvectors, ordered like the eigenvalues (ascending real part);
    // present only when the eigenvalues are real.
    std::optional<std::array<std::array<double, 2>, 2>> eigenvectors;
    EquilibriumKind kind = EquilibriumKind::Degenerate;
    double C_value = 0.0;

    bool is_saddle() const { return kind == EquilibriumKind::Saddle; }
};

/// Scan g(x) = F_x(x, 0) for sign changes on [x_lo, x_hi], polish each root
/// to |g| <= 1e-12 and classify it. Duplicates within 1e-8 are merged.
std::vector<Equilibrium> find_equilibria(const EulerField& field, double x_lo, double x_hi,
                                         int n_scan = 400);

/// Classify a point that is already an equilibrium to within 1e-8; the
/// location is Newton-polished on u = 0 before differencing the field.
Equilibrium classify(const EulerField& field, PhaseState location);

struct Window {
    double x_lo = -1, x_hi = 1, u_lo = -1, u_hi = 1;
    bool contains(PhaseState s) const {
        return s.x >= x_lo && s.x <= x_hi && s.u >= u_lo && s.u <= u_hi;
    }
    double width() const { return x_hi - x_lo; }
    double height() const { return u_hi - u_lo; }
};

struct CurveSpec {
    enum class Kind { LevelSet, Transversality } kind = Kind::LevelSet;
    double level = 0.0;

    static CurveSpec level_set(double c) { return {Kind::LevelSet, c}; }
    static CurveSpec transversality() { return {Kind::Transversality, 0.0}; }
};

using Polyline = std::vector<PhaseState>;

/// Marching-squares contour of C(x,u) - level or F_u(x,u) over the window on
/// an n x n cell grid. Cells touching the field's domain boundary are
/// skipped. Each polyline vertex lies within one cell of the true curve.
std::vector<Polyline> trace_curve(const EulerField& field, const CurveSpec& spec,
                                  const Window& window, int resolution = 256);

} // namespace turnpike

#endif
