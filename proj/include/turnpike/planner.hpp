#ifndef TURNPIKE_PLANNER_HPP
#define TURNPIKE_PLANNER_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "turnpike/arcs.hpp"

namespace turnpike {

struct BoundaryConditions {
    std::optional<double> x0; // empty = free initial point
    std::optional<double> xT; // empty = free terminal point
    double T = 0.0;           // horizon, > 0
};

/// Piecewise approximation of a long-horizon extremal: entry arc on
/// [0, T_e), the saddle point on [T_e, T - T_l], leaving arc on (T - T_l, T].
struct TurnpikeApproximation {
    Equilibrium saddle;
    std::optional<Arc> entry;
    std::optional<Arc> leaving;
    double T_e = 0.0;
    double T_l = 0.0;
    double T = 0.0;
    std::string case_label;
    std::vector<std::string> warnings;

    PhaseState evaluate(double t) const;
};

struct PlannerOptions {
    double stop_radius = 1e-5;
    double tol = 1e-10;
    double t_max = 400.0;
    CandidateOptions candidates;
    bool refine = true; // land endpoints on the manifolds before integrating
};

/// Select turnpike data for the given boundary conditions. One approximation
/// per qualifying saddle; more than one entry means the ranking is left to
/// the caller (a warning is attached). Throws when no saddle qualifies or
/// the horizon cannot hold the splice.
std::vector<TurnpikeApproximation> plan(const EulerField& field,
                                        const std::vector<Equilibrium>& equilibria,
                                        const BoundaryConditions& bc,
                                        const PlannerOptions& opts = {});

/// Residual of the stationarity condition F_x - d/dt(F_u) along a sampled
/// curve, using a centered difference of F_u along the curve itself.
std::vector<std::pair<double, double>> euler_residual(
    const EulerField& field, const std::function<PhaseState(double)>& curve, double t_lo,
    double t_hi, int n_samples);

std::vector<std::pair<double, double>> euler_residual(const EulerField& field,
                                                      const Trajectory& traj, int n_samples);

/// Piecewise residual of the splice; stencils never cross the splice
/// instants, and the plateau residual is evaluated exactly at the saddle.
std::vector<std::pair<double, double>> euler_residual(const EulerField& field,
                                                      const TurnpikeApproximation& approx,
                                                      int n_samples);

} // namespace turnpike

#endif
