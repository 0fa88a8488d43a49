#ifndef TURNPIKE_SHOOTING_HPP
#define TURNPIKE_SHOOTING_HPP

#include "turnpike/planner.hpp"

namespace turnpike {

/// Raised when the horizon exceeds the double-precision shootability bound
/// T * lambda_max <= limit (initial-data sensitivity grows like e^{lambda T}).
class ConditioningError : public std::runtime_error {
  public:
    ConditioningError(double T, double lambda_max, double limit)
        : std::runtime_error("shooting horizon beyond double-precision conditioning bound: T*lambda = " +
                             std::to_string(T * lambda_max) + " > " + std::to_string(limit)),
          product_(T * lambda_max), limit_(limit) {}
    double product() const { return product_; }
    double limit() const { return limit_; }

  private:
    double product_, limit_;
};

struct ShootResult {
    Trajectory trajectory;
    double u0 = 0.0;                  // solved initial velocity
    std::optional<double> x0_solved;  // solved initial point (free/free only)
    double residual_norm = 0.0;
    int iterations = 0;
    double bracket_width = 0.0;
};

struct ShootOptions {
    double tol = 1e-10;          // integration tolerance
    double residual_tol = 1e-8;  // acceptance threshold on the end residual
    double bracket_halfwidth = 0.05; // initial search halfwidth around the guess
    double lambda_max = 0.0;     // saddle's positive eigenvalue; 0 = skip guard
    double conditioning_limit = 25.0;
    int max_iterations = 200;
};

/// Single shooting on the initial velocity (and initial point when both ends
/// are free). Fixed end: residual x(T) - xT. Free end: residual
/// F_u(x(T), u(T)). Solved by bracketed bisection refined by secant; the
/// free/free case runs a 2-d Newton on (x0, u0) with the end condition
/// residuals at both ends.
ShootResult shoot(const EulerField& field, const BoundaryConditions& bc, PhaseState guess,
                  const ShootOptions& opts = {});

struct CompareMetrics {
    double sup_x = 0.0, sup_u = 0.0;
    double l2_x = 0.0, l2_u = 0.0; // sqrt of the time integral of the squared difference
    double overlap = 0.0;          // length of the compared window
};

using CurveFn = std::function<PhaseState(double)>;

/// Sup and L2 differences on the overlap of two time windows, sampled
/// uniformly. With align_end, windows are aligned backward from their final
/// times before overlapping (for leaving-arc comparisons).
CompareMetrics compare(const CurveFn& a, double a_lo, double a_hi, const CurveFn& b, double b_lo,
                       double b_hi, int n_samples = 1001, bool align_end = false);

CompareMetrics compare(const Trajectory& a, const Trajectory& b, int n_samples = 1001,
                       bool align_end = false);

} // namespace turnpike

#endif
