#ifndef TURNPIKE_ARCS_HPP
#define TURNPIKE_ARCS_HPP

#include <array>
#include <string>
#include <vector>

#include "turnpike/phase.hpp"

namespace turnpike {

enum class ArcRole { Entry, Leaving };
enum class ManifoldSide { Above, Below }; // relative to u = 0

struct ArcEndpoint {
    PhaseState point;
    ArcRole role = ArcRole::Entry;
    // For entry points: (C(point) - C(P), x - x0). For leaving points:
    // (F(point) - C(P), F_u(point)). Both <= 1e-10 in magnitude.
    std::array<double, 2> residuals{0.0, 0.0};
    ManifoldSide side = ManifoldSide::Above;
    bool degenerate = false; // double root (e.g. x0 at the saddle itself)
};

/// A trajectory piece between a boundary endpoint and a neighborhood of the
/// saddle. Entry arcs start at the endpoint and end within stop_radius of
/// the saddle (in x); leaving arcs are reported in forward time, saddle side
/// first, ending at the endpoint.
struct Arc {
    Trajectory trajectory;
    ArcEndpoint endpoint;
    Equilibrium saddle;
    double duration = 0.0; // time spent between endpoint and the stop circle
    double stop_radius = 0.0;
    // "s1"/"s2" (stable) or "u1"/"u2" (unstable): branch 1 has u > 0 near the
    // saddle on the stable side and u < 0 on the unstable side.
    std::string branch;
};

struct CandidateOptions {
    double u_lo = -10.0, u_hi = 10.0; // scan window for entry candidates
    int n_scan = 2001;
    int n_seeds = 64;     // multi-start seeds along the transversality curve
    Window seed_window{-5.0, 5.0, -5.0, 5.0};
};

/// Roots u of C(x0, u) = C(P): the crossings of the saddle's level set with
/// the initial line x = x0. Both signs are reported; an empty result means
/// there is no entry arc through x0.
std::vector<ArcEndpoint> entry_candidates(const EulerField& field, const Equilibrium& P, double x0,
                                          const CandidateOptions& opts = {});

/// Solutions of F(x,u) = C(P), F_u(x,u) = 0 away from P itself, found by
/// damped Newton from seeds along the traced transversality curve, sorted by
/// distance to P. Empty means the turnpike is never left.
std::vector<ArcEndpoint> leaving_candidates(const EulerField& field, const Equilibrium& P,
                                            const CandidateOptions& opts = {});

enum class RefineMode { StableForward, UnstableBackward };

struct RefineOptions {
    double escape_radius = 0.0; // 0: derived from |x_Q - x_P|
    double initial_bracket = 1e-6;
    double t_max = 400.0;
    double tol = 1e-10;
};

/// Bisect the u coordinate of Q between trajectories escaping the saddle on
/// opposite sides until the bracket reaches a few ulps, landing Q on the
/// stable (forward) or unstable (backward) manifold.
ArcEndpoint refine_to_manifold(const EulerField& field, const ArcEndpoint& Q, const Equilibrium& P,
                               RefineMode mode, const RefineOptions& opts = {});

struct ArcOptions {
    double stop_radius = 1e-5;
    double t_max = 400.0;
    double tol = 1e-10;
};

/// Forward trajectory from Q_e until |x - x_P| < stop_radius.
Arc entry_arc(const EulerField& field, const ArcEndpoint& Q_e, const Equilibrium& P,
              const ArcOptions& opts = {});

/// Backward trajectory from Q_l until |x - x_P| < stop_radius, reported in
/// forward time (saddle side at t = 0, Q_l at t = duration).
Arc leaving_arc(const EulerField& field, const ArcEndpoint& Q_l, const Equilibrium& P,
                const ArcOptions& opts = {});

struct SeparatrixOptions {
    double seed_offset = 1e-6;
    double t_max = 500.0;
    double tol = 1e-10;
};

/// The four separatrix branches of a saddle, each integrated until it leaves
/// the window: stable branches backward, unstable branches forward. Order:
/// s1, s2, u1, u2 (branch 1 as for Arc::branch).
std::array<Arc, 4> separatrices(const EulerField& field, const Equilibrium& P,
                                const Window& window, const SeparatrixOptions& opts = {});

} // namespace turnpike

#endif
