#include "turnpike/arcs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace turnpike {

namespace {

constexpr double kResidualTol = 1e-12;

double entry_defect(const EulerField& field, double x0, double u, double C_P) {
    return field.hamiltonian({x0, u}) - C_P;
}

// d/du [C(x0,u)] = -u F_uu.
double entry_defect_slope(const EulerField& field, double x0, double u) {
    return -u * field.jet({x0, u}).duu;
}

ArcEndpoint make_entry_endpoint(const EulerField& field, double x0, double u, double C_P,
                                bool degenerate = false) {
    ArcEndpoint e;
    e.point = {x0, u};
    e.role = ArcRole::Entry;
    e.residuals = {entry_defect(field, x0, u, C_P), 0.0};
    e.side = u >= 0 ? ManifoldSide::Above : ManifoldSide::Below;
    e.degenerate = degenerate;
    return e;
}

double polish_entry_root(const EulerField& field, double x0, double C_P, double lo, double hi,
                         double flo) {
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = entry_defect(field, x0, mid, C_P);
        if (fm == 0.0) return mid;
        if ((flo < 0) == (fm < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double u = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {
        const double f = entry_defect(field, x0, u, C_P);
        if (std::abs(f) <= kResidualTol) break;
        const double fp = entry_defect_slope(field, x0, u);
        if (fp == 0.0) break;
        const double un = u - f / fp;
        if (!std::isfinite(un)) break;
        u = un;
    }
    return u;
}

} // namespace

std::vector<ArcEndpoint> entry_candidates(const EulerField& field, const Equilibrium& P, double x0,
                                          const CandidateOptions& opts) {
    if (!P.is_saddle()) throw std::invalid_argument("entry_candidates: P must be a saddle");
    const double C_P = P.C_value;

    std::vector<ArcEndpoint> out;

    // x0 at the saddle: C(x0,u) - C(P) has a double root at u = 0.
    if (std::abs(x0 - P.location.x) < 1e-9) {
        out.push_back(make_entry_endpoint(field, x0, 0.0, C_P, /*degenerate=*/true));
        return out;
    }

    std::vector<double> roots;
    const auto push = [&roots](double u) {
        for (double r : roots)
            if (std::abs(r - u) < 1e-8) return;
        roots.push_back(u);
    };

    double u_prev = opts.u_lo;
    double f_prev = std::numeric_limits<double>::quiet_NaN();
    try {
        f_prev = entry_defect(field, x0, u_prev, C_P);
    } catch (const std::exception&) {
    }
    for (int i = 1; i < opts.n_scan; ++i) {
        const double u = opts.u_lo + (opts.u_hi - opts.u_lo) * static_cast<double>(i) /
                                         (opts.n_scan - 1);
        double f = std::numeric_limits<double>::quiet_NaN();
        try {
            f = entry_defect(field, x0, u, C_P);
        } catch (const std::exception&) {
        }
        if (std::isfinite(f_prev) && std::isfinite(f)) {
            if (f_prev == 0.0)
                push(u_prev);
            else if ((f_prev < 0) != (f < 0))
                push(polish_entry_root(field, x0, C_P, u_prev, u, f_prev));
        }
        u_prev = u;
        f_prev = f;
    }
    if (std::isfinite(f_prev) && f_prev == 0.0) push(u_prev);

    std::sort(roots.begin(), roots.end(), [](double a, double b) { return a > b; });
    for (double u : roots) out.push_back(make_entry_endpoint(field, x0, u, C_P));
    return out;
}

std::vector<ArcEndpoint> leaving_candidates(const EulerField& field, const Equilibrium& P,
                                            const CandidateOptions& opts) {
    if (!P.is_saddle()) throw std::invalid_argument("leaving_candidates: P must be a saddle");
    const double C_P = P.C_value;

    // Seeds along the transversality curve inside the window.
    std::vector<PhaseState> seeds;
    const auto polylines = trace_curve(field, CurveSpec::transversality(), opts.seed_window, 128);
    std::size_t total = 0;
    for (const auto& line : polylines) total += line.size();
    if (total > 0) {
        const std::size_t stride = std::max<std::size_t>(1, total / opts.n_seeds);
        std::size_t counter = 0;
        for (const auto& line : polylines)
            for (const auto& p : line)
                if (counter++ % stride == 0) seeds.push_back(p);
    }

    std::vector<ArcEndpoint> out;
    const auto push = [&](PhaseState q) {
        if (std::hypot(q.x - P.location.x, q.u - P.location.u) < 1e-6) return; // P itself
        for (const auto& e : out)
            if (std::hypot(e.point.x - q.x, e.point.u - q.u) < 1e-8) return;
        ArcEndpoint e;
        e.point = q;
        e.role = ArcRole::Leaving;
        const Jet2 j = field.jet(q);
        e.residuals = {j.v - C_P, j.du};
        e.side = q.u >= 0 ? ManifoldSide::Above : ManifoldSide::Below;
        out.push_back(e);
    };

    // Damped Newton on G = (F - C(P), F_u); Jacobian [[F_x, F_u],[F_xu, F_uu]].
    for (PhaseState s : seeds) {
        PhaseState z = s;
        bool converged = false;
        for (int it = 0; it < 60; ++it) {
            Jet2 j;
            try {
                j = field.jet(z);
            } catch (const std::exception&) {
                break;
            }
            const double g1 = j.v - C_P, g2 = j.du;
            const double res = std::max(std::abs(g1), std::abs(g2));
            if (res <= kResidualTol) {
                converged = true;
                break;
            }
            const double det = j.dx * j.duu - j.du * j.dxu;
            if (det == 0.0 || !std::isfinite(det)) break;
            double dx_step = (g1 * j.duu - g2 * j.du) / det;
            double du_step = (j.dx * g2 - j.dxu * g1) / det;
            // Step damping keeps the iteration inside the seed window scale.
            const double norm = std::hypot(dx_step, du_step);
            const double cap = 0.5 * std::max(opts.seed_window.width(), opts.seed_window.height());
            if (norm > cap) {
                dx_step *= cap / norm;
                du_step *= cap / norm;
            }
            z = {z.x - dx_step, z.u - du_step};
            if (!std::isfinite(z.x) || !std::isfinite(z.u)) break;
        }
        if (converged) push(z);
    }

    std::sort(out.begin(), out.end(), [&](const ArcEndpoint& a, const ArcEndpoint& b) {
        const double da = std::hypot(a.point.x - P.location.x, a.point.u - P.location.u);
        const double db = std::hypot(b.point.x - P.location.x, b.point.u - P.location.u);
        return da < db;
    });
    return out;
}

namespace {

// Which side of the saddle a trajectory escapes to: +1 past x_P, -1 before
// it, 0 if it never leaves the escape circle within t_max.
int escape_side(const EulerField& field, PhaseState start, const Equilibrium& P, bool backward,
                double escape_radius, double t_max, double tol) {
    const double x_P = P.location.x;
    const EventFn ev = [x_P, escape_radius](const PhaseState& s) {
        return std::abs(s.x - x_P) - escape_radius;
    };
    EventResult r;
    try {
        r = integrate_until(field.rhs_fn(), start, ev, EventDirection::Rising,
                            backward ? -t_max : t_max, tol);
    } catch (const IntegrationError&) {
        return 0;
    }
    if (!r.t_event) return 0;
    const PhaseState end = r.trajectory.at(*r.t_event);
    return end.x > x_P ? +1 : -1;
}

} // namespace

ArcEndpoint refine_to_manifold(const EulerField& field, const ArcEndpoint& Q, const Equilibrium& P,
                               RefineMode mode, const RefineOptions& opts) {
    const bool backward = mode == RefineMode::UnstableBackward;
    const double x_Q = Q.point.x;
    double radius = opts.escape_radius;
    if (radius <= 0) radius = std::max(0.25, 1.2 * std::abs(x_Q - P.location.x));

    const auto side = [&](double u) {
        return escape_side(field, {x_Q, u}, P, backward, radius, opts.t_max, opts.tol);
    };

    // Expand a bracket around Q.u whose ends escape on opposite sides.
    double lo = Q.point.u, hi = Q.point.u;
    int side_lo = 0, side_hi = 0;
    double delta = opts.initial_bracket;
    for (int it = 0; it < 60 && (side_lo == 0 || side_hi == 0 || side_lo == side_hi); ++it) {
        lo = Q.point.u - delta;
        hi = Q.point.u + delta;
        side_lo = side(lo);
        side_hi = side(hi);
        delta *= 4.0;
    }
    if (side_lo == 0 || side_hi == 0 || side_lo == side_hi)
        throw std::runtime_error(
            "refine_to_manifold: no escape-side bracket found (point not adjacent to the manifold)");

    // Bisect to a few ulps.
    while (hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(lo))) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const int sm = side(mid);
        if (sm == side_lo || sm == 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    ArcEndpoint refined = Q;
    refined.point.u = 0.5 * (lo + hi);
    if (Q.role == ArcRole::Entry) {
        refined.residuals = {field.hamiltonian(refined.point) - P.C_value, 0.0};
    } else {
        const Jet2 j = field.jet(refined.point);
        refined.residuals = {j.v - P.C_value, j.du};
    }
    refined.side = refined.point.u >= 0 ? ManifoldSide::Above : ManifoldSide::Below;
    // A large defect means the bisection latched onto some other invariant
    // set (escape radius reaching past a neighboring equilibrium).
    if (std::abs(refined.residuals[0]) > 1e-6)
        throw std::runtime_error(
            "refine_to_manifold: refined point left the defining level set (escape radius too "
            "large for the equilibrium spacing?)");
    return refined;
}

namespace {

// Branch label from the sign of u at a probe state near the saddle.
std::string branch_label(bool stable, double u_near_P) {
    if (stable) return u_near_P > 0 ? "s1" : "s2";
    return u_near_P < 0 ? "u1" : "u2";
}

// Probe the arc at a modest x-distance from the saddle to read the branch sign.
double u_near_saddle(const Trajectory& traj, const Equilibrium& P, bool saddle_at_end) {
    const auto& samples = traj.samples();
    const double x_P = P.location.x;
    const double probe = 0.05;
    if (saddle_at_end) {
        for (auto it = samples.rbegin(); it != samples.rend(); ++it)
            if (std::abs(it->s.x - x_P) > probe) return it->s.u;
        return samples.front().s.u;
    }
    for (const auto& ts : samples)
        if (std::abs(ts.s.x - x_P) > probe) return ts.s.u;
    return samples.back().s.u;
}

} // namespace

Arc entry_arc(const EulerField& field, const ArcEndpoint& Q_e, const Equilibrium& P,
              const ArcOptions& opts) {
    if (!(opts.stop_radius > 0)) throw std::invalid_argument("entry_arc: stop_radius must be > 0");
    const double x_P = P.location.x;
    const EventFn ev = [x_P, r = opts.stop_radius](const PhaseState& s) {
        return std::abs(s.x - x_P) - r;
    };
    EventResult res =
        integrate_until(field.rhs_fn(), Q_e.point, ev, EventDirection::Falling, opts.t_max, opts.tol);
    if (!res.t_event)
        throw std::runtime_error("entry_arc: stop circle not reached by t_max (wrong side?)");

    Arc arc;
    arc.duration = *res.t_event;
    arc.trajectory = std::move(res.trajectory);
    arc.endpoint = Q_e;
    arc.saddle = P;
    arc.stop_radius = opts.stop_radius;
    arc.branch = branch_label(true, u_near_saddle(arc.trajectory, P, /*saddle_at_end=*/true));
    return arc;
}

Arc leaving_arc(const EulerField& field, const ArcEndpoint& Q_l, const Equilibrium& P,
                const ArcOptions& opts) {
    if (!(opts.stop_radius > 0)) throw std::invalid_argument("leaving_arc: stop_radius must be > 0");
    const double x_P = P.location.x;
    const EventFn ev = [x_P, r = opts.stop_radius](const PhaseState& s) {
        return std::abs(s.x - x_P) - r;
    };
    EventResult res =
        integrate_until(field.rhs_fn(), Q_l.point, ev, EventDirection::Falling, -opts.t_max, opts.tol);
    if (!res.t_event)
        throw std::runtime_error("leaving_arc: stop circle not reached by t_max (wrong side?)");

    Arc arc;
    arc.duration = std::abs(*res.t_event);
    // Present in forward time: saddle side first, Q_l last.
    arc.trajectory = res.trajectory.reversed(0.0);
    arc.endpoint = Q_l;
    arc.saddle = P;
    arc.stop_radius = opts.stop_radius;
    arc.branch = branch_label(false, u_near_saddle(arc.trajectory, P, /*saddle_at_end=*/false));
    return arc;
}

std::array<Arc, 4> separatrices(const EulerField& field, const Equilibrium& P,
                                const Window& window, const SeparatrixOptions& opts) {
    if (!P.is_saddle() || !P.eigenvectors)
        throw std::invalid_argument("separatrices: P must be a saddle with real eigenvectors");

    // Eigenvalues are sorted ascending: [0] stable, [1] unstable.
    const auto& vs = (*P.eigenvectors)[0];
    const auto& vu = (*P.eigenvectors)[1];

    const EventFn outside = [&window](const PhaseState& s) {
        const double cx = 0.5 * (window.x_lo + window.x_hi);
        const double cu = 0.5 * (window.u_lo + window.u_hi);
        const double rx = 0.5 * window.width(), ru = 0.5 * window.height();
        return std::max(std::abs(s.x - cx) / rx, std::abs(s.u - cu) / ru) - 1.0;
    };

    const auto run = [&](std::array<double, 2> v, double sign, bool stable) {
        const PhaseState seed = {P.location.x + sign * opts.seed_offset * v[0],
                                 P.location.u + sign * opts.seed_offset * v[1]};
        EventResult res = integrate_until(field.rhs_fn(), seed, outside, EventDirection::Rising,
                                          stable ? -opts.t_max : opts.t_max, opts.tol);
        Arc arc;
        arc.duration = res.t_event ? std::abs(*res.t_event) : opts.t_max;
        arc.trajectory = stable ? res.trajectory.reversed(0.0) : std::move(res.trajectory);
        arc.endpoint.point = seed;
        arc.endpoint.role = stable ? ArcRole::Entry : ArcRole::Leaving;
        arc.endpoint.side = seed.u >= P.location.u ? ManifoldSide::Above : ManifoldSide::Below;
        arc.saddle = P;
        arc.stop_radius = opts.seed_offset;
        const double u_probe = sign * v[1];
        arc.branch = branch_label(stable, u_probe);
        return arc;
    };

    // Choose seed signs so branch 1 has u > 0 (stable) / u < 0 (unstable).
    const double su = vs[1] >= 0 ? 1.0 : -1.0; // sign making the stable seed's u positive
    const double uu = vu[1] <= 0 ? 1.0 : -1.0; // sign making the unstable seed's u negative

    std::array<Arc, 4> out = {run(vs, su, true), run(vs, -su, true), run(vu, uu, false),
                              run(vu, -uu, false)};
    return out;
}

} // namespace turnpike
