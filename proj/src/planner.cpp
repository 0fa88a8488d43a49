#include "turnpike/planner.hpp"

#include <algorithm>
#include <cmath>

namespace turnpike {

PhaseState TurnpikeApproximation::evaluate(double t) const {
    if (t < 0.0 || t > T + 1e-9 * (1.0 + T))
        throw std::out_of_range("evaluate: t outside [0, T]");
    t = std::min(t, T);
    if (entry && t < T_e) return entry->trajectory.at(t);
    if (leaving && t > T - T_l) {
        // The leaving arc runs on forward time [0, T_l], saddle side first.
        return leaving->trajectory.at(t - (T - T_l));
    }
    return saddle.location;
}

namespace {

// Forward (backward for leaving side) probe: does the trajectory from q halve
// its x-distance to the saddle without first escaping?
bool approaches_saddle(const EulerField& field, PhaseState q, const Equilibrium& P, bool backward,
                       double t_max, double tol) {
    const double x_P = P.location.x;
    const double d0 = std::abs(q.x - x_P);
    if (d0 == 0.0) return true;
    const EventFn ev = [x_P, d0](const PhaseState& s) {
        const double d = std::abs(s.x - x_P);
        return std::max(d - 2.5 * d0, 0.5 * d0 - d); // rising when halved or blown past 2.5x
    };
    EventResult r;
    try {
        r = integrate_until(field.rhs_fn(), q, ev, EventDirection::Rising,
                            backward ? -t_max : t_max, tol);
    } catch (const IntegrationError&) {
        return false;
    }
    if (!r.t_event) return false;
    const PhaseState end = r.trajectory.at(*r.t_event);
    return std::abs(end.x - x_P) <= 0.5 * d0 + 1e-12;
}

// Sign changes of F_u strictly inside an arc (used as the hypothesis check
// that the free-end condition curve does not cut the arc's interior).
bool crosses_transversality_interior(const EulerField& field, const Arc& arc) {
    const auto& ts = arc.trajectory;
    const double a = std::min(ts.t0(), ts.t1());
    const double b = std::max(ts.t0(), ts.t1());
    const int n = 400;
    const double margin = (b - a) * 1e-3;
    double prev = field.transversality(ts.at(a + margin));
    for (int i = 1; i <= n; ++i) {
        const double t = a + margin + (b - a - 2 * margin) * static_cast<double>(i) / n;
        const double v = field.transversality(ts.at(t));
        if (prev != 0.0 && ((prev < 0) != (v < 0))) return true;
        prev = v;
    }
    return false;
}

std::optional<ArcEndpoint> pick_approaching(const EulerField& field,
                                            const std::vector<ArcEndpoint>& candidates,
                                            const Equilibrium& P, bool backward,
                                            const PlannerOptions& opts,
                                            std::vector<std::string>& warnings) {
    std::vector<ArcEndpoint> hits;
    for (const auto& c : candidates) {
        if (c.degenerate) continue;
        if (approaches_saddle(field, c.point, P, backward, opts.t_max, opts.tol)) hits.push_back(c);
    }
    if (hits.empty()) return std::nullopt;
    if (hits.size() > 1)
        warnings.push_back("multiple candidates approach the saddle; keeping the one nearest it");
    std::sort(hits.begin(), hits.end(), [&](const ArcEndpoint& a, const ArcEndpoint& b) {
        return std::hypot(a.point.x - P.location.x, a.point.u - P.location.u) <
               std::hypot(b.point.x - P.location.x, b.point.u - P.location.u);
    });
    return hits.front();
}

void check_no_interior_equilibrium(const std::vector<Equilibrium>& equilibria,
                                   const Equilibrium& P, const TurnpikeApproximation& approx,
                                   std::vector<std::string>& warnings) {
    double x_lo = P.location.x, x_hi = P.location.x;
    double u_lo = 0, u_hi = 0;
    const auto extend = [&](const std::optional<Arc>& arc) {
        if (!arc) return;
        for (const auto& ts : arc->trajectory.samples()) {
            x_lo = std::min(x_lo, ts.s.x);
            x_hi = std::max(x_hi, ts.s.x);
            u_lo = std::min(u_lo, ts.s.u);
            u_hi = std::max(u_hi, ts.s.u);
        }
    };
    extend(approx.entry);
    extend(approx.leaving);
    for (const auto& eq : equilibria) {
        if (std::abs(eq.location.x - P.location.x) < 1e-9) continue;
        if (eq.location.x > x_lo && eq.location.x < x_hi && 0 >= u_lo && 0 <= u_hi)
            warnings.push_back("another equilibrium lies inside the bounding box of the arcs");
    }
}

} // namespace

std::vector<TurnpikeApproximation> plan(const EulerField& field,
                                        const std::vector<Equilibrium>& equilibria,
                                        const BoundaryConditions& bc, const PlannerOptions& opts) {
    if (!(bc.T > 0)) throw std::invalid_argument("plan: horizon T must be positive");

    std::vector<Equilibrium> saddles;
    for (const auto& eq : equilibria)
        if (eq.is_saddle()) saddles.push_back(eq);
    if (saddles.empty()) throw std::runtime_error("plan: no saddle among the equilibria");

    const bool fixed0 = bc.x0.has_value();
    const bool fixedT = bc.xT.has_value();

    std::vector<TurnpikeApproximation> results;
    std::vector<std::string> rejected;

    for (const auto& P : saddles) {
        TurnpikeApproximation ap;
        ap.saddle = P;
        ap.T = bc.T;
        std::vector<std::string>& warn = ap.warnings;

        try {
            std::optional<ArcEndpoint> q_entry, q_leave;

            if (fixed0) {
                auto cands = entry_candidates(field, P, *bc.x0, opts.candidates);
                q_entry = pick_approaching(field, cands, P, /*backward=*/false, opts, warn);
                if (!q_entry) {
                    rejected.push_back("saddle at x=" + std::to_string(P.location.x) +
                                       ": no entry candidate at x0 approaches it");
                    continue;
                }
            }
            if (fixedT) {
                auto cands = entry_candidates(field, P, *bc.xT, opts.candidates);
                for (auto& c : cands) c.role = ArcRole::Leaving;
                q_leave = pick_approaching(field, cands, P, /*backward=*/true, opts, warn);
                if (!q_leave) {
                    rejected.push_back("saddle at x=" + std::to_string(P.location.x) +
                                       ": no leaving candidate at xT approaches it");
                    continue;
                }
            }
            if (!fixed0 || !fixedT) {
                // A free endpoint draws its data from the transversality system.
                auto roots = leaving_candidates(field, P, opts.candidates);
                if (!fixedT)
                    q_leave = pick_approaching(field, roots, P, /*backward=*/true, opts, warn);
                if (!fixed0) {
                    for (auto& c : roots) c.role = ArcRole::Entry;
                    q_entry = pick_approaching(field, roots, P, /*backward=*/false, opts, warn);
                    if (!q_entry) {
                        rejected.push_back("saddle at x=" + std::to_string(P.location.x) +
                                           ": no transversality point lies on the stable side");
                        continue;
                    }
                }
            }

            // Escape circle for the manifold refinement: it must fire before
            // the flow reaches any neighboring equilibrium's structure.
            RefineOptions ro;
            ro.t_max = opts.t_max;
            ro.tol = opts.tol;
            for (const auto& eq : equilibria) {
                const double d = std::abs(eq.location.x - P.location.x);
                if (d > 1e-9 && (ro.escape_radius == 0.0 || 0.8 * d < ro.escape_radius))
                    ro.escape_radius = 0.8 * d;
            }

            if (opts.refine && q_entry && !q_entry->degenerate) {
                try {
                    q_entry = refine_to_manifold(field, *q_entry, P, RefineMode::StableForward, ro);
                } catch (const std::exception& e) {
                    warn.push_back(std::string("entry refinement skipped: ") + e.what());
                }
            }
            if (opts.refine && q_leave) {
                try {
                    q_leave = refine_to_manifold(field, *q_leave, P, RefineMode::UnstableBackward, ro);
                } catch (const std::exception& e) {
                    warn.push_back(std::string("leaving refinement skipped: ") + e.what());
                }
            }

            ArcOptions ao;
            ao.stop_radius = opts.stop_radius;
            ao.t_max = opts.t_max;
            ao.tol = opts.tol;

            if (q_entry) {
                Arc e = entry_arc(field, *q_entry, P, ao);
                ap.T_e = e.duration;
                ap.entry = std::move(e);
            }
            if (q_leave) {
                Arc l = leaving_arc(field, *q_leave, P, ao);
                ap.T_l = l.duration;
                ap.leaving = std::move(l);
            }

            // Hypothesis check for problems with a free endpoint: the
            // condition curve must not cut an arc's interior (a crossing
            // marks an earlier admissible endpoint on the same extremal).
            if (!fixed0 || !fixedT) {
                if (ap.entry && crosses_transversality_interior(field, *ap.entry)) {
                    rejected.push_back("saddle at x=" + std::to_string(P.location.x) +
                                       ": entry arc crosses the transversality curve");
                    continue;
                }
                if (ap.leaving && crosses_transversality_interior(field, *ap.leaving)) {
                    rejected.push_back("saddle at x=" + std::to_string(P.location.x) +
                                       ": leaving arc crosses the transversality curve");
                    continue;
                }
            }

            if (ap.T_e + ap.T_l > bc.T)
                throw std::runtime_error("plan: horizon too short for the splice (T < T_e + T_l)");

            if (fixed0 && fixedT)
                ap.case_label = "fixed_endpoints";
            else if (!fixed0 && !fixedT)
                ap.case_label = "free_endpoints";
            else if (ap.leaving)
                ap.case_label = fixed0 ? "fixed_initial_free_end" : "free_initial_fixed_end";
            else
                ap.case_label = fixed0 ? "fixed_initial_never_leaves" : "free_initial_never_entered";

            check_no_interior_equilibrium(equilibria, P, ap, warn);
            results.push_back(std::move(ap));
        } catch (const std::runtime_error& e) {
            rejected.push_back("saddle at x=" + std::to_string(P.location.x) + ": " + e.what());
        }
    }

    if (results.empty()) {
        std::string msg = "plan: no saddle supports the boundary data";
        for (const auto& r : rejected) msg += "; " + r;
        throw std::runtime_error(msg);
    }
    if (results.size() > 1)
        for (auto& r : results)
            r.warnings.push_back("multiple saddles qualify; candidates are not ranked");
    return results;
}

namespace {

std::vector<std::pair<double, double>> residual_on(const EulerField& field,
                                                   const std::function<PhaseState(double)>& curve,
                                                   double t_lo, double t_hi, int n_samples) {
    std::vector<std::pair<double, double>> out;
    out.reserve(n_samples);
    if (!(t_hi > t_lo) || n_samples < 1) return out;
    const double span = t_hi - t_lo;
    const double h = std::min(1e-3, 0.25 * span);
    for (int i = 0; i < n_samples; ++i) {
        const double t = n_samples == 1 ? 0.5 * (t_lo + t_hi)
                                        : t_lo + span * static_cast<double>(i) / (n_samples - 1);
        // Centered where possible, shifted near the ends.
        double ta = t - h, tb = t + h;
        if (ta < t_lo) {
            ta = t_lo;
            tb = std::min(t_hi, t_lo + 2 * h);
        } else if (tb > t_hi) {
            tb = t_hi;
            ta = std::max(t_lo, t_hi - 2 * h);
        }
        const PhaseState s = curve(t);
        const double fu_a = field.transversality(curve(ta));
        const double fu_b = field.transversality(curve(tb));
        const double dfu_dt = (fu_b - fu_a) / (tb - ta);
        const double r = field.jet(s).dx - dfu_dt;
        out.emplace_back(t, r);
    }
    return out;
}

} // namespace

std::vector<std::pair<double, double>> euler_residual(
    const EulerField& field, const std::function<PhaseState(double)>& curve, double t_lo,
    double t_hi, int n_samples) {
    return residual_on(field, curve, t_lo, t_hi, n_samples);
}

std::vector<std::pair<double, double>> euler_residual(const EulerField& field,
                                                      const Trajectory& traj, int n_samples) {
    const double a = std::min(traj.t0(), traj.t1());
    const double b = std::max(traj.t0(), traj.t1());
    return residual_on(
        field, [&traj](double t) { return traj.at(t); }, a, b, n_samples);
}

std::vector<std::pair<double, double>> euler_residual(const EulerField& field,
                                                      const TurnpikeApproximation& approx,
                                                      int n_samples) {
    std::vector<std::pair<double, double>> out;
    const double T = approx.T;
    const double plateau_lo = approx.entry ? approx.T_e : 0.0;
    const double plateau_hi = approx.leaving ? T - approx.T_l : T;
    const int per_piece = std::max(2, n_samples / 3);

    if (approx.entry) {
        auto part = residual_on(
            field, [&](double t) { return approx.evaluate(t); }, 0.0, plateau_lo, per_piece);
        out.insert(out.end(), part.begin(), part.end());
    }
    {
        // The plateau sits at the equilibrium; its residual is F_x there.
        const double r = field.jet(approx.saddle.location).dx;
        const int m = std::max(2, per_piece / 2);
        for (int i = 0; i < m; ++i) {
            const double t = plateau_lo + (plateau_hi - plateau_lo) * static_cast<double>(i) / (m - 1);
            out.emplace_back(t, r);
        }
    }
    if (approx.leaving) {
        auto part = residual_on(
            field, [&](double t) { return approx.evaluate(t); }, plateau_hi, T, per_piece);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

} // namespace turnpike
