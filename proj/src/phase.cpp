#include "turnpike/phase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace turnpike {

PhaseState EulerField::rhs(PhaseState s) const {
    const Jet2 j = jet(s);
    if (std::abs(j.duu) < guard_floor_) throw GuardViolation(s.x, s.u, j.duu);
    return {s.u, (j.dx - s.u * j.dxu) / j.duu};
}

EulerField build_field(const Expression& f, const ConstantMap& constants, double guard_floor) {
    if (f.empty()) throw std::invalid_argument("integrand expression is empty");
    for (const auto& name : f.constant_names())
        if (!constants.count(name)) throw EvalError("unbound constant '" + name + "'", name);
    return EulerField(f, constants, guard_floor);
}

const char* to_string(EquilibriumKind k) {
    switch (k) {
        case EquilibriumKind::Saddle: return "saddle";
        case EquilibriumKind::Node: return "node";
        case EquilibriumKind::Focus: return "focus";
        case EquilibriumKind::CenterOrFocus: return "center_or_focus";
        case EquilibriumKind::Degenerate: return "degenerate";
    }
    return "?";
}

namespace {

constexpr double kRootTol = 1e-12;
constexpr double kDegeneracyTol = 1e-8;

double g_of_x(const EulerField& field, double x) { return field.jet({x, 0.0}).dx; }

// Newton on F_x(x,0) with bisection fallback inside a bracket when one is known.
double polish_root(const EulerField& field, double x, std::optional<std::pair<double, double>> bracket) {
    double lo = 0, hi = 0, glo = 0;
    bool have_bracket = false;
    if (bracket) {
        lo = bracket->first;
        hi = bracket->second;
        glo = g_of_x(field, lo);
        have_bracket = true;
    }
    for (int it = 0; it < 100; ++it) {
        const Jet2 j = field.jet({x, 0.0});
        const double g = j.dx;
        if (std::abs(g) <= kRootTol) return x;
        const double gp = j.dxx;
        double x_next = gp != 0.0 ? x - g / gp : x;
        const bool ok = have_bracket ? (x_next > lo && x_next < hi) : std::isfinite(x_next);
        if (!ok || x_next == x) {
            if (!have_bracket) return x;
            x_next = 0.5 * (lo + hi);
        }
        if (have_bracket) {
            const double gn = g_of_x(field, x_next);
            if ((glo < 0) == (gn < 0)) {
                lo = x_next;
                glo = gn;
            } else {
                hi = x_next;
            }
        }
        x = x_next;
    }
    return x;
}

std::array<std::array<double, 2>, 2> jacobian_fd(const EulerField& field, PhaseState p) {
    const double hx = 1e-6 * (1.0 + std::abs(p.x));
    const double hu = 1e-6 * (1.0 + std::abs(p.u));
    const PhaseState fxp = field.rhs({p.x + hx, p.u});
    const PhaseState fxm = field.rhs({p.x - hx, p.u});
    const PhaseState fup = field.rhs({p.x, p.u + hu});
    const PhaseState fum = field.rhs({p.x, p.u - hu});
    return {{{(fxp.x - fxm.x) / (2 * hx), (fup.x - fum.x) / (2 * hu)},
             {(fxp.u - fxm.u) / (2 * hx), (fup.u - fum.u) / (2 * hu)}}};
}

std::array<double, 2> eigenvector_for(const std::array<std::array<double, 2>, 2>& J, double lambda) {
    // (J - lambda I) v = 0; pick the better-conditioned row.
    const double r1x = J[0][0] - lambda, r1u = J[0][1];
    const double r2x = J[1][0], r2u = J[1][1] - lambda;
    std::array<double, 2> v{};
    if (std::abs(r1x) + std::abs(r1u) >= std::abs(r2x) + std::abs(r2u))
        v = {-r1u, r1x};
    else
        v = {-r2u, r2x};
    const double n = std::hypot(v[0], v[1]);
    if (n == 0) return {1.0, 0.0};
    v[0] /= n;
    v[1] /= n;
    // Fix an orientation so output is deterministic.
    if (v[0] < 0 || (v[0] == 0 && v[1] < 0)) {
        v[0] = -v[0];
        v[1] = -v[1];
    }
    return v;
}

} // namespace

Equilibrium classify(const EulerField& field, PhaseState location) {
    {
        const PhaseState r = field.rhs(location);
        if (std::max(std::abs(r.x), std::abs(r.u)) > 1e-8)
            throw std::invalid_argument("classify: point is not an equilibrium");
    }
    Equilibrium eq;
    eq.location = {polish_root(field, location.x, std::nullopt), 0.0};
    eq.jacobian = jacobian_fd(field, eq.location);
    eq.C_value = field.hamiltonian(eq.location);

    const auto& J = eq.jacobian;
    const double tr = J[0][0] + J[1][1];
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    const double disc = tr * tr - 4.0 * det;

    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double l1 = 0.5 * (tr - sq), l2 = 0.5 * (tr + sq);
        eq.eigenvalues = {std::complex<double>(l1, 0.0), std::complex<double>(l2, 0.0)};
        eq.eigenvectors = {{eigenvector_for(J, l1), eigenvector_for(J, l2)}};
        if (std::abs(det) < kDegeneracyTol || std::abs(l2 - l1) < kDegeneracyTol)
            eq.kind = EquilibriumKind::Degenerate;
        else if (det < 0.0)
            eq.kind = EquilibriumKind::Saddle;
        else
            eq.kind = EquilibriumKind::Node;
    } else {
        const double re = 0.5 * tr, im = 0.5 * std::sqrt(-disc);
        eq.eigenvalues = {std::complex<double>(re, -im), std::complex<double>(re, im)};
        eq.eigenvectors = std::nullopt;
        eq.kind = std::abs(det) < kDegeneracyTol ? EquilibriumKind::Degenerate
                                                 : EquilibriumKind::CenterOrFocus;
    }
    return eq;
}

std::vector<Equilibrium> find_equilibria(const EulerField& field, double x_lo, double x_hi,
                                         int n_scan) {
    if (!(x_lo < x_hi)) throw std::invalid_argument("find_equilibria: empty x range");
    if (n_scan < 16) throw std::invalid_argument("find_equilibria: n_scan must be >= 16");

    std::vector<double> roots;
    const auto push_root = [&roots](double x) {
        for (double r : roots)
            if (std::abs(r - x) < 1e-8) return;
        roots.push_back(x);
    };

    double x_prev = x_lo;
    double g_prev = g_of_x(field, x_prev);
    for (int i = 1; i < n_scan; ++i) {
        const double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) / (n_scan - 1);
        const double g = g_of_x(field, x);
        if (g_prev == 0.0) {
            push_root(polish_root(field, x_prev, std::nullopt));
        } else if ((g_prev < 0) != (g < 0)) {
            // Tighten by bisection before the Newton polish.
            double lo = x_prev, hi = x, glo = g_prev;
            for (int k = 0; k < 60; ++k) {
                const double mid = 0.5 * (lo + hi);
                const double gm = g_of_x(field, mid);
                if (gm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if ((glo < 0) == (gm < 0)) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            push_root(polish_root(field, 0.5 * (lo + hi), std::make_pair(x_prev, x)));
        }
        x_prev = x;
        g_prev = g;
    }
    if (g_prev == 0.0) push_root(polish_root(field, x_prev, std::nullopt));

    std::sort(roots.begin(), roots.end());
    std::vector<Equilibrium> out;
    out.reserve(roots.size());
    for (double r : roots) out.push_back(classify(field, {r, 0.0}));
    return out;
}

namespace {

struct GridValues {
    int n; // cells per axis
    std::vector<double> phi; // (n+1)*(n+1), NaN where evaluation failed
    double at(int i, int j) const { return phi[static_cast<std::size_t>(j) * (n + 1) + i]; }
};

// Key for a cell edge: (node index, 0=edge to the right, 1=edge upward).
using EdgeKey = std::int64_t;

EdgeKey edge_key(int i, int j, int orientation, int n) {
    return (static_cast<std::int64_t>(j) * (n + 1) + i) * 2 + orientation;
}

} // namespace

std::vector<Polyline> trace_curve(const EulerField& field, const CurveSpec& spec,
                                  const Window& window, int resolution) {
    if (resolution < 2) throw std::invalid_argument("trace_curve: resolution must be >= 2");
    const int n = resolution;
    const double dx = window.width() / n;
    const double du = window.height() / n;

    const auto value = [&](double x, double u) -> double {
        try {
            if (spec.kind == CurveSpec::Kind::LevelSet)
                return field.hamiltonian({x, u}) - spec.level;
            return field.transversality({x, u});
        } catch (const std::exception&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    GridValues grid{n, {}, };
    grid.phi.resize(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            double v = value(window.x_lo + i * dx, window.u_lo + j * du);
            if (v == 0.0) v = std::numeric_limits<double>::min(); // avoid degenerate topology
            grid.phi[static_cast<std::size_t>(j) * (n + 1) + i] = v;
        }

    const auto node_x = [&](int i) { return window.x_lo + i * dx; };
    const auto node_u = [&](int j) { return window.u_lo + j * du; };

    // Crossing point on an edge by linear interpolation.
    const auto cross = [&](int i0, int j0, int i1, int j1) -> PhaseState {
        const double pa = grid.at(i0, j0), pb = grid.at(i1, j1);
        const double t = pa / (pa - pb);
        return {node_x(i0) + t * (node_x(i1) - node_x(i0)),
                node_u(j0) + t * (node_u(j1) - node_u(j0))};
    };

    struct Seg {
        EdgeKey a, b;
        PhaseState pa, pb;
    };
    std::vector<Seg> segs;

    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double v00 = grid.at(i, j), v10 = grid.at(i + 1, j);
            const double v01 = grid.at(i, j + 1), v11 = grid.at(i + 1, j + 1);
            if (std::isnan(v00) || std::isnan(v10) || std::isnan(v01) || std::isnan(v11)) continue;
            int mask = 0;
            if (v00 > 0) mask |= 1;
            if (v10 > 0) mask |= 2;
            if (v11 > 0) mask |= 4;
            if (v01 > 0) mask |= 8;
            if (mask == 0 || mask == 15) continue;

            const EdgeKey bottom = edge_key(i, j, 0, n);
            const EdgeKey top = edge_key(i, j + 1, 0, n);
            const EdgeKey left = edge_key(i, j, 1, n);
            const EdgeKey right = edge_key(i + 1, j, 1, n);
            const PhaseState pb_ = cross(i, j, i + 1, j);
            const PhaseState pt_ = cross(i, j + 1, i + 1, j + 1);
            const PhaseState pl_ = cross(i, j, i, j + 1);
            const PhaseState pr_ = cross(i + 1, j, i + 1, j + 1);

            const auto add = [&](EdgeKey ea, PhaseState a, EdgeKey eb, PhaseState b) {
                segs.push_back({ea, eb, a, b});
            };

            switch (mask) {
                case 1: case 14: add(left, pl_, bottom, pb_); break;
                case 2: case 13: add(bottom, pb_, right, pr_); break;
                case 3: case 12: add(left, pl_, right, pr_); break;
                case 4: case 11: add(right, pr_, top, pt_); break;
                case 6: case 9:  add(bottom, pb_, top, pt_); break;
                case 7: case 8:  add(left, pl_, top, pt_); break;
                case 5: case 10: {
                    // Saddle cell: disambiguate by the center sample.
                    const double vc = value(node_x(i) + 0.5 * dx, node_u(j) + 0.5 * du);
                    const bool center_pos = vc > 0;
                    if ((mask == 5) == center_pos) {
                        add(left, pl_, top, pt_);
                        add(bottom, pb_, right, pr_);
                    } else {
                        add(left, pl_, bottom, pb_);
                        add(right, pr_, top, pt_);
                    }
                    break;
                }
                default: break;
            }
        }
    }

    // Chain segments into polylines via shared edge keys.
    std::multimap<EdgeKey, std::size_t> by_edge;
    for (std::size_t k = 0; k < segs.size(); ++k) {
        by_edge.emplace(segs[k].a, k);
        by_edge.emplace(segs[k].b, k);
    }
    std::vector<bool> used(segs.size(), false);

    const auto degree = [&](EdgeKey e) { return by_edge.count(e); };

    std::vector<Polyline> out;
    const auto walk = [&](std::size_t start, bool from_a) {
        Polyline line;
        std::size_t k = start;
        EdgeKey entry = from_a ? segs[k].a : segs[k].b;
        line.push_back(from_a ? segs[k].pa : segs[k].pb);
        while (true) {
            used[k] = true;
            const EdgeKey exit = segs[k].a == entry ? segs[k].b : segs[k].a;
            line.push_back(segs[k].a == entry ? segs[k].pb : segs[k].pa);
            // Find the unused segment sharing the exit edge.
            std::size_t next = segs.size();
            auto range = by_edge.equal_range(exit);
            for (auto it = range.first; it != range.second; ++it)
                if (!used[it->second]) {
                    next = it->second;
                    break;
                }
            if (next == segs.size()) break;
            entry = exit;
            k = next;
        }
        return line;
    };

    // Open chains first (edges of degree 1), then remaining closed loops.
    for (std::size_t k = 0; k < segs.size(); ++k) {
        if (used[k]) continue;
        if (degree(segs[k].a) == 1)
            out.push_back(walk(k, true));
        else if (degree(segs[k].b) == 1)
            out.push_back(walk(k, false));
    }
    for (std::size_t k = 0; k < segs.size(); ++k)
        if (!used[k]) out.push_back(walk(k, true));

    return out;
}

} // namespace turnpike
