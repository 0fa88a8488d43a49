#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "emit.hpp"
#include "turnpike/arcs.hpp"
#include "turnpike/phase.hpp"
#include "turnpike/planner.hpp"
#include "turnpike/problem.hpp"
#include "turnpike/shooting.hpp"

namespace fs = std::filesystem;
using namespace turnpike;

namespace {

int log_level() {
    const char* v = std::getenv("TURNPIKE_LOG");
    return v ? std::atoi(v) : 0;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[turnpike] " << msg << "\n";
}

// All file output goes through this buffer so failures never leave partial files.
struct OutputSet {
    std::map<std::string, std::string> files; // name -> content
    fs::path dir;

    void add(const std::string& name, std::string content) { files[name] = std::move(content); }

    void flush() const {
        if (!dir.empty()) fs::create_directories(dir);
        for (const auto& [name, content] : files) {
            const fs::path p = dir / name;
            std::ofstream out(p, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
            out << content;
            info("wrote " + p.string());
        }
    }
};

struct CommonFlags {
    std::string out_dir = ".";
    std::optional<double> tol;
    std::optional<double> stop_radius;
    std::vector<double> seed_window; // u_lo u_hi for the entry-candidate scan
    std::string format = "csv";
    bool plot_script = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--out-dir", flags.out_dir, "directory for output files");
    cmd->add_option("--tol", flags.tol, "integration tolerance (overrides the problem file)");
    cmd->add_option("--stop-radius", flags.stop_radius,
                    "arc stop radius in x (overrides the problem file)");
    cmd->add_option("--seed-window", flags.seed_window,
                    "u window for the entry-candidate scan (two numbers)")
        ->expected(2);
    cmd->add_option("--format", flags.format, "trajectory output format")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_flag("--plot-script", flags.plot_script, "also emit a gnuplot script");
}

struct Loaded {
    ProblemFile problem;
    EulerField field;
    PlannerOptions popts;
};

Loaded load(const std::string& path, const CommonFlags& flags) {
    ProblemFile p = load_problem(path);
    if (flags.tol) p.options.tol = *flags.tol;
    if (flags.stop_radius) p.options.stop_radius = *flags.stop_radius;
    EulerField field = p.make_field();
    PlannerOptions popts;
    popts.tol = p.options.tol;
    popts.stop_radius = p.options.stop_radius;
    popts.candidates.seed_window = p.window;
    if (flags.seed_window.size() == 2) {
        popts.candidates.u_lo = flags.seed_window[0];
        popts.candidates.u_hi = flags.seed_window[1];
    }
    info("loaded problem '" + p.name + "'");
    return {std::move(p), std::move(field), popts};
}

std::string csv_trajectory(const Trajectory& traj, const std::string& meta_json) {
    std::string out = "# " + meta_json + "\n";
    out += "t,x,u\n";
    for (const auto& ts : traj.samples())
        out += emit::num(ts.t) + "," + emit::num(ts.s.x) + "," + emit::num(ts.s.u) + "\n";
    return out;
}

std::string json_trajectory(const Trajectory& traj, const std::string& meta_json) {
    std::string out = "{\n  \"meta\": " + meta_json + ",\n  \"samples\": [\n";
    const auto& samples = traj.samples();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out += "    [" + emit::num(samples[i].t) + ", " + emit::num(samples[i].s.x) + ", " +
               emit::num(samples[i].s.u) + "]";
        out += i + 1 < samples.size() ? ",\n" : "\n";
    }
    out += "  ]\n}\n";
    return out;
}

std::string equilibrium_json(const Equilibrium& eq, int indent) {
    // indent < 0 selects the compact single-line form.
    emit::Object o;
    o.number("x", eq.location.x);
    o.number("u", eq.location.u);
    o.text("kind", to_string(eq.kind));
    o.number("C", eq.C_value);
    o.field("jacobian", emit::array({emit::array_of_numbers({eq.jacobian[0][0], eq.jacobian[0][1]}),
                                     emit::array_of_numbers({eq.jacobian[1][0], eq.jacobian[1][1]})}));
    std::vector<std::string> eigs;
    for (const auto& l : eq.eigenvalues)
        eigs.push_back(emit::Object().number("re", l.real()).number("im", l.imag()).compact());
    o.field("eigenvalues", emit::array(eigs));
    if (eq.eigenvectors) {
        o.field("eigenvectors",
                emit::array({emit::array_of_numbers({(*eq.eigenvectors)[0][0], (*eq.eigenvectors)[0][1]}),
                             emit::array_of_numbers({(*eq.eigenvectors)[1][0], (*eq.eigenvectors)[1][1]})}));
    }
    return indent >= 0 ? o.str(indent) : o.compact();
}

std::string endpoint_json(const ArcEndpoint& e) {
    emit::Object o;
    o.number("x", e.point.x);
    o.number("u", e.point.u);
    o.field("residuals", emit::array_of_numbers({e.residuals[0], e.residuals[1]}));
    o.text("side", e.side == ManifoldSide::Above ? "above" : "below");
    if (e.degenerate) o.boolean("degenerate", true);
    return o.compact();
}

std::string warnings_json(const std::vector<std::string>& warnings) {
    std::vector<std::string> items;
    for (const auto& w : warnings) items.push_back(emit::quoted(w));
    return emit::array(items);
}

double saddle_lambda_max(const Equilibrium& eq) {
    double lam = 0;
    for (const auto& l : eq.eigenvalues) lam = std::max(lam, l.real());
    return lam;
}

// ---------------------------------------------------------------- analyze

int cmd_analyze(const std::string& path, const CommonFlags& flags) {
    const auto t0 = std::chrono::steady_clock::now();
    Loaded L = load(path, flags);
    const auto eqs =
        find_equilibria(L.field, L.problem.window.x_lo, L.problem.window.x_hi, L.problem.options.scan_points);

    std::vector<std::string> items;
    for (const auto& eq : eqs) items.push_back(equilibrium_json(eq, 4));

    emit::Object report;
    report.integer("schema_version", 1);
    report.text("problem", L.problem.name);
    report.integer("count", static_cast<long long>(eqs.size()));
    report.field("equilibria", emit::array(items));
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    info("analyze took " + std::to_string(ms) + " ms");

    const std::string text = report.str() + "\n";
    std::cout << text;
    if (flags.out_dir != "-") {
        OutputSet out;
        out.dir = flags.out_dir;
        out.add("analyze.json", text);
        out.flush();
    }
    return 0;
}

// ---------------------------------------------------------------- curves

int cmd_curves(const std::string& path, const CommonFlags& flags, int resolution) {
    Loaded L = load(path, flags);
    const auto eqs =
        find_equilibria(L.field, L.problem.window.x_lo, L.problem.window.x_hi, L.problem.options.scan_points);

    std::string csv = "curve_id,x,u\n";
    int id = 0;
    const auto emit_lines = [&](const std::vector<Polyline>& lines) {
        for (const auto& line : lines) {
            for (const auto& p : line)
                csv += std::to_string(id) + "," + emit::num(p.x) + "," + emit::num(p.u) + "\n";
            csv += "\n"; // block break between polylines
            ++id;
        }
    };

    // Level set of every saddle, then the transversality curve.
    for (const auto& eq : eqs)
        if (eq.is_saddle())
            emit_lines(trace_curve(L.field, CurveSpec::level_set(eq.C_value), L.problem.window,
                                   resolution));
    emit_lines(trace_curve(L.field, CurveSpec::transversality(), L.problem.window, resolution));

    OutputSet out;
    out.dir = flags.out_dir;
    out.add("curves.csv", csv);

    if (flags.plot_script) {
        std::string gp;
        gp += "set datafile separator comma\n";
        gp += "set key off\n";
        gp += "set xlabel 'x'\nset ylabel 'u'\n";
        gp += "set title '" + L.problem.name + ": level sets and transversality curve'\n";
        gp += "plot 'curves.csv' using 2:3:1 skip 1 with lines lc variable, \\\n";
        gp += "  '-' with points pt 7 ps 1.5 lc rgb 'red' title 'equilibria'\n";
        for (const auto& eq : eqs)
            gp += emit::num(eq.location.x) + "," + emit::num(eq.location.u) + "\n";
        gp += "e\n";
        out.add("plot.gp", gp);
    }
    out.flush();
    return 0;
}

// ---------------------------------------------------------------- arcs

int cmd_arcs(const std::string& path, const CommonFlags& flags) {
    Loaded L = load(path, flags);
    const auto eqs =
        find_equilibria(L.field, L.problem.window.x_lo, L.problem.window.x_hi, L.problem.options.scan_points);
    auto plans = plan(L.field, eqs, L.problem.bc, L.popts);
    const TurnpikeApproximation& ap = plans.front();
    std::vector<std::string> warnings = ap.warnings;
    if (plans.size() > 1)
        warnings.push_back("multiple saddles qualify; exporting arcs for the first");

    OutputSet out;
    out.dir = flags.out_dir;

    emit::Object meta;
    meta.integer("schema_version", 1);
    meta.text("problem", L.problem.name);
    meta.text("case", ap.case_label);
    meta.field("saddle", equilibrium_json(ap.saddle, 2));
    if (ap.entry) {
        emit::Object e;
        e.field("point", endpoint_json(ap.entry->endpoint));
        e.text("branch", ap.entry->branch);
        e.number("duration", ap.entry->duration);
        e.number("stop_radius", ap.entry->stop_radius);
        meta.field("entry", e.str(2));
    }
    if (ap.leaving) {
        emit::Object l;
        l.field("point", endpoint_json(ap.leaving->endpoint));
        l.text("branch", ap.leaving->branch);
        l.number("duration", ap.leaving->duration);
        l.number("stop_radius", ap.leaving->stop_radius);
        meta.field("leaving", l.str(2));
    } else {
        warnings.push_back("the turnpike is never left: no leaving arc");
    }

    // Leaving candidates are reported even when the plan does not use them.
    std::vector<std::string> cand_items;
    for (const auto& c : leaving_candidates(L.field, ap.saddle, L.popts.candidates))
        cand_items.push_back(endpoint_json(c));
    meta.field("leaving_candidates", emit::array(cand_items));
    meta.field("warnings", warnings_json(warnings));

    out.add("endpoints.json", meta.str() + "\n");

    const bool json = flags.format == "json";
    if (ap.entry) {
        emit::Object m;
        m.text("kind", "entry");
        m.text("branch", ap.entry->branch);
        m.number("duration", ap.entry->duration);
        const std::string mj = m.compact();
        out.add(json ? "entry.json" : "entry.csv",
                json ? json_trajectory(ap.entry->trajectory, mj) : csv_trajectory(ap.entry->trajectory, mj));
    }
    if (ap.leaving) {
        emit::Object m;
        m.text("kind", "leaving");
        m.text("branch", ap.leaving->branch);
        m.number("duration", ap.leaving->duration);
        const std::string mj = m.compact();
        out.add(json ? "leaving.json" : "leaving.csv",
                json ? json_trajectory(ap.leaving->trajectory, mj)
                     : csv_trajectory(ap.leaving->trajectory, mj));
    }
    out.flush();
    return 0;
}

// ---------------------------------------------------------------- approx

int cmd_approx(const std::string& path, const CommonFlags& flags, int samples) {
    Loaded L = load(path, flags);
    const auto eqs =
        find_equilibria(L.field, L.problem.window.x_lo, L.problem.window.x_hi, L.problem.options.scan_points);
    auto plans = plan(L.field, eqs, L.problem.bc, L.popts);
    const TurnpikeApproximation& ap = plans.front();

    const double T = ap.T;
    const int n = samples > 1 ? samples : static_cast<int>(std::lround(10 * T)) + 1;

    std::string csv = "t,x,u,piece\n";
    for (int i = 0; i < n; ++i) {
        const double t = T * static_cast<double>(i) / (n - 1);
        const PhaseState s = ap.evaluate(t);
        const char* piece = (ap.entry && t < ap.T_e)          ? "entry"
                            : (ap.leaving && t > T - ap.T_l) ? "leaving"
                                                             : "plateau";
        csv += emit::num(t) + "," + emit::num(s.x) + "," + emit::num(s.u) + "," + piece + "\n";
    }

    emit::Object diag;
    diag.integer("schema_version", 1);
    diag.text("problem", L.problem.name);
    diag.text("case", ap.case_label);
    diag.number("saddle_x", ap.saddle.location.x);
    diag.number("T", ap.T);
    diag.number("T_e", ap.T_e);
    diag.number("T_l", ap.T_l);
    diag.field("plateau", emit::array_of_numbers({ap.T_e, ap.T - ap.T_l}));
    std::vector<std::string> warnings = ap.warnings;
    if (plans.size() > 1) warnings.push_back("multiple saddles qualify; exporting the first");
    diag.field("warnings", warnings_json(warnings));

    OutputSet out;
    out.dir = flags.out_dir;
    out.add("approx.csv", csv);
    out.add("approx.json", diag.str() + "\n");
    if (flags.plot_script) {
        std::string gp;
        gp += "set datafile separator comma\n";
        gp += "set xlabel 't'\n";
        gp += "set title '" + L.problem.name + ": turnpike approximation'\n";
        gp += "plot 'approx.csv' using 1:2 skip 1 with lines title 'x(t)', \\\n";
        gp += "     'approx.csv' using 1:3 skip 1 with lines title 'u(t)'\n";
        out.add("plot_approx.gp", gp);
    }
    out.flush();
    return 0;
}

// ---------------------------------------------------------------- shoot

int cmd_shoot(const std::string& path, const CommonFlags& flags) {
    Loaded L = load(path, flags);
    const auto eqs =
        find_equilibria(L.field, L.problem.window.x_lo, L.problem.window.x_hi, L.problem.options.scan_points);

    // Seed the solve from the turnpike data: the entry endpoint is an
    // excellent initial guess for the entry velocity.
    PhaseState guess{0.0, 0.0};
    double lambda_max = 0.0;
    std::string seed_note = "none";
    try {
        PlannerOptions seed_opts = L.popts;
        seed_opts.refine = false;
        seed_opts.stop_radius = std::max(L.popts.stop_radius, 1e-3);
        auto plans = plan(L.field, eqs, L.problem.bc, seed_opts);
        const auto& ap = plans.front();
        lambda_max = saddle_lambda_max(ap.saddle);
        if (ap.entry) {
            guess = ap.entry->endpoint.point;
            seed_note = "turnpike entry point";
        }
    } catch (const std::exception& e) {
        info(std::string("planner seed unavailable: ") + e.what());
        for (const auto& eq : eqs)
            if (eq.is_saddle()) lambda_max = std::max(lambda_max, saddle_lambda_max(eq));
        if (L.problem.bc.x0) guess = {*L.problem.bc.x0, 0.0};
    }

    ShootOptions sopts;
    sopts.tol = L.problem.options.tol;
    sopts.lambda_max = lambda_max;
    ShootResult r = shoot(L.field, L.problem.bc, guess, sopts);

    emit::Object meta;
    meta.integer("schema_version", 1);
    meta.text("problem", L.problem.name);
    meta.number("T", L.problem.bc.T);
    meta.number("u0", r.u0);
    if (r.x0_solved) meta.number("x0", *r.x0_solved);
    meta.number("residual_norm", r.residual_norm);
    meta.integer("iterations", r.iterations);
    meta.number("bracket_width", r.bracket_width);
    meta.number("lambda_max", lambda_max);
    meta.number("conditioning_product", lambda_max * L.problem.bc.T);
    meta.text("seed", seed_note);
    const std::string pretty = meta.str();

    OutputSet out;
    out.dir = flags.out_dir;
    if (flags.format == "json")
        out.add("shoot.json", json_trajectory(r.trajectory, meta.compact()));
    else {
        out.add("shoot.csv", csv_trajectory(r.trajectory, meta.compact()));
        out.add("shoot.json", pretty + "\n");
    }
    out.flush();
    std::cout << pretty << "\n";
    return 0;
}

// ---------------------------------------------------------------- compare

struct CsvCurve {
    std::vector<double> t;
    std::vector<PhaseState> s;

    double t_lo() const { return t.front(); }
    double t_hi() const { return t.back(); }

    PhaseState at(double tq) const {
        auto it = std::lower_bound(t.begin(), t.end(), tq);
        if (it == t.begin()) return s.front();
        if (it == t.end()) return s.back();
        const std::size_t i = static_cast<std::size_t>(it - t.begin());
        const double w = (tq - t[i - 1]) / (t[i] - t[i - 1]);
        return {s[i - 1].x + w * (s[i].x - s[i - 1].x), s[i - 1].u + w * (s[i].u - s[i - 1].u)};
    }
};

CsvCurve read_csv_curve(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    CsvCurve c;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 't' || line[0] == 'c') continue;
        std::istringstream ss(line);
        std::string cell;
        double vals[3];
        int k = 0;
        while (k < 3 && std::getline(ss, cell, ',')) vals[k++] = std::atof(cell.c_str());
        if (k < 3) continue;
        c.t.push_back(vals[0]);
        c.s.push_back({vals[1], vals[2]});
    }
    if (c.t.size() < 2) throw InputError("'" + path + "' holds no trajectory samples");
    if (c.t.front() > c.t.back()) {
        std::reverse(c.t.begin(), c.t.end());
        std::reverse(c.s.begin(), c.s.end());
    }
    return c;
}

int cmd_compare(const std::string& pathA, const std::string& pathB, double tol, bool align_end,
                int n_samples) {
    const CsvCurve a = read_csv_curve(pathA);
    const CsvCurve b = read_csv_curve(pathB);
    const CompareMetrics m =
        compare([&a](double t) { return a.at(t); }, a.t_lo(), a.t_hi(),
                [&b](double t) { return b.at(t); }, b.t_lo(), b.t_hi(), n_samples, align_end);

    const bool pass = m.sup_x <= tol;
    emit::Object o;
    o.integer("schema_version", 1);
    o.number("sup_x", m.sup_x);
    o.number("sup_u", m.sup_u);
    o.number("l2_x", m.l2_x);
    o.number("l2_u", m.l2_u);
    o.number("overlap", m.overlap);
    o.number("tol", tol);
    o.boolean("pass", pass);
    std::cout << o.str() << "\n";
    return pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"turnpike: entry and leaving arcs of autonomous variational problems"};
    app.require_subcommand(1);

    std::string file, fileB;
    CommonFlags flags;
    int resolution = 256;
    int samples = 0;
    double cmp_tol = 1e-6;
    bool align_end = false;
    int cmp_samples = 1001;

    auto* analyze = app.add_subcommand("analyze", "equilibria, classification and C values");
    analyze->add_option("file", file, "problem file (JSON)")->required();
    add_common(analyze, flags);

    auto* curves = app.add_subcommand("curves", "level sets and the transversality curve as CSV");
    curves->add_option("file", file, "problem file (JSON)")->required();
    curves->add_option("--resolution", resolution, "contour grid cells per axis");
    add_common(curves, flags);

    auto* arcs = app.add_subcommand("arcs", "entry/leaving endpoints and arcs");
    arcs->add_option("file", file, "problem file (JSON)")->required();
    add_common(arcs, flags);

    auto* approx = app.add_subcommand("approx", "piecewise turnpike approximation");
    approx->add_option("file", file, "problem file (JSON)")->required();
    approx->add_option("--samples", samples, "number of evaluation points (default 10*T+1)");
    add_common(approx, flags);

    auto* shootc = app.add_subcommand("shoot", "finite-horizon extremal by single shooting");
    shootc->add_option("file", file, "problem file (JSON)")->required();
    add_common(shootc, flags);

    auto* comparec = app.add_subcommand("compare", "sup/L2 metrics between two trajectory CSVs");
    comparec->add_option("fileA", file, "first trajectory CSV")->required();
    comparec->add_option("fileB", fileB, "second trajectory CSV")->required();
    comparec->add_option("--tol", cmp_tol, "pass threshold on sup|x_A - x_B|");
    comparec->add_flag("--align-end", align_end, "align windows at their final times");
    comparec->add_option("--samples", cmp_samples, "comparison sample count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (analyze->parsed()) return cmd_analyze(file, flags);
        if (curves->parsed()) return cmd_curves(file, flags, resolution);
        if (arcs->parsed()) return cmd_arcs(file, flags);
        if (approx->parsed()) return cmd_approx(file, flags, samples);
        if (shootc->parsed()) return cmd_shoot(file, flags);
        if (comparec->parsed()) return cmd_compare(file, fileB, cmp_tol, align_end, cmp_samples);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const EvalError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
