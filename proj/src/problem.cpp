#include "turnpike/problem.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace turnpike {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known) throw InputError("unknown key '" + it.key() + "' in " + where);
    }
}

double require_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw InputError("missing key '" + std::string(key) + "' in " + where);
    if (!obj[key].is_number()) throw InputError("key '" + std::string(key) + "' in " + where + " must be a number");
    return obj[key].get<double>();
}

std::optional<double> number_or_free(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw InputError("missing key '" + std::string(key) + "' in " + where);
    const json& v = obj[key];
    if (v.is_string()) {
        if (v.get<std::string>() == "free") return std::nullopt;
        throw InputError("key '" + std::string(key) + "' in " + where + " must be a number or \"free\"");
    }
    if (!v.is_number())
        throw InputError("key '" + std::string(key) + "' in " + where + " must be a number or \"free\"");
    return v.get<double>();
}

std::pair<double, double> interval(const json& v, const char* key) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw InputError(std::string("'") + key + "' must be an array of two numbers");
    const double lo = v[0].get<double>(), hi = v[1].get<double>();
    if (!(lo < hi)) throw InputError(std::string("'") + key + "' must satisfy lo < hi");
    return {lo, hi};
}

} // namespace

ProblemFile load_problem_text(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("problem file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw InputError("problem file must be a JSON object");

    reject_unknown_keys(doc, {"schema_version", "name", "F", "constants", "x_window", "u_window",
                              "bc", "options"},
                        "problem file");

    if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer() ||
        doc["schema_version"].get<int>() != 1)
        throw InputError("problem file must declare schema_version 1");

    ProblemFile p;

    if (!doc.contains("name") || !doc["name"].is_string())
        throw InputError("problem file must have a string 'name'");
    p.name = doc["name"].get<std::string>();

    if (!doc.contains("F") || !doc["F"].is_string())
        throw InputError("problem file must have a string 'F' (the integrand)");
    p.F_source = doc["F"].get<std::string>();
    try {
        p.F = parse_expression(p.F_source);
    } catch (const ParseError& e) {
        throw InputError(std::string("cannot parse F: ") + e.what());
    }

    if (doc.contains("constants")) {
        if (!doc["constants"].is_object()) throw InputError("'constants' must be an object");
        for (auto it = doc["constants"].begin(); it != doc["constants"].end(); ++it) {
            if (!it.value().is_number())
                throw InputError("constant '" + it.key() + "' must be a number");
            p.constants[it.key()] = it.value().get<double>();
        }
    }
    for (const auto& name : p.F.constant_names())
        if (!p.constants.count(name))
            throw InputError("constant '" + name + "' is used in F but not defined");

    if (doc.contains("x_window")) {
        auto [lo, hi] = interval(doc["x_window"], "x_window");
        p.window.x_lo = lo;
        p.window.x_hi = hi;
    }
    if (doc.contains("u_window")) {
        auto [lo, hi] = interval(doc["u_window"], "u_window");
        p.window.u_lo = lo;
        p.window.u_hi = hi;
    }

    if (!doc.contains("bc") || !doc["bc"].is_object())
        throw InputError("problem file must have a 'bc' object");
    const json& bc = doc["bc"];
    reject_unknown_keys(bc, {"x0", "xT", "T"}, "'bc'");
    p.bc.x0 = number_or_free(bc, "x0", "'bc'");
    p.bc.xT = number_or_free(bc, "xT", "'bc'");
    p.bc.T = require_number(bc, "T", "'bc'");
    if (!(p.bc.T > 0)) throw InputError("'bc.T' must be positive");

    if (doc.contains("options")) {
        const json& o = doc["options"];
        if (!o.is_object()) throw InputError("'options' must be an object");
        reject_unknown_keys(o, {"tol", "stop_radius", "guard_floor", "scan_points"}, "'options'");
        if (o.contains("tol")) p.options.tol = require_number(o, "tol", "'options'");
        if (o.contains("stop_radius"))
            p.options.stop_radius = require_number(o, "stop_radius", "'options'");
        if (o.contains("guard_floor"))
            p.options.guard_floor = require_number(o, "guard_floor", "'options'");
        if (o.contains("scan_points")) {
            if (!o["scan_points"].is_number_integer())
                throw InputError("'options.scan_points' must be an integer");
            p.options.scan_points = o["scan_points"].get<int>();
        }
        if (!(p.options.tol > 0)) throw InputError("'options.tol' must be positive");
        if (!(p.options.stop_radius > 0)) throw InputError("'options.stop_radius' must be positive");
        if (!(p.options.guard_floor > 0)) throw InputError("'options.guard_floor' must be positive");
        if (p.options.scan_points < 16) throw InputError("'options.scan_points' must be >= 16");
    }

    return p;
}

ProblemFile load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open problem file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_problem_text(buf.str());
}

} // namespace turnpike
