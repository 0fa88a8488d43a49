#ifndef TURNPIKE_PROBLEM_HPP
#define TURNPIKE_PROBLEM_HPP

#include <string>

#include "turnpike/planner.hpp"

namespace turnpike {

/// Invalid problem file: schema violation, parse failure, unbound constant.
class InputError : public std::runtime_error {
  public:
    explicit InputError(const std::string& message) : std::runtime_error(message) {}
};

struct ProblemOptions {
    double tol = 1e-10;
    double stop_radius = 1e-5;
    double guard_floor = 1e-9;
    int scan_points = 400;
};

/// A problem file: the integrand, its constants, the analysis window, the
/// boundary data and numeric options. The on-disk form is JSON with a fixed
/// schema (schema_version 1); unknown keys are rejected.
struct ProblemFile {
    std::string name;
    std::string F_source;
    Expression F;
    ConstantMap constants;
    Window window{-3.0, 3.0, -3.0, 3.0};
    BoundaryConditions bc;
    ProblemOptions options;

    EulerField make_field() const { return build_field(F, constants, options.guard_floor); }
};

/// Parse and validate a problem file from JSON text. Throws InputError with
/// a message naming the offending key or constant.
ProblemFile load_problem_text(const std::string& json_text);

/// Read the file at path and parse it.
ProblemFile load_problem(const std::string& path);

} // namespace turnpike

#endif
