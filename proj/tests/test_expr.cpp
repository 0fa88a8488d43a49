#include <doctest.h>

#include <cmath>
#include <random>

#include "turnpike/expr.hpp"

using namespace turnpike;

namespace {

const ConstantMap kLakes = {{"b", 0.7}, {"r", 1.0}, {"c", 0.1}};

const char* kLakesF =
    "b^2*x^2 - 2*b*r*x^3/(x^2+1) + 2*b*x*u - c*x^2 + r^2*x^4/(x^2+1)^2 - 2*r*x^2*u/(x^2+1) + u^2";

// Small deterministic expression generator for the property tests.
struct ExprGen {
    std::mt19937 rng;
    explicit ExprGen(unsigned seed) : rng(seed) {}

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

    std::string leaf() {
        switch (pick(5)) {
            case 0: return "x";
            case 1: return "u";
            case 2: return "a";
            case 3: return "k";
            default: {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.3f", uniform(0.1, 3.0));
                return buf;
            }
        }
    }

    std::string gen(int depth) {
        if (depth <= 0) return leaf();
        switch (pick(8)) {
            case 0: return "(" + gen(depth - 1) + " + " + gen(depth - 1) + ")";
            case 1: return "(" + gen(depth - 1) + " - " + gen(depth - 1) + ")";
            case 2: return gen(depth - 1) + "*" + leaf();
            case 3: return "(" + gen(depth - 1) + ")/(" + gen(depth - 1) + " + 4)";
            case 4: return "(" + gen(depth - 1) + ")^" + std::to_string(pick(4) + 1);
            case 5: return "sin(" + gen(depth - 1) + ")";
            case 6: return "cos(" + gen(depth - 1) + ")";
            default: return "exp((" + gen(depth - 1) + ")/8)";
        }
    }
};

bool jet_is_tame(const Jet2& j) {
    for (double v : {j.v, j.dx, j.du, j.dxx, j.dxu, j.duu})
        if (!std::isfinite(v) || std::abs(v) > 1e6) return false;
    return true;
}

} // namespace

TEST_SUITE("expr") {

TEST_CASE("parses standard precedence") {
    Expression e = parse_expression("u^2 + x^2");
    const ExprPtr& root = e.root();
    REQUIRE(root->kind == ExprNode::Kind::Binary);
    CHECK(root->bop == BinaryOp::Add);
    CHECK(root->lhs->bop == BinaryOp::Pow);
    CHECK(root->lhs->lhs->kind == ExprNode::Kind::VarU);
    CHECK(root->rhs->lhs->kind == ExprNode::Kind::VarX);
    CHECK(e.to_string() == "u^2 + x^2");
}

TEST_CASE("parses the lake-harvest integrand with named constants") {
    Expression e = parse_expression(kLakesF);
    CHECK(e.constant_names() == std::set<std::string>{"b", "c", "r"});
}

TEST_CASE("reports syntax errors with 1-based offsets") {
    CHECK_THROWS_AS(parse_expression("u^^2"), ParseError);
    try {
        parse_expression("u^^2");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 3);
    }
    CHECK_THROWS_AS(parse_expression(""), ParseError);
    CHECK_THROWS_AS(parse_expression("  "), ParseError);
    CHECK_THROWS_AS(parse_expression("x + "), ParseError);
    CHECK_THROWS_AS(parse_expression("(x + u"), ParseError);
}

TEST_CASE("rejects unknown functions") {
    try {
        parse_expression("floor(x)");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("floor") != std::string::npos);
    }
}

TEST_CASE("power is right-associative and unary minus binds looser") {
    CHECK(parse_expression("2^3^2").eval(0, 0, {}).v == 512.0);
    CHECK(parse_expression("-x^2").eval(3, 0, {}).v == -9.0);
    CHECK(parse_expression("(-x)^2").eval(3, 0, {}).v == 9.0);
}

TEST_CASE("evaluates the lake-harvest integrand at (0.5, 0)") {
    Expression e = parse_expression(kLakesF);
    Jet2 j = e.eval(0.5, 0.0, kLakes);
    CHECK(j.v == doctest::Approx(-0.0025).epsilon(1e-12));
    CHECK(j.du == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(j.duu == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("quadratic jet at (1, -1)") {
    Jet2 j = parse_expression("u^2 + x^2").eval(1.0, -1.0, {});
    CHECK(j.v == 2.0);
    CHECK(j.dx == 2.0);
    CHECK(j.du == -2.0);
    CHECK(j.dxx == 2.0);
    CHECK(j.duu == 2.0);
    CHECK(j.dxu == 0.0);
}

TEST_CASE("exp(x*u) jet at (0, 3)") {
    Jet2 j = parse_expression("exp(x*u)").eval(0.0, 3.0, {});
    CHECK(j.v == 1.0);
    CHECK(j.dx == 3.0);
    CHECK(j.du == 0.0);
    CHECK(j.dxu == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("unbound constants are reported by name") {
    Expression e = parse_expression("q*x");
    try {
        e.eval(1, 1, {});
        FAIL("expected EvalError");
    } catch (const EvalError& err) {
        CHECK(std::string(err.what()).find("q") != std::string::npos);
    }
}

TEST_CASE("domain violations name the offending subexpression") {
    try {
        parse_expression("x + log(x)").eval(-1, 0, {});
        FAIL("expected EvalError");
    } catch (const EvalError& err) {
        CHECK(err.subexpression().find("log") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_expression("sqrt(x)").eval(-4, 0, {}), EvalError);
    CHECK_THROWS_AS(parse_expression("1/x").eval(0, 0, {}), EvalError);
}

TEST_CASE("integer powers accept negative bases, fractional powers do not") {
    CHECK(parse_expression("x^3").eval(-2, 0, {}).v == -8.0);
    CHECK(parse_expression("x^-2").eval(-2, 0, {}).v == 0.25);
    CHECK(parse_expression("x^0").eval(0, 0, {}).v == 1.0);
    CHECK(parse_expression("x^0.5").eval(4, 0, {}).v == 2.0);
    CHECK_THROWS_AS(parse_expression("x^0.5").eval(-4, 0, {}), EvalError);
    CHECK_THROWS_AS(parse_expression("x^-1").eval(0, 0, {}), EvalError);
}

TEST_CASE("(x^2+1)^2 stays exact for negative x") {
    Jet2 j = parse_expression("(x^2+1)^2").eval(-2.0, 0.0, {});
    CHECK(j.v == 25.0);
    CHECK(j.dx == -40.0); // 2(x^2+1) * 2x
}

TEST_CASE("variable exponents use the general power") {
    Jet2 j = parse_expression("x^u").eval(2.0, 3.0, {});
    CHECK(j.v == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(j.du == doctest::Approx(8.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(j.dx == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("constants are late-bound") {
    Expression e = parse_expression("k*x^2");
    CHECK(e.eval(2, 0, {{"k", 1.0}}).v == 4.0);
    CHECK(e.eval(2, 0, {{"k", 2.5}}).v == 10.0);
}

TEST_CASE("evaluation is deterministic") {
    Expression e = parse_expression(kLakesF);
    Jet2 a = e.eval(1.3, -0.7, kLakes);
    Jet2 b = e.eval(1.3, -0.7, kLakes);
    CHECK(a.v == b.v);
    CHECK(a.dx == b.dx);
    CHECK(a.du == b.du);
    CHECK(a.dxx == b.dxx);
    CHECK(a.dxu == b.dxu);
    CHECK(a.duu == b.duu);
}

TEST_CASE("print/reparse round-trip is structurally identical and evaluates identically") {
    ExprGen gen(20240901);
    const ConstantMap consts = {{"a", 1.25}, {"k", -0.75}};
    int trees = 0;
    while (trees < 60) {
        const std::string src = gen.gen(3);
        Expression e1;
        try {
            e1 = parse_expression(src);
        } catch (const ParseError&) {
            continue;
        }
        ++trees;
        Expression e2 = parse_expression(e1.to_string());
        REQUIRE_MESSAGE(e1.equals(e2), "round-trip mismatch for: " << e1.to_string());
        // Same values at random points wherever defined.
        for (int k = 0; k < 20; ++k) {
            const double x = gen.uniform(-2, 2), u = gen.uniform(-2, 2);
            Jet2 j1, j2;
            try {
                j1 = e1.eval(x, u, consts);
                j2 = e2.eval(x, u, consts);
            } catch (const EvalError&) {
                continue;
            }
            CHECK(j1.v == j2.v);
            CHECK(j1.dxu == j2.dxu);
        }
    }
}

TEST_CASE("jets match central finite differences on random expressions") {
    ExprGen gen(987654321);
    const ConstantMap consts = {{"a", 0.8}, {"k", 1.7}};
    const double h = 1e-5;
    int checked = 0;
    while (checked < 200) {
        const std::string src = gen.gen(3);
        Expression e;
        try {
            e = parse_expression(src);
        } catch (const ParseError&) {
            continue;
        }
        const double x = gen.uniform(-1.5, 1.5), u = gen.uniform(-1.5, 1.5);

        Jet2 j, xp, xm, up, um, pp, pm, mp, mm;
        try {
            j = e.eval(x, u, consts);
            xp = e.eval(x + h, u, consts);
            xm = e.eval(x - h, u, consts);
            up = e.eval(x, u + h, consts);
            um = e.eval(x, u - h, consts);
            pp = e.eval(x + h, u + h, consts);
            pm = e.eval(x + h, u - h, consts);
            mp = e.eval(x - h, u + h, consts);
            mm = e.eval(x - h, u - h, consts);
        } catch (const EvalError&) {
            continue;
        }
        if (!jet_is_tame(j) || !jet_is_tame(xp) || !jet_is_tame(xm) || !jet_is_tame(up) ||
            !jet_is_tame(um))
            continue;
        ++checked;

        const auto rel = [](double got, double want, double floor_scale) {
            return std::abs(got - want) / std::max(floor_scale, std::abs(want));
        };
        CHECK_MESSAGE(rel(j.dx, (xp.v - xm.v) / (2 * h), 1.0) < 1e-6, src);
        CHECK_MESSAGE(rel(j.du, (up.v - um.v) / (2 * h), 1.0) < 1e-6, src);
        CHECK_MESSAGE(rel(j.dxx, (xp.v - 2 * j.v + xm.v) / (h * h), 1.0) < 1e-4, src);
        CHECK_MESSAGE(rel(j.duu, (up.v - 2 * j.v + um.v) / (h * h), 1.0) < 1e-4, src);
        CHECK_MESSAGE(rel(j.dxu, (pp.v - pm.v - mp.v + mm.v) / (4 * h * h), 1.0) < 1e-4, src);
    }
}

} // TEST_SUITE
