#ifndef TURNPIKE_EXPR_HPP
#define TURNPIKE_EXPR_HPP

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include "turnpike/jet.hpp"

namespace turnpike {

/// Syntax error with 1-based character position and the token set that
/// would have been accepted there.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::string message, std::size_t offset, std::string expected)
        : std::runtime_error(std::move(message)), offset_(offset), expected_(std::move(expected)) {}
    std::size_t offset() const { return offset_; }
    const std::string& expected() const { return expected_; }

  private:
    std::size_t offset_;
    std::string expected_;
};

/// Evaluation failure (unbound constant or domain violation), carrying the
/// printed form of the offending subexpression.
class EvalError : public std::runtime_error {
  public:
    EvalError(std::string message, std::string subexpression)
        : std::runtime_error(std::move(message)), subexpression_(std::move(subexpression)) {}
    const std::string& subexpression() const { return subexpression_; }

  private:
    std::string subexpression_;
};

enum class UnaryOp { Neg, Exp, Log, Sin, Cos, Sqrt, Tanh };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    enum class Kind { Number, Constant, VarX, VarU, Unary, Binary };
    Kind kind;
    double number = 0.0;   // Kind::Number
    std::string name;      // Kind::Constant
    UnaryOp uop{};         // Kind::Unary; operand in lhs
    BinaryOp bop{};        // Kind::Binary
    ExprPtr lhs, rhs;
};

using ConstantMap = std::map<std::string, double>;

/// Immutable expression in variables x, u and named constants. Values are
/// shareable across threads; evaluation is pure.
class Expression {
  public:
    Expression() = default;
    explicit Expression(ExprPtr root) : root_(std::move(root)) {}

    const ExprPtr& root() const { return root_; }
    bool empty() const { return root_ == nullptr; }

    std::string to_string() const;
    std::set<std::string> constant_names() const;

    /// F and its five partials at (x, u), exact to round-off.
    Jet2 eval(double x, double u, const ConstantMap& constants) const;

    /// Structural (tree) equality.
    bool equals(const Expression& other) const;

  private:
    ExprPtr root_;
};

Expression parse_expression(std::string_view source);

std::string print_node(const ExprPtr& node);

} // namespace turnpike

#endif
