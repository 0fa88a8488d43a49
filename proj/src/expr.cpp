#include "turnpike/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <vector>

namespace turnpike {

namespace {

enum class TokKind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
    TokKind kind;
    std::size_t offset; // 1-based position of the first character
    double number = 0.0;
    std::string text;
};

const char* tok_name(TokKind k) {
    switch (k) {
        case TokKind::Number: return "number";
        case TokKind::Ident: return "identifier";
        case TokKind::Plus: return "'+'";
        case TokKind::Minus: return "'-'";
        case TokKind::Star: return "'*'";
        case TokKind::Slash: return "'/'";
        case TokKind::Caret: return "'^'";
        case TokKind::LParen: return "'('";
        case TokKind::RParen: return "')'";
        case TokKind::End: return "end of input";
    }
    return "?";
}

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_ws();
            if (pos_ >= src_.size()) {
                out.push_back({TokKind::End, pos_ + 1});
                return out;
            }
            const char c = src_[pos_];
            const std::size_t at = pos_ + 1;
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                out.push_back(lex_number(at));
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t start = pos_;
                while (pos_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                    ++pos_;
                out.push_back({TokKind::Ident, at, 0.0, std::string(src_.substr(start, pos_ - start))});
            } else {
                TokKind k;
                switch (c) {
                    case '+': k = TokKind::Plus; break;
                    case '-': k = TokKind::Minus; break;
                    case '*': k = TokKind::Star; break;
                    case '/': k = TokKind::Slash; break;
                    case '^': k = TokKind::Caret; break;
                    case '(': k = TokKind::LParen; break;
                    case ')': k = TokKind::RParen; break;
                    default:
                        throw ParseError("unexpected character '" + std::string(1, c) + "' at offset " +
                                             std::to_string(at),
                                         at, "number, identifier, operator or parenthesis");
                }
                ++pos_;
                out.push_back({k, at});
            }
        }
    }

  private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    Token lex_number(std::size_t at) {
        const char* begin = src_.data() + pos_;
        const char* end = src_.data() + src_.size();
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc() || ptr == begin)
            throw ParseError("malformed number at offset " + std::to_string(at), at, "number");
        pos_ += static_cast<std::size_t>(ptr - begin);
        Token t{TokKind::Number, at};
        t.number = value;
        return t;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

ExprPtr make_number(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Number;
    n->number = v;
    return n;
}

ExprPtr make_unary(UnaryOp op, ExprPtr child) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Unary;
    n->uop = op;
    n->lhs = std::move(child);
    return n;
}

ExprPtr make_binary(BinaryOp op, ExprPtr l, ExprPtr r) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Binary;
    n->bop = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
}

class Parser {
  public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    ExprPtr run() {
        ExprPtr e = parse_sum();
        expect(TokKind::End, "operator or end of input");
        return e;
    }

  private:
    const Token& peek() const { return tokens_[idx_]; }
    const Token& advance() { return tokens_[idx_++]; }
    bool match(TokKind k) {
        if (peek().kind == k) {
            ++idx_;
            return true;
        }
        return false;
    }
    void expect(TokKind k, const char* expected) {
        if (!match(k))
            throw ParseError("syntax error at offset " + std::to_string(peek().offset) + ": expected " +
                                 expected + ", found " + tok_name(peek().kind),
                             peek().offset, expected);
    }

    ExprPtr parse_sum() {
        ExprPtr e = parse_product();
        while (true) {
            if (match(TokKind::Plus))
                e = make_binary(BinaryOp::Add, e, parse_product());
            else if (match(TokKind::Minus))
                e = make_binary(BinaryOp::Sub, e, parse_product());
            else
                return e;
        }
    }

    ExprPtr parse_product() {
        ExprPtr e = parse_unary();
        while (true) {
            if (match(TokKind::Star))
                e = make_binary(BinaryOp::Mul, e, parse_unary());
            else if (match(TokKind::Slash))
                e = make_binary(BinaryOp::Div, e, parse_unary());
            else
                return e;
        }
    }

    // Unary minus binds looser than '^', so -x^2 parses as -(x^2).
    ExprPtr parse_unary() {
        if (match(TokKind::Minus)) return make_unary(UnaryOp::Neg, parse_unary());
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (match(TokKind::Caret)) return make_binary(BinaryOp::Pow, base, parse_unary());
        return base;
    }

    ExprPtr parse_atom() {
        const Token& t = peek();
        switch (t.kind) {
            case TokKind::Number:
                advance();
                return make_number(t.number);
            case TokKind::LParen: {
                advance();
                ExprPtr e = parse_sum();
                expect(TokKind::RParen, "')'");
                return e;
            }
            case TokKind::Ident: {
                advance();
                if (peek().kind == TokKind::LParen) {
                    UnaryOp op;
                    if (t.text == "exp") op = UnaryOp::Exp;
                    else if (t.text == "log") op = UnaryOp::Log;
                    else if (t.text == "sin") op = UnaryOp::Sin;
                    else if (t.text == "cos") op = UnaryOp::Cos;
                    else if (t.text == "sqrt") op = UnaryOp::Sqrt;
                    else if (t.text == "tanh") op = UnaryOp::Tanh;
                    else
                        throw ParseError("unknown function '" + t.text + "' at offset " +
                                             std::to_string(t.offset),
                                         t.offset, "exp, log, sin, cos, sqrt or tanh");
                    advance(); // '('
                    ExprPtr arg = parse_sum();
                    expect(TokKind::RParen, "')'");
                    return make_unary(op, arg);
                }
                auto n = std::make_shared<ExprNode>();
                if (t.text == "x") {
                    n->kind = ExprNode::Kind::VarX;
                } else if (t.text == "u") {
                    n->kind = ExprNode::Kind::VarU;
                } else {
                    n->kind = ExprNode::Kind::Constant;
                    n->name = t.text;
                }
                return n;
            }
            default:
                throw ParseError("syntax error at offset " + std::to_string(t.offset) + ": expected " +
                                     "number, identifier, '-' or '(', found " + tok_name(t.kind),
                                 t.offset, "number, identifier, '-' or '('");
        }
    }

    std::vector<Token> tokens_;
    std::size_t idx_ = 0;
};

const char* unary_name(UnaryOp op) {
    switch (op) {
        case UnaryOp::Neg: return "-";
        case UnaryOp::Exp: return "exp";
        case UnaryOp::Log: return "log";
        case UnaryOp::Sin: return "sin";
        case UnaryOp::Cos: return "cos";
        case UnaryOp::Sqrt: return "sqrt";
        case UnaryOp::Tanh: return "tanh";
    }
    return "?";
}

int precedence(const ExprNode& n) {
    switch (n.kind) {
        case ExprNode::Kind::Binary:
            switch (n.bop) {
                case BinaryOp::Add:
                case BinaryOp::Sub: return 1;
                case BinaryOp::Mul:
                case BinaryOp::Div: return 2;
                case BinaryOp::Pow: return 4;
            }
            return 1;
        case ExprNode::Kind::Unary:
            return n.uop == UnaryOp::Neg ? 3 : 5;
        default:
            return 5;
    }
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void print_rec(const ExprPtr& n, std::string& out) {
    switch (n->kind) {
        case ExprNode::Kind::Number: out += format_number(n->number); return;
        case ExprNode::Kind::Constant: out += n->name; return;
        case ExprNode::Kind::VarX: out += 'x'; return;
        case ExprNode::Kind::VarU: out += 'u'; return;
        case ExprNode::Kind::Unary: {
            if (n->uop == UnaryOp::Neg) {
                out += '-';
                const bool parens = precedence(*n->lhs) <= 3;
                if (parens) out += '(';
                print_rec(n->lhs, out);
                if (parens) out += ')';
            } else {
                out += unary_name(n->uop);
                out += '(';
                print_rec(n->lhs, out);
                out += ')';
            }
            return;
        }
        case ExprNode::Kind::Binary: {
            const int my = precedence(*n);
            const int lp = precedence(*n->lhs);
            const int rp = precedence(*n->rhs);
            bool lparens, rparens;
            if (n->bop == BinaryOp::Pow) {
                lparens = lp <= my; // '^' is right-associative
                rparens = rp < my;
            } else {
                lparens = lp < my;
                const bool assoc_sensitive = n->bop == BinaryOp::Sub || n->bop == BinaryOp::Div;
                rparens = rp < my || (rp == my && assoc_sensitive);
            }
            if (lparens) out += '(';
            print_rec(n->lhs, out);
            if (lparens) out += ')';
            switch (n->bop) {
                case BinaryOp::Add: out += " + "; break;
                case BinaryOp::Sub: out += " - "; break;
                case BinaryOp::Mul: out += '*'; break;
                case BinaryOp::Div: out += '/'; break;
                case BinaryOp::Pow: out += '^'; break;
            }
            if (rparens) out += '(';
            print_rec(n->rhs, out);
            if (rparens) out += ')';
            return;
        }
    }
}

bool is_integer_constant(const Jet2& j, long long& n) {
    if (j.dx != 0 || j.du != 0 || j.dxx != 0 || j.dxu != 0 || j.duu != 0) return false;
    if (!std::isfinite(j.v) || std::abs(j.v) > 1e15) return false;
    const double r = std::nearbyint(j.v);
    if (r != j.v) return false;
    n = static_cast<long long>(r);
    return true;
}

Jet2 eval_rec(const ExprPtr& n, double x, double u, const ConstantMap& constants) {
    switch (n->kind) {
        case ExprNode::Kind::Number: return Jet2::constant(n->number);
        case ExprNode::Kind::Constant: {
            auto it = constants.find(n->name);
            if (it == constants.end())
                throw EvalError("unbound constant '" + n->name + "'", n->name);
            return Jet2::constant(it->second);
        }
        case ExprNode::Kind::VarX: return Jet2::variable_x(x);
        case ExprNode::Kind::VarU: return Jet2::variable_u(u);
        case ExprNode::Kind::Unary: {
            const Jet2 a = eval_rec(n->lhs, x, u, constants);
            switch (n->uop) {
                case UnaryOp::Neg: return -a;
                case UnaryOp::Exp: return exp(a);
                case UnaryOp::Log:
                    if (a.v <= 0.0) throw EvalError("log of non-positive argument", print_node(n));
                    return log(a);
                case UnaryOp::Sin: return sin(a);
                case UnaryOp::Cos: return cos(a);
                case UnaryOp::Sqrt:
                    if (a.v <= 0.0) throw EvalError("sqrt of non-positive argument", print_node(n));
                    return sqrt(a);
                case UnaryOp::Tanh: return tanh(a);
            }
            break;
        }
        case ExprNode::Kind::Binary: {
            const Jet2 a = eval_rec(n->lhs, x, u, constants);
            const Jet2 b = eval_rec(n->rhs, x, u, constants);
            switch (n->bop) {
                case BinaryOp::Add: return a + b;
                case BinaryOp::Sub: return a - b;
                case BinaryOp::Mul: return a * b;
                case BinaryOp::Div:
                    if (b.v == 0.0) throw EvalError("division by zero", print_node(n));
                    return a / b;
                case BinaryOp::Pow: {
                    long long k = 0;
                    if (is_integer_constant(b, k)) {
                        if (a.v == 0.0 && k < 0)
                            throw EvalError("zero base with negative exponent", print_node(n));
                        return pow_int(a, k);
                    }
                    if (a.v <= 0.0)
                        throw EvalError("non-integer power of non-positive base", print_node(n));
                    return pow_general(a, b);
                }
            }
            break;
        }
    }
    throw EvalError("malformed expression node", "?");
}

void collect_constants(const ExprPtr& n, std::set<std::string>& out) {
    if (!n) return;
    if (n->kind == ExprNode::Kind::Constant) out.insert(n->name);
    collect_constants(n->lhs, out);
    collect_constants(n->rhs, out);
}

bool equal_rec(const ExprPtr& a, const ExprPtr& b) {
    if (!a || !b) return a == b;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case ExprNode::Kind::Number: return a->number == b->number;
        case ExprNode::Kind::Constant: return a->name == b->name;
        case ExprNode::Kind::VarX:
        case ExprNode::Kind::VarU: return true;
        case ExprNode::Kind::Unary: return a->uop == b->uop && equal_rec(a->lhs, b->lhs);
        case ExprNode::Kind::Binary:
            return a->bop == b->bop && equal_rec(a->lhs, b->lhs) && equal_rec(a->rhs, b->rhs);
    }
    return false;
}

} // namespace

std::string print_node(const ExprPtr& node) {
    std::string out;
    print_rec(node, out);
    return out;
}

std::string Expression::to_string() const { return root_ ? print_node(root_) : std::string(); }

std::set<std::string> Expression::constant_names() const {
    std::set<std::string> out;
    collect_constants(root_, out);
    return out;
}

Jet2 Expression::eval(double x, double u, const ConstantMap& constants) const {
    return eval_rec(root_, x, u, constants);
}

bool Expression::equals(const Expression& other) const { return equal_rec(root_, other.root_); }

Expression parse_expression(std::string_view source) {
    if (source.empty() || source.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw ParseError("empty expression", 1, "number, identifier, '-' or '('");
    Lexer lexer(source);
    Parser parser(lexer.run());
    return Expression(parser.run());
}

} // namespace turnpike
