#pragma once

// Small expression language for analytic coefficient fields.
//
//   expr      := term (('+' | '-') term)*
//   term      := unary (('*' | '/') unary)*
//   unary     := ('+' | '-') unary | power
//   power     := primary ('^' unary)?
//   primary   := number | x1 | x2 | x3 | pi | call | '(' expr ')'
//   call      := name '(' expr (',' expr)* ')'
//
// Supported calls: exp, sin, cos, abs, sqrt, indicator(lo, hi, v).
// indicator is 1 when lo <= v <= hi and 0 otherwise.

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kreinlab/errors.hpp"

namespace kreinlab {

class Expression {
public:
    Expression() : Expression(constant_node(0.0), "0") {}

    /// Parses `text`; variables x1..x{max_dim} are accepted.
    static Expression parse(std::string_view text, int max_dim = 3) {
        Parser p{text, 0, max_dim};
        auto root = p.parse_expr();
        p.skip_ws();
        if (p.pos != text.size()) {
            p.fail("unexpected trailing input");
        }
        return Expression(std::move(root), std::string(text));
    }

    static Expression constant(double v) {
        return Expression(constant_node(v), std::to_string(v));
    }

    double operator()(std::span<const double> x) const { return eval(*root_, x); }

    const std::string& text() const { return text_; }

    /// True when the expression contains no variable references.
    bool is_constant() const { return !uses_variables(*root_); }

private:
    enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Exp, Sin, Cos, Abs, Sqrt, Indicator };

    struct Node {
        Op op = Op::Const;
        double value = 0.0;
        int var = 0;
        std::vector<std::shared_ptr<const Node>> args;
    };
    using NodePtr = std::shared_ptr<const Node>;

    Expression(NodePtr root, std::string text) : root_(std::move(root)), text_(std::move(text)) {}

    static NodePtr constant_node(double v) {
        auto n = std::make_shared<Node>();
        n->op = Op::Const;
        n->value = v;
        return n;
    }

    static NodePtr make(Op op, std::vector<NodePtr> args) {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->args = std::move(args);
        return n;
    }

    static bool uses_variables(const Node& n) {
        if (n.op == Op::Var) return true;
        for (const auto& a : n.args) {
            if (uses_variables(*a)) return true;
        }
        return false;
    }

    static double eval(const Node& n, std::span<const double> x) {
        auto arg = [&](std::size_t i) { return eval(*n.args[i], x); };
        switch (n.op) {
            case Op::Const: return n.value;
            case Op::Var:
                if (static_cast<std::size_t>(n.var) >= x.size()) {
                    throw ArgumentError("expression references x" + std::to_string(n.var + 1) +
                                        " but only " + std::to_string(x.size()) +
                                        " coordinates were supplied");
                }
                return x[n.var];
            case Op::Neg: return -arg(0);
            case Op::Add: return arg(0) + arg(1);
            case Op::Sub: return arg(0) - arg(1);
            case Op::Mul: return arg(0) * arg(1);
            case Op::Div: return arg(0) / arg(1);
            case Op::Pow: return std::pow(arg(0), arg(1));
            case Op::Exp: return std::exp(arg(0));
            case Op::Sin: return std::sin(arg(0));
            case Op::Cos: return std::cos(arg(0));
            case Op::Abs: return std::abs(arg(0));
            case Op::Sqrt: return std::sqrt(arg(0));
            case Op::Indicator: {
                const double v = arg(2);
                return (v >= arg(0) && v <= arg(1)) ? 1.0 : 0.0;
            }
        }
        return 0.0;
    }

    struct Parser {
        std::string_view s;
        std::size_t pos;
        int max_dim;

        [[noreturn]] void fail(const std::string& what) const {
            throw ArgumentError("expression parse error at offset " + std::to_string(pos) + " in '" +
                                std::string(s) + "': " + what);
        }

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }

        bool accept(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        void expect(char c) {
            if (!accept(c)) fail(std::string("expected '") + c + "'");
        }

        NodePtr parse_expr() {
            auto lhs = parse_term();
            for (;;) {
                if (accept('+')) {
                    lhs = make(Op::Add, {lhs, parse_term()});
                } else if (accept('-')) {
                    lhs = make(Op::Sub, {lhs, parse_term()});
                } else {
                    return lhs;
                }
            }
        }

        NodePtr parse_term() {
            auto lhs = parse_unary();
            for (;;) {
                if (accept('*')) {
                    lhs = make(Op::Mul, {lhs, parse_unary()});
                } else if (accept('/')) {
                    lhs = make(Op::Div, {lhs, parse_unary()});
                } else {
                    return lhs;
                }
            }
        }

        NodePtr parse_unary() {
            if (accept('-')) return make(Op::Neg, {parse_unary()});
            if (accept('+')) return parse_unary();
            return parse_power();
        }

        NodePtr parse_power() {
            auto base = parse_primary();
            if (accept('^')) return make(Op::Pow, {base, parse_unary()});
            return base;
        }

        NodePtr parse_primary() {
            skip_ws();
            if (pos >= s.size()) fail("unexpected end of input");
            const char c = s[pos];
            if (c == '(') {
                ++pos;
                auto e = parse_expr();
                expect(')');
                return e;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
            fail(std::string("unexpected character '") + c + "'");
        }

        NodePtr parse_number() {
            const std::string rest(s.substr(pos));
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(rest, &used);
            } catch (const std::exception&) {
                fail("malformed number");
            }
            pos += used;
            return constant_node(v);
        }

        NodePtr parse_name() {
            const std::size_t start = pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) {
                ++pos;
            }
            const std::string name(s.substr(start, pos - start));
            if (name == "pi") return constant_node(std::numbers::pi);
            if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '9') {
                const int idx = name[1] - '1';
                if (idx >= max_dim) fail("variable " + name + " exceeds dimension");
                auto n = std::make_shared<Node>();
                n->op = Op::Var;
                n->var = idx;
                return n;
            }
            struct Fn {
                const char* name;
                Op op;
                std::size_t arity;
            };
            static constexpr Fn fns[] = {{"exp", Op::Exp, 1},   {"sin", Op::Sin, 1},
                                         {"cos", Op::Cos, 1},   {"abs", Op::Abs, 1},
                                         {"sqrt", Op::Sqrt, 1}, {"indicator", Op::Indicator, 3}};
            for (const auto& f : fns) {
                if (name != f.name) continue;
                expect('(');
                std::vector<NodePtr> args{parse_expr()};
                while (accept(',')) args.push_back(parse_expr());
                expect(')');
                if (args.size() != f.arity) {
                    fail(name + " expects " + std::to_string(f.arity) + " argument(s)");
                }
                return make(f.op, std::move(args));
            }
            fail("unknown identifier '" + name + "'");
        }
    };

    NodePtr root_;
    std::string text_;
};

}  // namespace kreinlab
