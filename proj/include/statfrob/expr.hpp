#pragma once

// Recursive-descent parser and evaluator for scalar expressions over chart
// variables x1..xn. Grammar (loosest to tightest binding):
//
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?          right-associative; exponent may be signed
//   atom   := number | func '(' expr ')' | var | '(' expr ')'
//
// Supported functions: exp, log, sqrt, cosh, sinh, tanh, coth. Printing is
// fully parenthesized, so print -> parse reproduces the tree exactly.
// Evaluation never returns a non-finite value: domain violations (log of a
// non-positive number, division by zero, coth at zero, overflow) raise
// DomainError carrying the printed subexpression.

#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "statfrob/errors.hpp"

namespace statfrob {

enum class ExprFunc { exp, log, sqrt, cosh, sinh, tanh, coth };

inline const char* func_name(ExprFunc f) {
    switch (f) {
        case ExprFunc::exp: return "exp";
        case ExprFunc::log: return "log";
        case ExprFunc::sqrt: return "sqrt";
        case ExprFunc::cosh: return "cosh";
        case ExprFunc::sinh: return "sinh";
        case ExprFunc::tanh: return "tanh";
        case ExprFunc::coth: return "coth";
    }
    return "?";
}

struct ExprNode {
    enum class Kind { literal, variable, neg, add, sub, mul, div, pow, call };
    Kind kind;
    double value = 0.0;  // literal
    int var = 0;         // variable, 0-based
    ExprFunc func = ExprFunc::exp;
    std::shared_ptr<const ExprNode> a, b;
};

using ExprPtr = std::shared_ptr<const ExprNode>;

// coth via expm1 for accuracy near zero; odd extension to negative arguments.
// The caller supplies the printed argument for error reporting.
inline double eval_coth(double z, const std::string& where) {
    if (std::abs(z) < 1e-12) throw DomainError("coth evaluated at zero", where);
    if (z > 0.0) return 1.0 + 2.0 / std::expm1(2.0 * z);
    return -(1.0 + 2.0 / std::expm1(-2.0 * z));
}

namespace detail {

inline std::string print_node(const ExprNode& n) {
    std::ostringstream os;
    switch (n.kind) {
        case ExprNode::Kind::literal: {
            if (n.value < 0.0 || std::signbit(n.value)) {
                ExprNode pos = n;
                pos.value = -n.value;
                return "(-" + print_node(pos) + ")";
            }
            os << std::setprecision(std::numeric_limits<double>::max_digits10) << n.value;
            return os.str();
        }
        case ExprNode::Kind::variable:
            return "x" + std::to_string(n.var + 1);
        case ExprNode::Kind::neg:
            return "(-" + print_node(*n.a) + ")";
        case ExprNode::Kind::add:
            return "(" + print_node(*n.a) + "+" + print_node(*n.b) + ")";
        case ExprNode::Kind::sub:
            return "(" + print_node(*n.a) + "-" + print_node(*n.b) + ")";
        case ExprNode::Kind::mul:
            return "(" + print_node(*n.a) + "*" + print_node(*n.b) + ")";
        case ExprNode::Kind::div:
            return "(" + print_node(*n.a) + "/" + print_node(*n.b) + ")";
        case ExprNode::Kind::pow:
            return "(" + print_node(*n.a) + "^" + print_node(*n.b) + ")";
        case ExprNode::Kind::call:
            return std::string(func_name(n.func)) + "(" + print_node(*n.a) + ")";
    }
    return "?";
}

inline double eval_node(const ExprNode& n, const std::vector<double>& x) {
    auto finite_or_throw = [&](double v) {
        if (!std::isfinite(v)) throw DomainError("non-finite result", print_node(n));
        return v;
    };
    switch (n.kind) {
        case ExprNode::Kind::literal:
            return n.value;
        case ExprNode::Kind::variable:
            return x[static_cast<std::size_t>(n.var)];
        case ExprNode::Kind::neg:
            return -eval_node(*n.a, x);
        case ExprNode::Kind::add:
            return finite_or_throw(eval_node(*n.a, x) + eval_node(*n.b, x));
        case ExprNode::Kind::sub:
            return finite_or_throw(eval_node(*n.a, x) - eval_node(*n.b, x));
        case ExprNode::Kind::mul:
            return finite_or_throw(eval_node(*n.a, x) * eval_node(*n.b, x));
        case ExprNode::Kind::div: {
            const double num = eval_node(*n.a, x);
            const double den = eval_node(*n.b, x);
            if (den == 0.0) throw DomainError("division by zero", print_node(n));
            return finite_or_throw(num / den);
        }
        case ExprNode::Kind::pow: {
            const double base = eval_node(*n.a, x);
            const double ex = eval_node(*n.b, x);
            if (base < 0.0 && ex != std::floor(ex))
                throw DomainError("fractional power of negative base", print_node(n));
            if (base == 0.0 && ex < 0.0)
                throw DomainError("zero raised to negative power", print_node(n));
            return finite_or_throw(std::pow(base, ex));
        }
        case ExprNode::Kind::call: {
            const double arg = eval_node(*n.a, x);
            switch (n.func) {
                case ExprFunc::exp: return finite_or_throw(std::exp(arg));
                case ExprFunc::log:
                    if (arg <= 0.0) throw DomainError("log of non-positive value", print_node(n));
                    return finite_or_throw(std::log(arg));
                case ExprFunc::sqrt:
                    if (arg < 0.0) throw DomainError("sqrt of negative value", print_node(n));
                    return std::sqrt(arg);
                case ExprFunc::cosh: return finite_or_throw(std::cosh(arg));
                case ExprFunc::sinh: return finite_or_throw(std::sinh(arg));
                case ExprFunc::tanh: return std::tanh(arg);
                case ExprFunc::coth: return eval_coth(arg, print_node(n));
            }
        }
    }
    throw DomainError("malformed expression node", "?");
}

inline bool equal_node(const ExprNode& p, const ExprNode& q) {
    if (p.kind != q.kind) return false;
    switch (p.kind) {
        case ExprNode::Kind::literal: return p.value == q.value;
        case ExprNode::Kind::variable: return p.var == q.var;
        case ExprNode::Kind::neg: return equal_node(*p.a, *q.a);
        case ExprNode::Kind::call: return p.func == q.func && equal_node(*p.a, *q.a);
        default: return equal_node(*p.a, *q.a) && equal_node(*p.b, *q.b);
    }
}

class Parser {
  public:
    Parser(std::string text, int dim) : text_(std::move(text)), dim_(dim) {}

    ExprPtr run() {
        ExprPtr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size())
            throw SyntaxError("unexpected trailing input", pos_);
        return e;
    }

  private:
    std::string text_;
    int dim_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool peek_is(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }
    bool accept(char c) {
        if (peek_is(c)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c, const char* what) {
        if (!accept(c)) throw SyntaxError(std::string("expected ") + what, pos_);
    }

    static ExprPtr make(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

    ExprPtr parse_expr() {
        ExprPtr left = parse_term();
        for (;;) {
            if (accept('+'))
                left = make({ExprNode::Kind::add, 0, 0, ExprFunc::exp, left, parse_term()});
            else if (accept('-'))
                left = make({ExprNode::Kind::sub, 0, 0, ExprFunc::exp, left, parse_term()});
            else
                return left;
        }
    }

    ExprPtr parse_term() {
        ExprPtr left = parse_unary();
        for (;;) {
            if (accept('*'))
                left = make({ExprNode::Kind::mul, 0, 0, ExprFunc::exp, left, parse_unary()});
            else if (accept('/'))
                left = make({ExprNode::Kind::div, 0, 0, ExprFunc::exp, left, parse_unary()});
            else
                return left;
        }
    }

    ExprPtr parse_unary() {
        if (accept('-'))
            return make({ExprNode::Kind::neg, 0, 0, ExprFunc::exp, parse_unary(), nullptr});
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (accept('^'))
            return make({ExprNode::Kind::pow, 0, 0, ExprFunc::exp, base, parse_unary()});
        return base;
    }

    ExprPtr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError("unexpected end of input", pos_);
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        if (c == '(') {
            ++pos_;
            ExprPtr e = parse_expr();
            expect(')', "')'");
            return e;
        }
        throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
    }

    ExprPtr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            } else {
                pos_ = mark;  // 'e' belonged to something else; not a valid exponent
            }
        }
        const std::string tok = text_.substr(start, pos_ - start);
        if (tok == ".") throw SyntaxError("malformed number", start);
        try {
            return make({ExprNode::Kind::literal, std::stod(tok), 0, ExprFunc::exp, nullptr,
                         nullptr});
        } catch (const std::exception&) {
            throw SyntaxError("malformed number '" + tok + "'", start);
        }
    }

    ExprPtr parse_ident() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                       text_[pos_] == '_'))
            ++pos_;
        const std::string name = text_.substr(start, pos_ - start);

        static const std::pair<const char*, ExprFunc> funcs[] = {
            {"exp", ExprFunc::exp},   {"log", ExprFunc::log},   {"sqrt", ExprFunc::sqrt},
            {"cosh", ExprFunc::cosh}, {"sinh", ExprFunc::sinh}, {"tanh", ExprFunc::tanh},
            {"coth", ExprFunc::coth}};
        for (const auto& [fname, f] : funcs)
            if (name == fname) {
                expect('(', "'(' after function name");
                ExprPtr arg = parse_expr();
                expect(')', "')'");
                return make({ExprNode::Kind::call, 0, 0, f, arg, nullptr});
            }

        // variables are exactly x1..xn
        if (name.size() >= 2 && name[0] == 'x' &&
            name.find_first_not_of("0123456789", 1) == std::string::npos) {
            int idx = 0;
            try {
                idx = std::stoi(name.substr(1));
            } catch (const std::exception&) {
                idx = 0;  // absurdly large index: treat as out of range
            }
            if (idx < 1 || idx > dim_)
                throw UnknownVariable("variable " + name + " outside x1..x" +
                                          std::to_string(dim_),
                                      start);
            return make({ExprNode::Kind::variable, 0, idx - 1, ExprFunc::exp, nullptr, nullptr});
        }

        if (peek_is('('))
            throw UnknownFunction("unknown function '" + name + "'", start);
        throw UnknownVariable("unknown identifier '" + name + "'", start);
    }
};

}  // namespace detail

// Immutable parsed expression bound to a fixed chart dimension.
class ScalarExpr {
  public:
    ScalarExpr() = default;

    static ScalarExpr parse(const std::string& text, int dim) {
        ScalarExpr e;
        e.dim_ = dim;
        e.root_ = detail::Parser(text, dim).run();
        return e;
    }

    static ScalarExpr constant(double v, int dim) {
        ScalarExpr e;
        e.dim_ = dim;
        e.root_ = std::make_shared<const ExprNode>(
            ExprNode{ExprNode::Kind::literal, v, 0, ExprFunc::exp, nullptr, nullptr});
        return e;
    }

    int dim() const { return dim_; }
    bool empty() const { return root_ == nullptr; }

    double eval(const std::vector<double>& x) const {
        if (static_cast<int>(x.size()) != dim_)
            throw DimensionMismatch("point has dimension " + std::to_string(x.size()) +
                                    ", expression expects " + std::to_string(dim_));
        return detail::eval_node(*root_, x);
    }

    std::string print() const { return detail::print_node(*root_); }

    bool same_tree(const ScalarExpr& other) const {
        return dim_ == other.dim_ && detail::equal_node(*root_, *other.root_);
    }

  private:
    ExprPtr root_;
    int dim_ = 0;
};

}  // namespace statfrob
