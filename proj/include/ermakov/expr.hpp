#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ermakov/dual.hpp"
#include "ermakov/errors.hpp"

namespace ermakov {

// Grammar (lowest to highest precedence):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | name | name '(' args ')' | '(' expr ')'
// Functions: sin cos tan exp log sqrt abs atan. Constants: pi e.

enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Atan, Sign };

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    Op op = Op::Num;
    double value = 0.0;  // Num
    int var = -1;        // Var: index into the expression's variable list
    Fn fn = Fn::Sin;     // Call
    NodePtr a, b;
};

namespace detail {

inline const char* fn_name(Fn f) {
    switch (f) {
        case Fn::Sin: return "sin";
        case Fn::Cos: return "cos";
        case Fn::Tan: return "tan";
        case Fn::Exp: return "exp";
        case Fn::Log: return "log";
        case Fn::Sqrt: return "sqrt";
        case Fn::Abs: return "abs";
        case Fn::Atan: return "atan";
        case Fn::Sign: return "sign";
    }
    return "?";
}

inline bool lookup_fn(std::string_view name, Fn& out) {
    static constexpr Fn all[] = {Fn::Sin, Fn::Cos, Fn::Tan, Fn::Exp, Fn::Log, Fn::Sqrt, Fn::Abs, Fn::Atan};
    for (Fn f : all)
        if (name == fn_name(f)) {
            out = f;
            return true;
        }
    return false;
}

inline NodePtr num(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Num;
    n->value = v;
    return n;
}
inline NodePtr var(int index) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Var;
    n->var = index;
    return n;
}
inline bool is_num(const NodePtr& n) { return n->op == Op::Num; }
inline bool is_num(const NodePtr& n, double v) { return n->op == Op::Num && n->value == v; }

inline double apply_fn(Fn f, double x) {
    switch (f) {
        case Fn::Sin: return std::sin(x);
        case Fn::Cos: return std::cos(x);
        case Fn::Tan: return std::tan(x);
        case Fn::Exp: return std::exp(x);
        case Fn::Log: return x > 0.0 ? std::log(x) : NAN;
        case Fn::Sqrt: return x >= 0.0 ? std::sqrt(x) : NAN;
        case Fn::Abs: return std::abs(x);
        case Fn::Atan: return std::atan(x);
        case Fn::Sign: return sign(x);
    }
    return NAN;
}

inline double apply_binary(Op op, double x, double y) {
    switch (op) {
        case Op::Add: return x + y;
        case Op::Sub: return x - y;
        case Op::Mul: return x * y;
        case Op::Div: return y != 0.0 ? x / y : NAN;
        case Op::Pow:
            if (x == 0.0 && y < 0.0) return NAN;
            return std::pow(x, y);
        default: return NAN;
    }
}

// Plain constructors: fold only when every operand is a literal. Used by the parser so that
// printing and re-parsing reproduces the same tree.
inline NodePtr make_neg(NodePtr a) {
    if (is_num(a)) return num(-a->value);
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Neg;
    n->a = std::move(a);
    return n;
}
inline NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
    if (is_num(a) && is_num(b)) {
        const double v = apply_binary(op, a->value, b->value);
        if (std::isfinite(v)) return num(v);
    }
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}
inline NodePtr make_call(Fn f, NodePtr a) {
    if (is_num(a)) {
        const double v = apply_fn(f, a->value);
        if (std::isfinite(v)) return num(v);
    }
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Call;
    n->fn = f;
    n->a = std::move(a);
    return n;
}

// Simplifying constructors used by the differentiator: literal folding plus the 0/1 identities.
inline NodePtr s_add(NodePtr a, NodePtr b) {
    if (is_num(a, 0.0)) return b;
    if (is_num(b, 0.0)) return a;
    return make_binary(Op::Add, std::move(a), std::move(b));
}
inline NodePtr s_sub(NodePtr a, NodePtr b) {
    if (is_num(b, 0.0)) return a;
    if (is_num(a, 0.0)) return make_neg(std::move(b));
    return make_binary(Op::Sub, std::move(a), std::move(b));
}
inline NodePtr s_mul(NodePtr a, NodePtr b) {
    if (is_num(a, 0.0) || is_num(b, 0.0)) return num(0.0);
    if (is_num(a, 1.0)) return b;
    if (is_num(b, 1.0)) return a;
    if (is_num(a, -1.0)) return make_neg(std::move(b));
    if (is_num(b, -1.0)) return make_neg(std::move(a));
    return make_binary(Op::Mul, std::move(a), std::move(b));
}
inline NodePtr s_div(NodePtr a, NodePtr b) {
    if (is_num(a, 0.0)) return num(0.0);
    if (is_num(b, 1.0)) return a;
    return make_binary(Op::Div, std::move(a), std::move(b));
}
inline NodePtr s_pow(NodePtr a, NodePtr b) {
    if (is_num(b, 0.0)) return num(1.0);
    if (is_num(b, 1.0)) return a;
    return make_binary(Op::Pow, std::move(a), std::move(b));
}
inline NodePtr s_neg(NodePtr a) {
    if (a->op == Op::Neg) return a->a;
    return make_neg(std::move(a));
}

inline bool depends_on(const NodePtr& n, int v) {
    switch (n->op) {
        case Op::Num: return false;
        case Op::Var: return n->var == v;
        case Op::Neg:
        case Op::Call: return depends_on(n->a, v);
        default: return depends_on(n->a, v) || depends_on(n->b, v);
    }
}

inline NodePtr differentiate(const NodePtr& n, int v) {
    switch (n->op) {
        case Op::Num: return num(0.0);
        case Op::Var: return num(n->var == v ? 1.0 : 0.0);
        case Op::Neg: return s_neg(differentiate(n->a, v));
        case Op::Add: return s_add(differentiate(n->a, v), differentiate(n->b, v));
        case Op::Sub: return s_sub(differentiate(n->a, v), differentiate(n->b, v));
        case Op::Mul:
            return s_add(s_mul(differentiate(n->a, v), n->b), s_mul(n->a, differentiate(n->b, v)));
        case Op::Div: {
            auto da = differentiate(n->a, v), db = differentiate(n->b, v);
            if (is_num(db, 0.0)) return s_div(da, n->b);
            return s_div(s_sub(s_mul(da, n->b), s_mul(n->a, db)), s_pow(n->b, num(2.0)));
        }
        case Op::Pow: {
            const auto& u = n->a;
            const auto& w = n->b;
            auto du = differentiate(u, v);
            if (!depends_on(w, v)) {
                // w u^(w-1) u'
                return s_mul(s_mul(w, s_pow(u, s_sub(w, num(1.0)))), du);
            }
            auto dw = differentiate(w, v);
            // u^w (w' log u + w u'/u)
            return s_mul(n, s_add(s_mul(dw, make_call(Fn::Log, u)), s_div(s_mul(w, du), u)));
        }
        case Op::Call: {
            const auto& u = n->a;
            auto du = differentiate(u, v);
            if (is_num(du, 0.0)) return num(0.0);
            NodePtr outer;
            switch (n->fn) {
                case Fn::Sin: outer = make_call(Fn::Cos, u); break;
                case Fn::Cos: outer = s_neg(make_call(Fn::Sin, u)); break;
                case Fn::Tan: return s_div(du, s_pow(make_call(Fn::Cos, u), num(2.0)));
                case Fn::Exp: outer = n; break;
                case Fn::Log: return s_div(du, u);
                case Fn::Sqrt: return s_div(du, s_mul(num(2.0), n));
                case Fn::Abs: outer = make_call(Fn::Sign, u); break;
                case Fn::Atan: return s_div(du, s_add(num(1.0), s_pow(u, num(2.0))));
                case Fn::Sign: return num(0.0);
            }
            return s_mul(outer, du);
        }
    }
    return num(0.0);
}

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void print(const NodePtr& n, const std::vector<std::string>& vars, std::string& out) {
    switch (n->op) {
        case Op::Num:
            if (n->value < 0.0 || (n->value == 0.0 && std::signbit(n->value)))
                out += "(" + format_number(n->value) + ")";
            else
                out += format_number(n->value);
            return;
        case Op::Var: out += vars[static_cast<std::size_t>(n->var)]; return;
        case Op::Neg:
            out += "(-";
            print(n->a, vars, out);
            out += ")";
            return;
        case Op::Call:
            out += fn_name(n->fn);
            out += "(";
            print(n->a, vars, out);
            out += ")";
            return;
        default: {
            static constexpr char sym[] = {'?', '?', '?', '+', '-', '*', '/', '^'};
            out += "(";
            print(n->a, vars, out);
            out += sym[static_cast<int>(n->op)];
            print(n->b, vars, out);
            out += ")";
            return;
        }
    }
}

inline bool same_structure(const NodePtr& a, const NodePtr& b) {
    if (a->op != b->op) return false;
    switch (a->op) {
        case Op::Num: return a->value == b->value;
        case Op::Var: return a->var == b->var;
        case Op::Neg: return same_structure(a->a, b->a);
        case Op::Call: return a->fn == b->fn && same_structure(a->a, b->a);
        default: return same_structure(a->a, b->a) && same_structure(a->b, b->b);
    }
}

class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& vars) : text_(text), vars_(vars) {}

    NodePtr parse() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
        auto n = parse_expr();
        skip_ws();
        if (pos_ < text_.size())
            throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        return n;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                       text_[pos_] == '\r'))
            ++pos_;
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    NodePtr parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = make_binary(Op::Add, lhs, parse_term());
            else if (accept('-'))
                lhs = make_binary(Op::Sub, lhs, parse_term());
            else
                return lhs;
        }
    }
    NodePtr parse_term() {
        auto lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = make_binary(Op::Mul, lhs, parse_unary());
            else if (accept('/'))
                lhs = make_binary(Op::Div, lhs, parse_unary());
            else
                return lhs;
        }
    }
    NodePtr parse_unary() {
        if (accept('-')) return make_neg(parse_unary());
        if (accept('+')) return parse_unary();
        return parse_power();
    }
    NodePtr parse_power() {
        auto base = parse_primary();
        if (accept('^')) return make_binary(Op::Pow, base, parse_unary());
        return base;
    }
    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto n = parse_expr();
            expect(')');
            return n;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if (is_ident_start(c)) return parse_name();
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }
    static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
    static bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        std::size_t p = pos_;
        while (p < text_.size() && is_digit(text_[p])) ++p;
        if (p < text_.size() && text_[p] == '.') {
            ++p;
            while (p < text_.size() && is_digit(text_[p])) ++p;
        }
        if (p < text_.size() && (text_[p] == 'e' || text_[p] == 'E')) {
            std::size_t q = p + 1;
            if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
            if (q < text_.size() && is_digit(text_[q])) {
                while (q < text_.size() && is_digit(text_[q])) ++q;
                p = q;
            }
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + p, v);
        if (ec != std::errc() || ptr != text_.data() + p) throw ParseError("malformed number", start);
        pos_ = p;
        return num(v);
    }

    NodePtr parse_name() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
        const std::string name(text_.substr(start, pos_ - start));
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i] == name) return var(static_cast<int>(i));
        skip_ws();
        const bool call = pos_ < text_.size() && text_[pos_] == '(';
        Fn f;
        if (lookup_fn(name, f)) {
            if (!call) throw ParseError("expected '(' after function '" + name + "'", pos_);
            ++pos_;
            std::vector<NodePtr> args;
            if (!accept(')')) {
                args.push_back(parse_expr());
                while (accept(',')) args.push_back(parse_expr());
                expect(')');
            }
            if (args.size() != 1)
                throw ArityError(name + " takes 1 argument, got " + std::to_string(args.size()), start);
            return make_call(f, args.front());
        }
        if (!call) {
            if (name == "pi") return num(std::numbers::pi);
            if (name == "e") return num(std::numbers::e);
        }
        throw UnknownIdentifier(name, start);
    }

    std::string_view text_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
};

template <class T>
T evaluate(const NodePtr& n, std::span<const T> values, const std::vector<std::string>& names) {
    using std::abs, std::atan, std::cos, std::exp, std::log, std::pow, std::sin, std::sqrt, std::tan;
    auto fail = [&](const char* what) -> T {
        std::string s;
        print(n, names, s);
        throw EvalDomainError(what, s);
    };
    T r{};
    switch (n->op) {
        case Op::Num: return T(n->value);
        case Op::Var: return values[static_cast<std::size_t>(n->var)];
        case Op::Neg: return -evaluate(n->a, values, names);
        case Op::Add: r = evaluate(n->a, values, names) + evaluate(n->b, values, names); break;
        case Op::Sub: r = evaluate(n->a, values, names) - evaluate(n->b, values, names); break;
        case Op::Mul: r = evaluate(n->a, values, names) * evaluate(n->b, values, names); break;
        case Op::Div: {
            const T den = evaluate(n->b, values, names);
            if (value_of(den) == 0.0) return fail("division by zero");
            r = evaluate(n->a, values, names) / den;
            break;
        }
        case Op::Pow: {
            const T base = evaluate(n->a, values, names);
            const double bv = value_of(base);
            if (is_num(n->b)) {
                const double k = n->b->value;
                if (bv == 0.0 && k < 0.0) return fail("zero to a negative power");
                if (bv < 0.0 && k != std::trunc(k)) return fail("negative base to a fractional power");
                r = pow(base, k);
            } else {
                const T ex = evaluate(n->b, values, names);
                const double ev = value_of(ex);
                if (bv == 0.0 && ev < 0.0) return fail("zero to a negative power");
                if (bv < 0.0 && ev != std::trunc(ev)) return fail("negative base to a fractional power");
                r = pow(base, ex);
            }
            break;
        }
        case Op::Call: {
            const T u = evaluate(n->a, values, names);
            const double uv = value_of(u);
            switch (n->fn) {
                case Fn::Sin: r = sin(u); break;
                case Fn::Cos: r = cos(u); break;
                case Fn::Tan: r = tan(u); break;
                case Fn::Exp: r = exp(u); break;
                case Fn::Log:
                    if (!(uv > 0.0)) return fail("log of a non-positive value");
                    r = log(u);
                    break;
                case Fn::Sqrt:
                    if (!(uv >= 0.0)) return fail("sqrt of a negative value");
                    r = sqrt(u);
                    break;
                case Fn::Abs: r = abs(u); break;
                case Fn::Atan: r = atan(u); break;
                case Fn::Sign: r = T(sign(uv)); break;
            }
            break;
        }
    }
    if (!std::isfinite(value_of(r))) return fail("non-finite result");
    return r;
}

}  // namespace detail

/// Immutable parsed expression over a fixed, ordered list of variable names.
class Expr {
public:
    Expr() : Expr(detail::num(0.0), {}) {}

    static Expr parse(std::string_view text, std::vector<std::string> allowed_vars) {
        auto vars = std::make_shared<const std::vector<std::string>>(std::move(allowed_vars));
        detail::Parser p(text, *vars);
        return Expr(p.parse(), std::move(vars));
    }
    static Expr constant(double v, std::vector<std::string> vars = {}) {
        return Expr(detail::num(v), std::make_shared<const std::vector<std::string>>(std::move(vars)));
    }

    const std::vector<std::string>& variables() const { return *vars_; }
    const NodePtr& root() const { return root_; }

    /// Positional evaluation in the order of `variables()`.
    template <class T>
    T eval(std::span<const T> values) const {
        return detail::evaluate<T>(root_, values, *vars_);
    }
    template <class T>
    T operator()(T a) const {
        const T v[] = {a};
        return eval<T>(std::span<const T>(v, 1));
    }
    template <class T>
    T operator()(T a, T b) const {
        const T v[] = {a, b};
        return eval<T>(std::span<const T>(v, 2));
    }
    double eval(const std::map<std::string, double>& bindings) const {
        std::vector<double> v(vars_->size(), 0.0);
        for (std::size_t i = 0; i < vars_->size(); ++i) {
            auto it = bindings.find((*vars_)[i]);
            if (it == bindings.end()) {
                if (detail::depends_on(root_, static_cast<int>(i)))
                    throw EvalDomainError("unbound variable '" + (*vars_)[i] + "'", str());
                continue;
            }
            v[i] = it->second;
        }
        return eval<double>(std::span<const double>(v));
    }

    Expr diff(std::string_view var) const {
        int idx = -1;
        for (std::size_t i = 0; i < vars_->size(); ++i)
            if ((*vars_)[i] == var) idx = static_cast<int>(i);
        if (idx < 0) return Expr(detail::num(0.0), vars_);
        return Expr(detail::differentiate(root_, idx), vars_);
    }

    /// Fully parenthesised text that re-parses to the same tree.
    std::string str() const {
        std::string s;
        detail::print(root_, *vars_, s);
        return s;
    }

    bool is_zero() const { return detail::is_num(root_, 0.0); }
    bool is_constant() const { return detail::is_num(root_); }
    bool depends_on(std::string_view var) const {
        for (std::size_t i = 0; i < vars_->size(); ++i)
            if ((*vars_)[i] == var) return detail::depends_on(root_, static_cast<int>(i));
        return false;
    }
    bool same_structure(const Expr& other) const { return detail::same_structure(root_, other.root_); }

private:
    Expr(NodePtr root, std::shared_ptr<const std::vector<std::string>> vars)
        : root_(std::move(root)), vars_(std::move(vars)) {}

    NodePtr root_;
    std::shared_ptr<const std::vector<std::string>> vars_;
};

inline Expr parse_expr(std::string_view text, std::vector<std::string> allowed_vars) {
    return Expr::parse(text, std::move(allowed_vars));
}
inline double eval_expr(const Expr& e, const std::map<std::string, double>& bindings) { return e.eval(bindings); }
inline Expr diff_expr(const Expr& e, std::string_view var) { return e.diff(var); }

}  // namespace ermakov
