#pragma once

// Closed-form expressions in the single variable `t`.
//
// Grammar (precedence from loosest to tightest):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | 't' | func '(' expr ')' | 'pow' '(' expr ',' expr ')'
//            | '(' expr ')'
//   func    := 'ln' | 'exp' | 'sqrt'
//
// A minus sign directly in front of a numeric literal (and not followed by
// '^') is folded into the literal, so "t^-0.5" parses as Pow(t, -0.5).

#include "fgmx/error.hpp"

#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace fgmx {

enum class Op { Var, Num, Add, Sub, Mul, Div, Pow, Neg, Ln, Exp, Sqrt };

class Expr {
public:
    struct Node {
        Op op;
        double value = 0.0;
        std::shared_ptr<const Node> lhs;
        std::shared_ptr<const Node> rhs;
    };

    Expr() : Expr(num(0.0)) {}

    static Expr var() { return Expr(std::make_shared<const Node>(Node{Op::Var, 0.0, nullptr, nullptr})); }
    static Expr num(double v) { return Expr(std::make_shared<const Node>(Node{Op::Num, v, nullptr, nullptr})); }
    static Expr unary(Op op, const Expr& a) {
        return Expr(std::make_shared<const Node>(Node{op, 0.0, a.node_, nullptr}));
    }
    static Expr binary(Op op, const Expr& a, const Expr& b) {
        return Expr(std::make_shared<const Node>(Node{op, 0.0, a.node_, b.node_}));
    }

    Op op() const noexcept { return node_->op; }
    double value() const noexcept { return node_->value; }
    Expr lhs() const { return Expr(node_->lhs); }
    Expr rhs() const { return Expr(node_->rhs); }

    bool is_num() const noexcept { return op() == Op::Num; }
    bool is_num(double v) const noexcept { return is_num() && value() == v; }

    /// True when the tree does not reference `t`.
    bool is_constant() const {
        switch (op()) {
        case Op::Var: return false;
        case Op::Num: return true;
        case Op::Neg:
        case Op::Ln:
        case Op::Exp:
        case Op::Sqrt: return lhs().is_constant();
        default: return lhs().is_constant() && rhs().is_constant();
        }
    }

    friend bool operator==(const Expr& a, const Expr& b) {
        if (a.node_ == b.node_) return true;
        if (a.op() != b.op()) return false;
        switch (a.op()) {
        case Op::Var: return true;
        case Op::Num: return a.value() == b.value();
        case Op::Neg:
        case Op::Ln:
        case Op::Exp:
        case Op::Sqrt: return a.lhs() == b.lhs();
        default: return a.lhs() == b.lhs() && a.rhs() == b.rhs();
        }
    }

private:
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

namespace detail {

inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Binding strength used by the printer; higher binds tighter.
inline int precedence(const Expr& e) {
    switch (e.op()) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Num: return std::signbit(e.value()) ? 3 : 5;
    case Op::Pow: return 4;
    default: return 5;
    }
}

inline void print_to(const Expr& e, std::string& out);

inline void print_child(const Expr& e, bool parens, std::string& out) {
    if (parens) out += '(';
    print_to(e, out);
    if (parens) out += ')';
}

inline void print_to(const Expr& e, std::string& out) {
    switch (e.op()) {
    case Op::Var: out += 't'; return;
    case Op::Num: out += format_number(e.value()); return;
    case Op::Neg:
        out += '-';
        print_child(e.lhs(), precedence(e.lhs()) < 3, out);
        return;
    case Op::Ln:
    case Op::Exp:
    case Op::Sqrt:
        out += e.op() == Op::Ln ? "ln(" : e.op() == Op::Exp ? "exp(" : "sqrt(";
        print_to(e.lhs(), out);
        out += ')';
        return;
    case Op::Pow:
        print_child(e.lhs(), precedence(e.lhs()) <= 4, out);
        out += '^';
        print_child(e.rhs(), precedence(e.rhs()) < 3, out);
        return;
    default: break;
    }
    const int p = precedence(e);
    print_child(e.lhs(), precedence(e.lhs()) < p, out);
    switch (e.op()) {
    case Op::Add: out += '+'; break;
    case Op::Sub: out += '-'; break;
    case Op::Mul: out += '*'; break;
    default: out += '/'; break;
    }
    print_child(e.rhs(), precedence(e.rhs()) <= p, out);
}

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Expr parse() {
        skip_ws();
        if (pos_ == src_.size()) fail("empty expression", {"expression"});
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected trailing input", {"+", "-", "*", "/", "^", "end of input"});
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg, std::vector<std::string> expected) const {
        throw ParseError(msg + " at offset " + std::to_string(pos_), pos_, std::move(expected));
    }

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                                      src_[pos_] == '\r'))
            ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'", {std::string(1, c)});
    }

    bool at_number() {
        skip_ws();
        if (pos_ >= src_.size()) return false;
        const char c = src_[pos_];
        return (c >= '0' && c <= '9') || c == '.';
    }

    double read_number() {
        skip_ws();
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t n = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            n += digits();
        }
        if (n == 0) {
            pos_ = start;
            fail("malformed number", {"number"});
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
            if (look < src_.size() && src_[look] >= '0' && src_[look] <= '9') {
                pos_ = look;
                digits();
            }
        }
        double v = 0.0;
        auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != src_.data() + pos_) {
            pos_ = start;
            fail("malformed number", {"number"});
        }
        return v;
    }

    // Number literal not followed by '^'.
    bool at_foldable_literal() {
        if (!at_number()) return false;
        const std::size_t save = pos_;
        try {
            read_number();
        } catch (const ParseError&) {
            pos_ = save;
            return false;
        }
        skip_ws();
        const bool pow_follows = pos_ < src_.size() && src_[pos_] == '^';
        pos_ = save;
        return !pow_follows;
    }

    Expr parse_expr() {
        Expr lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = Expr::binary(Op::Add, lhs, parse_term());
            else if (accept('-'))
                lhs = Expr::binary(Op::Sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    Expr parse_term() {
        Expr lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = Expr::binary(Op::Mul, lhs, parse_unary());
            else if (accept('/'))
                lhs = Expr::binary(Op::Div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    Expr parse_unary() {
        if (accept('-')) {
            if (at_foldable_literal()) return Expr::num(-read_number());
            return Expr::unary(Op::Neg, parse_unary());
        }
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (accept('^')) return Expr::binary(Op::Pow, base, parse_unary());
        return base;
    }

    Expr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input", {"number", "t", "(", "-", "ln", "exp", "sqrt", "pow"});
        if (at_number()) return Expr::num(read_number());
        if (accept('(')) {
            Expr e = parse_expr();
            expect(')');
            return e;
        }
        const char c = src_[pos_];
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < src_.size() && ((src_[pos_] >= 'a' && src_[pos_] <= 'z') ||
                                          (src_[pos_] >= 'A' && src_[pos_] <= 'Z') ||
                                          (src_[pos_] >= '0' && src_[pos_] <= '9') || src_[pos_] == '_'))
                ++pos_;
            const std::string_view id = src_.substr(start, pos_ - start);
            if (id == "t") return Expr::var();
            if (id == "ln" || id == "exp" || id == "sqrt") {
                expect('(');
                Expr arg = parse_expr();
                expect(')');
                return Expr::unary(id == "ln" ? Op::Ln : id == "exp" ? Op::Exp : Op::Sqrt, arg);
            }
            if (id == "pow") {
                expect('(');
                Expr a = parse_expr();
                expect(',');
                Expr b = parse_expr();
                expect(')');
                return Expr::binary(Op::Pow, a, b);
            }
            pos_ = start;
            fail("unknown identifier `" + std::string(id) + "`", {"t", "ln", "exp", "sqrt", "pow"});
        }
        fail(std::string("unexpected character '") + c + "'", {"number", "t", "(", "-", "ln", "exp", "sqrt", "pow"});
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Canonical text form; `parse(to_string(e)) == e`.
inline std::string to_string(const Expr& e) {
    std::string out;
    detail::print_to(e, out);
    return out;
}

inline Expr parse(std::string_view src) { return detail::Parser(src).parse(); }

namespace detail {

inline double eval_node(const Expr& e, double t) {
    auto domain = [&](const char* what) -> double { throw DomainError(what, to_string(e)); };
    switch (e.op()) {
    case Op::Var: return t;
    case Op::Num: return e.value();
    case Op::Neg: return -eval_node(e.lhs(), t);
    case Op::Add: return eval_node(e.lhs(), t) + eval_node(e.rhs(), t);
    case Op::Sub: return eval_node(e.lhs(), t) - eval_node(e.rhs(), t);
    case Op::Mul: return eval_node(e.lhs(), t) * eval_node(e.rhs(), t);
    case Op::Div: {
        const double a = eval_node(e.lhs(), t);
        const double b = eval_node(e.rhs(), t);
        if (b == 0.0) return domain("division by zero");
        return a / b;
    }
    case Op::Pow: {
        const double a = eval_node(e.lhs(), t);
        const double b = eval_node(e.rhs(), t);
        if (a == 0.0 && b < 0.0) return domain("zero raised to a negative power");
        const double r = std::pow(a, b);
        if (std::isnan(r) && !std::isnan(a) && !std::isnan(b)) return domain("negative base with non-integer exponent");
        return r;
    }
    case Op::Ln: {
        const double a = eval_node(e.lhs(), t);
        if (!(a > 0.0)) return domain("logarithm of a non-positive value");
        return std::log(a);
    }
    case Op::Exp: return std::exp(eval_node(e.lhs(), t));
    case Op::Sqrt: {
        const double a = eval_node(e.lhs(), t);
        if (a < 0.0) return domain("square root of a negative value");
        return std::sqrt(a);
    }
    }
    return 0.0;
}

} // namespace detail

/// Evaluates `e` at `t`. Throws DomainError naming the offending subexpression.
inline double eval(const Expr& e, double t) { return detail::eval_node(e, t); }

/// Like eval, but reports a domain error as an empty optional.
inline std::optional<double> try_eval(const Expr& e, double t) noexcept {
    try {
        return detail::eval_node(e, t);
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

namespace simplify {

inline bool foldable(double v) { return std::isfinite(v); }

inline Expr neg(const Expr& a) {
    if (a.is_num()) return Expr::num(-a.value());
    if (a.op() == Op::Neg) return a.lhs();
    return Expr::unary(Op::Neg, a);
}

inline Expr add(const Expr& a, const Expr& b) {
    if (a.is_num() && b.is_num() && foldable(a.value() + b.value())) return Expr::num(a.value() + b.value());
    if (a.is_num(0.0)) return b;
    if (b.is_num(0.0)) return a;
    return Expr::binary(Op::Add, a, b);
}

inline Expr sub(const Expr& a, const Expr& b) {
    if (a.is_num() && b.is_num() && foldable(a.value() - b.value())) return Expr::num(a.value() - b.value());
    if (b.is_num(0.0)) return a;
    if (a.is_num(0.0)) return neg(b);
    return Expr::binary(Op::Sub, a, b);
}

inline Expr mul(const Expr& a, const Expr& b) {
    if (a.is_num() && b.is_num() && foldable(a.value() * b.value())) return Expr::num(a.value() * b.value());
    if (a.is_num(0.0) || b.is_num(0.0)) return Expr::num(0.0);
    if (a.is_num(1.0)) return b;
    if (b.is_num(1.0)) return a;
    if (a.is_num(-1.0)) return neg(b);
    if (b.is_num(-1.0)) return neg(a);
    return Expr::binary(Op::Mul, a, b);
}

inline Expr div(const Expr& a, const Expr& b) {
    if (a.is_num() && b.is_num() && b.value() != 0.0 && foldable(a.value() / b.value()))
        return Expr::num(a.value() / b.value());
    if (a.is_num(0.0)) return Expr::num(0.0);
    if (b.is_num(1.0)) return a;
    return Expr::binary(Op::Div, a, b);
}

inline Expr pow(const Expr& a, const Expr& b) {
    if (b.is_num(1.0)) return a;
    if (b.is_num(0.0)) return Expr::num(1.0);
    if (a.is_num() && b.is_num() && !(a.value() == 0.0 && b.value() < 0.0)) {
        const double r = std::pow(a.value(), b.value());
        if (foldable(r)) return Expr::num(r);
    }
    return Expr::binary(Op::Pow, a, b);
}

} // namespace simplify

/// Symbolic d/dt with constant folding and identity elimination.
inline Expr differentiate(const Expr& e) {
    namespace s = simplify;
    switch (e.op()) {
    case Op::Var: return Expr::num(1.0);
    case Op::Num: return Expr::num(0.0);
    case Op::Neg: return s::neg(differentiate(e.lhs()));
    case Op::Add: return s::add(differentiate(e.lhs()), differentiate(e.rhs()));
    case Op::Sub: return s::sub(differentiate(e.lhs()), differentiate(e.rhs()));
    case Op::Mul: {
        const Expr a = e.lhs(), b = e.rhs();
        return s::add(s::mul(differentiate(a), b), s::mul(a, differentiate(b)));
    }
    case Op::Div: {
        const Expr a = e.lhs(), b = e.rhs();
        const Expr num = s::sub(s::mul(differentiate(a), b), s::mul(a, differentiate(b)));
        return s::div(num, s::pow(b, Expr::num(2.0)));
    }
    case Op::Pow: {
        const Expr a = e.lhs(), b = e.rhs();
        if (b.is_constant()) {
            // d(a^c) = c a^(c-1) a'
            const Expr lowered = b.is_num() ? Expr::num(b.value() - 1.0) : s::sub(b, Expr::num(1.0));
            return s::mul(s::mul(b, s::pow(a, lowered)), differentiate(a));
        }
        if (a.is_constant()) return s::mul(s::mul(e, Expr::unary(Op::Ln, a)), differentiate(b));
        // d(a^b) = a^b (b' ln a + b a'/a)
        const Expr inner = s::add(s::mul(differentiate(b), Expr::unary(Op::Ln, a)),
                                  s::div(s::mul(b, differentiate(a)), a));
        return s::mul(e, inner);
    }
    case Op::Ln: return s::div(differentiate(e.lhs()), e.lhs());
    case Op::Exp: return s::mul(e, differentiate(e.lhs()));
    case Op::Sqrt: return s::div(differentiate(e.lhs()), s::mul(Expr::num(2.0), e));
    }
    return Expr::num(0.0);
}

} // namespace fgmx
