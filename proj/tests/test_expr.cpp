#include "fgmx/expr.hpp"
#include "fgmx/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fgmx;

namespace {

Expr V() { return Expr::var(); }
Expr N(double v) { return Expr::num(v); }
Expr B(Op op, const Expr& a, const Expr& b) { return Expr::binary(op, a, b); }
Expr U(Op op, const Expr& a) { return Expr::unary(op, a); }

double central_difference(const Expr& e, double t, double h) { return (eval(e, t + h) - eval(e, t - h)) / (2 * h); }

// Random trees in canonical form: negation never wraps a bare literal,
// since "-2" denotes the literal -2.
Expr random_expr(CounterRng& rng, int depth) {
    const double r = rng.next();
    if (depth == 0 || r < 0.25) {
        if (rng.next() < 0.5) return V();
        const double lit = std::round(rng.uniform(-9.0, 9.0) * 4.0) / 4.0;
        return N(lit);
    }
    if (r < 0.35) {
        Expr a = random_expr(rng, depth - 1);
        if (a.is_num()) a = B(Op::Add, a, V());
        return U(Op::Neg, a);
    }
    if (r < 0.45) {
        const Op fns[] = {Op::Ln, Op::Exp, Op::Sqrt};
        return U(fns[rng.next_bits() % 3], random_expr(rng, depth - 1));
    }
    const Op ops[] = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow};
    return B(ops[rng.next_bits() % 5], random_expr(rng, depth - 1), random_expr(rng, depth - 1));
}

} // namespace

TEST(Parse, ProductOfVariableAndComplement) {
    EXPECT_EQ(parse("t*(1-t)"), B(Op::Mul, V(), B(Op::Sub, N(1), V())));
}

TEST(Parse, NegativeExponentLiteral) {
    EXPECT_EQ(parse("t^-0.5 - 1"), B(Op::Sub, B(Op::Pow, V(), N(-0.5)), N(1)));
}

TEST(Parse, UnknownIdentifierReportsOffset) {
    try {
        parse("u*(1-u)");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 0u);
        EXPECT_NE(std::string(e.what()).find("unknown identifier `u`"), std::string::npos);
    }
    try {
        parse("t + foo(t)");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 4u);
    }
}

TEST(Parse, SyntaxErrorsCarryExpectedTokens) {
    for (const char* bad : {"", "t+", "(t", "t)", "t**2", "2..3", "sqrt t", "pow(t)"}) {
        try {
            parse(bad);
            FAIL() << "accepted `" << bad << "`";
        } catch (const ParseError& e) {
            EXPECT_LE(e.offset(), std::string(bad).size()) << bad;
            EXPECT_FALSE(e.expected().empty()) << bad;
        }
    }
}

TEST(Parse, PrecedenceAndAssociativity) {
    EXPECT_DOUBLE_EQ(eval(parse("2^3^2"), 0), 512.0);
    EXPECT_DOUBLE_EQ(eval(parse("-2^2"), 0), -4.0);
    EXPECT_DOUBLE_EQ(eval(parse("1-2-3"), 0), -4.0);
    EXPECT_DOUBLE_EQ(eval(parse("8/4/2"), 0), 1.0);
    EXPECT_DOUBLE_EQ(eval(parse("2*3+4*5"), 0), 26.0);
    EXPECT_DOUBLE_EQ(eval(parse("pow(t, 2) + sqrt(t)"), 4.0), 18.0);
    EXPECT_DOUBLE_EQ(eval(parse("exp(ln(t))"), 3.0), 3.0);
    EXPECT_DOUBLE_EQ(eval(parse("1.5e1"), 0), 15.0);
}

TEST(Eval, Examples) {
    EXPECT_DOUBLE_EQ(eval(parse("t*(1-t)"), 0.5), 0.25);
    EXPECT_DOUBLE_EQ(eval(parse("t^-0.5 - 1"), 0.25), 1.0);
}

TEST(Eval, DomainErrorsNameTheSubexpression) {
    try {
        eval(parse("1 + ln(t)"), 0.0);
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_EQ(e.where(), "ln(t)");
    }
    EXPECT_THROW(eval(parse("t^-1"), 0.0), DomainError);
    EXPECT_THROW(eval(parse("sqrt(t)"), -1.0), DomainError);
    EXPECT_THROW(eval(parse("1/t"), 0.0), DomainError);
    EXPECT_FALSE(try_eval(parse("ln(t)"), -2.0).has_value());
    EXPECT_TRUE(try_eval(parse("ln(t)"), 2.0).has_value());
}

TEST(Differentiate, PowerRulePrintsCompactly) {
    EXPECT_EQ(to_string(differentiate(parse("t^-0.5-1"))), "-0.5*t^-1.5");
}

TEST(Differentiate, ParabolaMatchesLine) {
    const Expr d = differentiate(parse("t*(1-t)"));
    for (double t : {0.0, 0.1, 0.25, 0.5, 0.9, 1.0}) EXPECT_NEAR(eval(d, t), 1.0 - 2.0 * t, 1e-15);
}

TEST(Differentiate, ExpAgreesWithCentralDifference) {
    const Expr e = parse("exp(t)");
    EXPECT_NEAR(eval(differentiate(e), 0.3), central_difference(e, 0.3, 1e-5), 1e-9);
}

TEST(Differentiate, GeneralPowerAndFunctions) {
    struct Case {
        const char* src;
        double (*exact)(double);
    };
    const Case cases[] = {
        {"t^t", [](double t) { return std::pow(t, t) * (std::log(t) + 1.0); }},
        {"2^t", [](double t) { return std::pow(2.0, t) * std::log(2.0); }},
        {"sqrt(1+t^2)", [](double t) { return t / std::sqrt(1 + t * t); }},
        {"ln(1+t)/t", [](double t) { return (t / (1 + t) - std::log(1 + t)) / (t * t); }},
        {"-exp(-t)", [](double t) { return std::exp(-t); }},
    };
    for (const auto& c : cases)
        for (double t : {0.2, 0.5, 0.8}) EXPECT_NEAR(eval(differentiate(parse(c.src)), t), c.exact(t), 1e-13) << c.src;
}

TEST(Simplify, FoldsConstantsAndIdentities) {
    EXPECT_EQ(simplify::mul(N(1), V()), V());
    EXPECT_EQ(simplify::mul(N(0), V()), N(0));
    EXPECT_EQ(simplify::add(V(), N(0)), V());
    EXPECT_EQ(simplify::pow(V(), N(1)), V());
    EXPECT_EQ(simplify::add(N(2), N(3)), N(5));
    EXPECT_EQ(simplify::neg(N(2)), N(-2));
    // 1/0 is not folded
    EXPECT_FALSE(simplify::div(N(1), N(0)).is_num());
}

TEST(Property, PrintParseRoundTripOnRandomTrees) {
    CounterRng rng(20240611);
    for (int i = 0; i < 3000; ++i) {
        const Expr e = random_expr(rng, 6);
        const std::string text = to_string(e);
        Expr back;
        ASSERT_NO_THROW(back = parse(text)) << text;
        ASSERT_EQ(back, e) << text << " reprinted as " << to_string(back);
    }
}

TEST(Property, DerivativeMatchesCentralDifferenceOnRandomTrees) {
    CounterRng rng(77);
    int compared = 0;
    for (int i = 0; i < 400; ++i) {
        const Expr e = random_expr(rng, 4);
        const Expr d = differentiate(e);
        for (int k = 0; k < 100; ++k) {
            const double t = rng.uniform(0.01, 0.99);
            const double h = 1e-5;
            const auto f0 = try_eval(e, t), fm = try_eval(e, t - h), fp = try_eval(e, t + h);
            const auto dv = try_eval(d, t);
            if (!f0 || !fm || !fp || !dv) continue;
            if (!std::isfinite(*fm) || !std::isfinite(*fp) || std::abs(*f0) > 1e6 || std::abs(*dv) > 1e6) continue;
            // skip points where curvature makes O(h^2) too coarse to judge
            const double fd = (*fp - *fm) / (2 * h);
            const double fd_half = (eval(e, t + h / 2) - eval(e, t - h / 2)) / h;
            if (std::abs(fd - fd_half) > 1e-7 * std::max(1.0, std::abs(fd))) continue;
            EXPECT_NEAR(*dv, fd, 1e-6 * std::max(1.0, std::abs(fd))) << to_string(e) << " at t=" << t;
            ++compared;
        }
    }
    EXPECT_GT(compared, 10000);
}
