#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ermakov/expr.hpp"

using namespace ermakov;
using ermakov::Op;

TEST(Parse, PowerNode) {
    const auto e = parse_expr("lambda^2", {"lambda"});
    EXPECT_EQ(e.root()->op, Op::Pow);
    EXPECT_EQ(e.root()->a->op, Op::Var);
}

TEST(Parse, ProductNode) {
    const auto e = parse_expr("sin(t)*R", {"R", "t"});
    EXPECT_EQ(e.root()->op, Op::Mul);
    EXPECT_EQ(e.root()->a->op, Op::Call);
}

TEST(Parse, UnbalancedParenOffset) {
    try {
        parse_expr("1/(s", {"s"});
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 4u);
    }
}

TEST(Parse, Precedence) {
    // ^ binds tighter than unary minus and is right-associative.
    EXPECT_DOUBLE_EQ(eval_expr(parse_expr("-2^2", {}), {}), -4.0);
    EXPECT_DOUBLE_EQ(eval_expr(parse_expr("2^3^2", {}), {}), 512.0);
    EXPECT_DOUBLE_EQ(eval_expr(parse_expr("1 - 2 - 3", {}), {}), -4.0);
    EXPECT_DOUBLE_EQ(eval_expr(parse_expr("8/4/2", {}), {}), 1.0);
    EXPECT_DOUBLE_EQ(eval_expr(parse_expr("2 + 3*4", {}), {}), 14.0);
    EXPECT_DOUBLE_EQ(eval_expr(parse_expr("(2 + 3)*4", {}), {}), 20.0);
    EXPECT_DOUBLE_EQ(eval_expr(parse_expr("2*-3", {}), {}), -6.0);
    EXPECT_DOUBLE_EQ(eval_expr(parse_expr("1.5e2", {}), {}), 150.0);
}

TEST(Parse, Errors) {
    EXPECT_THROW(parse_expr("x + 1", {"s"}), UnknownIdentifier);
    EXPECT_THROW(parse_expr("foo(1)", {"s"}), UnknownIdentifier);
    EXPECT_THROW(parse_expr("sin(1, 2)", {}), ArityError);
    EXPECT_THROW(parse_expr("", {}), ParseError);
    EXPECT_THROW(parse_expr("1 +", {}), ParseError);
    EXPECT_THROW(parse_expr("2 3", {}), ParseError);
    EXPECT_THROW(parse_expr("sin", {}), ParseError);
    try {
        parse_expr("s + q", {"s"});
        FAIL();
    } catch (const UnknownIdentifier& e) {
        EXPECT_EQ(e.offset(), 4u);
        EXPECT_EQ(e.name(), "q");
    }
}

TEST(Eval, Examples) {
    EXPECT_DOUBLE_EQ(eval_expr(parse_expr("lambda^2", {"lambda"}), {{"lambda", 3.0}}), 9.0);
    EXPECT_THROW(eval_expr(parse_expr("log(s)", {"s"}), {{"s", -1.0}}), EvalDomainError);
    EXPECT_DOUBLE_EQ(eval_expr(parse_expr("exp(0)*pi", {}), {}), std::numbers::pi);
    EXPECT_DOUBLE_EQ(eval_expr(parse_expr("e", {}), {}), std::numbers::e);
}

TEST(Eval, DomainErrorsCarrySubexpression) {
    const auto e = parse_expr("1 + 1/(s - 2)", {"s"});
    try {
        eval_expr(e, {{"s", 2.0}});
        FAIL();
    } catch (const EvalDomainError& err) {
        EXPECT_NE(err.subexpression().find("s"), std::string::npos);
    }
    EXPECT_THROW(eval_expr(parse_expr("s^(-1)", {"s"}), {{"s", 0.0}}), EvalDomainError);
    EXPECT_THROW(eval_expr(parse_expr("sqrt(s)", {"s"}), {{"s", -1.0}}), EvalDomainError);
    EXPECT_THROW(eval_expr(parse_expr("s^0.5", {"s"}), {{"s", -1.0}}), EvalDomainError);
    EXPECT_THROW(eval_expr(parse_expr("log(0*s)", {"s"}), {{"s", 1.0}}), EvalDomainError);
    EXPECT_THROW(eval_expr(parse_expr("s", {"s"}), {}), EvalDomainError);
}

TEST(Diff, Examples) {
    const auto d1 = diff_expr(parse_expr("lambda^2", {"lambda"}), "lambda");
    EXPECT_DOUBLE_EQ(eval_expr(d1, {{"lambda", 1.7}}), 3.4);
    const auto d2 = diff_expr(parse_expr("sin(t)", {"t"}), "t");
    EXPECT_TRUE(d2.same_structure(parse_expr("cos(t)", {"t"})));
    const auto d3 = diff_expr(parse_expr("1/s", {"s"}), "s");
    EXPECT_DOUBLE_EQ(eval_expr(d3, {{"s", 2.0}}), -0.25);
}

TEST(Diff, AbsUsesSignConvention) {
    const auto d = diff_expr(parse_expr("abs(s)", {"s"}), "s");
    EXPECT_DOUBLE_EQ(eval_expr(d, {{"s", -3.0}}), -1.0);
    EXPECT_DOUBLE_EQ(eval_expr(d, {{"s", 0.0}}), 0.0);
}

TEST(Diff, ConstantsAndUnrelatedVariables) {
    EXPECT_TRUE(diff_expr(parse_expr("3*t", {"R", "t"}), "R").is_zero());
    EXPECT_TRUE(diff_expr(parse_expr("0*R", {"R"}), "R").is_zero());
}

namespace {
// Central difference with h = cbrt(eps) * max(1, |x|).
double central(const Expr& e, std::vector<double> at, std::size_t i) {
    const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(at[i]));
    auto a = at, b = at;
    a[i] += h;
    b[i] -= h;
    return (e.eval<double>(a) - e.eval<double>(b)) / (2 * h);
}
}  // namespace

TEST(Diff, AgreesWithFiniteDifferencesOnSmoothCorpus) {
    const std::vector<std::string> corpus = {
        "sin(R)*cos(t)",        "exp(-R^2/2)*t",       "R^3 - 2*R*t + t^2",      "log(1 + R^2)/(1 + t^2)",
        "sqrt(1 + R^2 + t^2)",  "atan(R*t)",           "tan(R/4)",               "(R + t)^2.5",
        "R^t",                  "1/(R^2 + 1) - t/R",   "exp(sin(R*t))",          "abs(R - 10)*t",
        "R/(2 + cos(t))",       "sin(R)^2 + cos(R)^2", "-R^-2 + t",              "pi*R*e^t",
        "log(R)*sqrt(t + 4)",   "(R^2 - t)/(R + 3)",   "atan(R)^3 - tan(t/5)",   "2^R * 3^(-t)",
    };
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    ASSERT_EQ(corpus.size(), 20u);
    for (const auto& text : corpus) {
        const auto e = parse_expr(text, {"R", "t"});
        const auto dR = e.diff("R"), dt = e.diff("t");
        for (int k = 0; k < 50; ++k) {
            const std::vector<double> at = {u(rng), u(rng)};
            const double vR = dR.eval<double>(at), vt = dt.eval<double>(at);
            EXPECT_LE(std::abs(vR - central(e, at, 0)), 1e-6 * std::max(1.0, std::abs(vR))) << text;
            EXPECT_LE(std::abs(vt - central(e, at, 1)), 1e-6 * std::max(1.0, std::abs(vt))) << text;
        }
    }
}

TEST(Print, RoundTripIsStructuralIdentity) {
    const std::vector<std::string> corpus = {"lambda^2",        "-lambda + 3",       "sin(lambda)*lambda^-1.5",
                                             "2^3^lambda",      "(1 - lambda)/(2*lambda)", "abs(-lambda)",
                                             "1e-7*lambda",     "exp(log(lambda))", "-(-lambda)",
                                             "pi*lambda - e",   "atan(lambda)^(1/3)", "0.1 + 0.2*lambda"};
    for (const auto& text : corpus) {
        const auto e = parse_expr(text, {"lambda"});
        const auto again = parse_expr(e.str(), {"lambda"});
        EXPECT_TRUE(e.same_structure(again)) << text << " -> " << e.str();
        EXPECT_EQ(again.str(), e.str());
    }
}

TEST(Expr, ConstantFoldingDetectsZero) {
    EXPECT_TRUE(parse_expr("0", {"lambda"}).is_zero());
    EXPECT_TRUE(parse_expr("2 - 2", {"lambda"}).is_zero());
    EXPECT_TRUE(parse_expr("0*3", {"lambda"}).is_zero());
    EXPECT_FALSE(parse_expr("lambda - lambda", {"lambda"}).is_zero());
    EXPECT_TRUE(parse_expr("3", {"lambda"}).is_constant());
}
