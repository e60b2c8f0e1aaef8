#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include "ermakov/quadrature.hpp"

using namespace ermakov;

TEST(Adaptive, Polynomial) {
    const auto r = integrate_adaptive([](double x) { return 3 * x * x; }, 0.0, 2.0);
    EXPECT_NEAR(r.value, 8.0, 1e-13);
}

TEST(Adaptive, ReversedInterval) {
    const auto r = integrate_adaptive([](double x) { return std::exp(x); }, 1.0, 0.0);
    EXPECT_NEAR(r.value, 1.0 - std::numbers::e, 1e-13);
}

TEST(Adaptive, EndpointSingularity) {
    // integral of 1/sqrt(x) over [0, 1] is 2
    const auto r = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, {1e-10, 1e-10, 5000});
    EXPECT_NEAR(r.value, 2.0, 1e-9);
}

TEST(Adaptive, FailureWhenSubdivisionsExhausted) {
    EXPECT_THROW(integrate_adaptive([](double x) { return std::sin(1.0 / x); }, 1e-8, 1.0, {1e-14, 1e-14, 10}),
                 QuadratureFailure);
}

TEST(Antiderivative, Examples) {
    EXPECT_NEAR(antiderivative(parse_expr("lambda", {"lambda"}), 1.0, 2.0), 1.5, 1e-12);
    for (double u : {-3.0, 0.0, 0.5, 7.25})
        EXPECT_NEAR(antiderivative(parse_expr("1", {"lambda"}), 1.0, u), u - 1.0, 1e-12);
    EXPECT_NEAR(antiderivative(parse_expr("sin(lambda)", {"lambda"}), 0.0, std::numbers::pi), 2.0, 1e-12);
}

TEST(Antiderivative, ExactZeroAtLowerLimit) {
    Antiderivative F(parse_expr("exp(lambda)*cos(lambda)", {"lambda"}), 0.3);
    EXPECT_EQ(F(0.3), 0.0);
}

TEST(Antiderivative, ClosedFormsOverWideRange) {
    Antiderivative F(parse_expr("1/(1 + lambda^2)", {"lambda"}), 1.0);
    for (double u = -40; u <= 40; u += 0.731) EXPECT_NEAR(F(u), std::atan(u) - std::atan(1.0), 1e-12) << u;
}

TEST(Antiderivative, DerivativeIsIntegrand) {
    const auto f = parse_expr("lambda*exp(-lambda/3)", {"lambda"});
    Antiderivative F(f, 1.0);
    for (double u : {0.2, 1.7, 4.4, 9.0}) {
        const double h = 1e-4;
        EXPECT_NEAR((F(u + h) - F(u - h)) / (2 * h), f(u), 1e-7);
        const Dual d = F(Dual(u, 1.0));
        EXPECT_DOUBLE_EQ(d.d, f(u));
    }
}

TEST(Antiderivative, Additivity) {
    const auto f = parse_expr("sqrt(1 + lambda^2)", {"lambda"});
    Antiderivative F(f, 1.0);
    for (auto [a, b] : {std::pair{0.3, 2.9}, std::pair{-2.0, 5.5}, std::pair{3.1, 3.2}}) {
        const double direct = integrate_expr(f, a, b);
        EXPECT_NEAR(F(a) + direct, F(b), 2e-12 * std::max(1.0, std::abs(F(b))));
    }
}

TEST(Antiderivative, MemoisesNodes) {
    Antiderivative F(parse_expr("cos(lambda)", {"lambda"}), 1.0);
    F(3.0);
    const auto n = F.memo_size();
    for (double u = 2.0; u < 3.0; u += 0.01) F(u);
    EXPECT_EQ(F.memo_size(), n);
}

TEST(Antiderivative, ConcurrentQueriesMatchSerial) {
    const auto f = parse_expr("1/(2 + sin(lambda))", {"lambda"});
    Antiderivative shared(f, 1.0);
    std::vector<double> points;
    for (int i = 0; i < 400; ++i) points.push_back(-30.0 + 0.15 * i);
    std::vector<double> serial;
    {
        Antiderivative fresh(f, 1.0);
        for (double u : points) serial.push_back(fresh(u));
    }
    std::vector<double> got(points.size());
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = static_cast<std::size_t>(t); i < points.size(); i += 4) got[i] = shared(points[i]);
        });
    for (auto& th : pool) th.join();
    for (std::size_t i = 0; i < points.size(); ++i) EXPECT_NEAR(got[i], serial[i], 1e-12);
}

TEST(Antiderivative, DomainErrorPropagates) {
    Antiderivative F(parse_expr("log(lambda)", {"lambda"}), 1.0);
    EXPECT_THROW(F(-1.0), EvalDomainError);
}
