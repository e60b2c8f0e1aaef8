#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ermakov/fixtures.hpp"
#include "ermakov/geometry.hpp"

using namespace ermakov;

namespace {
constexpr double pi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }
}  // namespace

TEST(Kappa, Examples) {
    EXPECT_EQ(kappa({1, 0, 1}), 1.0);
    EXPECT_EQ(kappa({0, 1, 0}), -1.0);
    EXPECT_EQ(kappa({2, 1, 1}), 1.0);
}

TEST(PsiSq, Examples) {
    EXPECT_DOUBLE_EQ(psi_sq(0.7, {1, 0, 1}), 1.0);
    EXPECT_DOUBLE_EQ(psi_sq(0.0, {4, 1, 1}), 0.25);
    EXPECT_NEAR(psi_sq(pi / 2, {4, 1, 1}), 1.0, 1e-15);
}

TEST(PsiSq, DegenerateAlongNullRay) {
    // A = C = 0, B = 1 vanishes along theta = 0.
    EXPECT_THROW(psi_sq(0.0, {0, 1, 0}), DegenerateDirection);
}

TEST(ToPolar, IdentityExamples) {
    auto p = to_polar({0, 1, 0, 0, 1}, {1, 0, 1});
    EXPECT_DOUBLE_EQ(p.R, 1.0);
    EXPECT_DOUBLE_EQ(p.theta, 0.0);
    EXPECT_DOUBLE_EQ(p.Rdot, 0.0);
    EXPECT_DOUBLE_EQ(p.thetadot, 1.0);

    p = to_polar({0, 1, 1, 0, 0}, {1, 0, 1});
    EXPECT_DOUBLE_EQ(p.R, std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(p.theta, pi / 4);
    EXPECT_DOUBLE_EQ(p.Rdot, 0.0);
    EXPECT_DOUBLE_EQ(p.thetadot, 0.0);
}

TEST(ToPolar, SkewFormAgainstFiniteDifferences) {
    // Straight-line motion q(t) = q0 + t v; differentiate R(t), theta(t) numerically.
    const QuadraticForm f{2, 0.5, 1};
    const double x0 = 1, y0 = 1, vx = 0.3, vy = -0.1;
    auto R = [&](double t) {
        const double x = x0 + t * vx, y = y0 + t * vy;
        return std::sqrt(2 * x * x + 2 * 0.5 * x * y + y * y);
    };
    auto th = [&](double t) { return std::atan2(y0 + t * vy, x0 + t * vx); };
    const double h = 1e-5;
    const auto p = to_polar({0, x0, y0, vx, vy}, f);
    EXPECT_NEAR(p.R, 2.0, 1e-15);
    EXPECT_NEAR(p.Rdot, (R(h) - R(-h)) / (2 * h), 1e-9);
    EXPECT_NEAR(p.Rdot, 0.3, 1e-15);
    EXPECT_NEAR(p.thetadot, (th(h) - th(-h)) / (2 * h), 1e-9);
    EXPECT_NEAR(p.thetadot, -0.2, 1e-15);
}

TEST(ToPolar, Errors) {
    EXPECT_THROW(to_polar({0, 0, 0, 1, 1}, {1, 0, 1}), DegenerateDirection);
    // Outside the cone R^2 > 0 of the indefinite form 2xy.
    EXPECT_THROW(to_polar({0, 1, -1, 0, 0}, {0, 1, 0}), DegenerateDirection);
}

TEST(FromPolar, IdentityExample) {
    const auto s = from_polar({0, 1, 0, 0, 1}, {1, 0, 1});
    EXPECT_DOUBLE_EQ(s.x, 1.0);
    EXPECT_DOUBLE_EQ(s.y, 0.0);
    EXPECT_DOUBLE_EQ(s.xdot, 0.0);
    EXPECT_DOUBLE_EQ(s.ydot, 1.0);
}

TEST(FromPolar, SkewFormDiagonal) {
    const QuadraticForm f{2, 0.5, 1};
    const double c = std::cos(pi / 4), s = std::sin(pi / 4);
    const double w = 2 * c * c + 2 * 0.5 * s * c + s * s;  // psi^-2
    EXPECT_NEAR(w, 2.0, 1e-15);
    const double expected = 2 * std::sqrt(1 / w) * c;
    const auto q = from_polar({0, 2, pi / 4, 0, 0}, f);
    EXPECT_NEAR(q.x, expected, 1e-15);
    EXPECT_NEAR(q.y, expected, 1e-15);
    EXPECT_NEAR(q.x, 1.0, 1e-15);
    const auto back = to_polar(q, f);
    EXPECT_NEAR(back.R, 2.0, 1e-15);
    EXPECT_NEAR(back.theta, pi / 4, 1e-15);
}

TEST(FromPolar, RoundTripRandomStates) {
    fixtures::Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const auto f = fixtures::random_definite_form(rng);
        const PolarState p{fixtures::uniform(rng, -3, 3), fixtures::uniform(rng, 0.1, 5),
                           fixtures::uniform(rng, -pi + 1e-3, pi), fixtures::uniform(rng, -2, 2),
                           fixtures::uniform(rng, -2, 2)};
        const auto q = to_polar(from_polar(p, f), f);
        EXPECT_LT(rel(q.R, p.R), 1e-12);
        EXPECT_LT(rel(q.theta, p.theta), 1e-12);
        EXPECT_LT(rel(q.Rdot, p.Rdot), 1e-12);
        EXPECT_LT(rel(q.thetadot, p.thetadot), 1e-12);

        const CartesianState s{0, fixtures::uniform(rng, -2, 2), fixtures::uniform(rng, -2, 2),
                               fixtures::uniform(rng, -2, 2), fixtures::uniform(rng, -2, 2)};
        if (s.x * s.x + s.y * s.y < 1e-4) continue;
        const auto s2 = from_polar(to_polar(s, f), f);
        EXPECT_LT(rel(s2.x, s.x), 1e-12);
        EXPECT_LT(rel(s2.y, s.y), 1e-12);
        EXPECT_LT(rel(s2.xdot, s.xdot), 1e-12);
        EXPECT_LT(rel(s2.ydot, s.ydot), 1e-12);
    }
}

TEST(Geometry, RadiusMatchesEuclideanOverPsi) {
    fixtures::Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const auto f = fixtures::random_definite_form(rng);
        const double x = fixtures::uniform(rng, -2, 2), y = fixtures::uniform(rng, -2, 2);
        const double r2 = x * x + y * y;
        EXPECT_LT(rel(f.radius_sq(x, y), r2 / psi_sq(std::atan2(y, x), f)), 1e-12);
    }
}

TEST(Geometry, ThetadotMatchesDerivativeOfAtan2AlongCurve) {
    // q(t) = (cos 1.3t + 2, sin 0.7t + 0.5)
    auto q = [](double t) { return std::pair{std::cos(1.3 * t) + 2, std::sin(0.7 * t) + 0.5}; };
    const double h = 1e-5;
    for (double t = 0; t < 5; t += 0.37) {
        const auto [x, y] = q(t);
        const CartesianState s{t, x, y, -1.3 * std::sin(1.3 * t), 0.7 * std::cos(0.7 * t)};
        const auto p = to_polar(s, {1, 0, 1});
        const auto [xa, ya] = q(t + h);
        const auto [xb, yb] = q(t - h);
        EXPECT_NEAR(p.thetadot, (std::atan2(ya, xa) - std::atan2(yb, xb)) / (2 * h), 1e-6);
    }
}
