#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ermakov/fixtures.hpp"
#include "ermakov/invariants.hpp"

using namespace ermakov;
using fixtures::point_spec;

namespace {
ErmakovModel with_f(const char* f, double l0 = 1.0) {
    return validate_model(point_spec({1, 0, 1}, f, "0", l0, "1", std::string("s^2/2")));
}
}  // namespace

TEST(ErmakovI, CartesianExamples) {
    const auto iso = fixtures::iso_ho();
    EXPECT_DOUBLE_EQ(ermakov_I_cart({0, 1, 0, 0, 1}, iso), 0.5);
    EXPECT_DOUBLE_EQ(ermakov_I_cart({0, 1, 1, 2, 2}, iso), 0.0);
    EXPECT_NEAR(ermakov_I_cart({0, 1, 2, 0, 0}, with_f("lambda")), 1.5, 1e-12);
}

TEST(ErmakovI, AxisSingularity) {
    EXPECT_THROW(ermakov_I_cart({0, 0, 2, 1, 0}, with_f("lambda")), AxisSingularity);
    // f only: y = 0 is harmless.
    EXPECT_NO_THROW(ermakov_I_cart({0, 1, 0, 1, 0}, with_f("lambda")));
}

TEST(ErmakovI, PolarExamples) {
    EXPECT_DOUBLE_EQ(ermakov_I_polar({0, 1, 0, 0, 1}, fixtures::iso_ho()), 0.5);
    // Indefinite form 2xy at theta = pi/3: psi^2 = 1/(2 sin cos).
    ModelSpec s = point_spec({0, 1, 0}, "0", "0", 1.0, "1", std::string("s^2/2"));
    const auto m = validate_model(s);
    const double th = std::numbers::pi / 3, psi2 = 1.0 / (2 * std::sin(th) * std::cos(th));
    const PolarState p{0, 1.4, th, 0.2, -0.7};
    EXPECT_NEAR(ermakov_I_polar(p, m), 0.5 * std::pow(1.4, 4) * psi2 * psi2 * 0.49, 1e-14);
}

TEST(ErmakovI, PolarEqualsCartesianOnRandomStates) {
    fixtures::Rng rng(21);
    const char* fs[] = {"lambda", "1 + lambda^2", "exp(-lambda)", "0"};
    const char* gs[] = {"lambda", "2", "0", "1/(1 + lambda^2)"};
    for (int i = 0; i < 1000; ++i) {
        const auto form = fixtures::random_definite_form(rng);
        const auto m = validate_model(point_spec(form, fs[i % 4], gs[(i / 4) % 4], fixtures::uniform(rng, 0.5, 2),
                                                 "1", std::string("s^2/2")));
        const auto s = fixtures::sector_state(rng, 0.3, 2.0, 0.05, std::numbers::pi / 2 - 0.05, 2.0);
        const double ic = ermakov_I_cart(s, m), ip = ermakov_I_polar(to_polar(s, form), m);
        EXPECT_LE(std::abs(ic - ip), 1e-12 * std::max(1.0, std::abs(ic)));
    }
}

TEST(ErmakovI, LowerLimitShiftsByConstant) {
    const auto m1 = with_f("cos(lambda) + 2", 1.0);
    const auto m2 = with_f("cos(lambda) + 2", 2.5);
    const double shift = -(std::sin(2.5) + 5.0 - std::sin(1.0) - 2.0);
    for (const CartesianState& s : {CartesianState{0, 1, 0.3, 0.2, -1}, CartesianState{0, 0.4, 2, 1, 1}})
        EXPECT_NEAR(ermakov_I_cart(s, m2) - ermakov_I_cart(s, m1), shift, 1e-12);
}

TEST(NoetherJ, Examples) {
    for (double t : {0.0, 3.3}) {
        EXPECT_NEAR(noether_J(CartesianState{t, 1, 0, 0, 1}, fixtures::iso_ho()), 1.0, 1e-15);
        EXPECT_NEAR(noether_J(CartesianState{t, 1, 0, 0, 1}, fixtures::kepler()), -0.5, 1e-15);
    }
    EXPECT_NEAR(noether_J(CartesianState{0, 1, 0, 1, 1}, fixtures::iso_ho()), 1.5, 1e-15);
}

TEST(NoetherJ, TimeDependentRho) {
    // rho = sqrt(1 + t^2) at t = 1: rho = sqrt 2, rhodot = 1/sqrt 2.
    const auto m = fixtures::kepler_rho();
    const CartesianState s{1.0, 1.2, 0.0, 0.3, 0.9};
    const double rho = std::sqrt(2.0), rd = 1 / std::sqrt(2.0);
    const double R = 1.2, Rd = 0.3, I = 0.5 * std::pow(1.2 * 0.9, 2);
    const double expected = 0.5 * std::pow(rho * Rd - rd * R, 2) - rho / R + I * (rho / R) * (rho / R);
    EXPECT_NEAR(noether_J(s, m), expected, 1e-14);
}

TEST(NoetherJ, RequiresPointSymmetricModel) {
    ModelSpec s;
    s.potential = GenericPotentialSpec{"R^2"};
    EXPECT_THROW(noether_J(CartesianState{0, 1, 0, 0, 1}, validate_model(s)), Error);
}

TEST(Hamiltonian, Examples) {
    EXPECT_NEAR(hamiltonian(CartesianState{0, 1, 0, 0, 1}, fixtures::iso_ho()), 1.0, 1e-15);
    const PhasePoint p{0, 1, 0, 1, 0};
    // identity form: kinetic part (px^2 + py^2)/2 = 1/2 at (xdot, ydot) = (1, 0)
    EXPECT_NEAR(hamiltonian_phase(p, fixtures::iso_ho()) - potential(1.0, 0.0, 0.0, fixtures::iso_ho()), 0.5, 1e-15);
}

TEST(Hamiltonian, EqualsJWhenRhoIsOne) {
    fixtures::Rng rng(4);
    for (const auto& fx : {fixtures::iso_ho_fixture(), fixtures::kepler_fixture(), fixtures::gen_fg_fixture(),
                           fixtures::goedert_fixture()}) {
        for (int i = 0; i < 50; ++i) {
            const auto s = fx.sample(rng);
            const double H = hamiltonian(s, fx.model), J = noether_J(s, fx.model);
            EXPECT_LE(std::abs(H - J), 1e-12 * std::max(1.0, std::abs(J))) << fx.name;
        }
    }
}

TEST(Hamiltonian, VelocityFormEqualsPhaseForm) {
    fixtures::Rng rng(8);
    for (const auto& fx : fixtures::point_symmetric_fixtures()) {
        for (int i = 0; i < 50; ++i) {
            auto s = fx.sample(rng);
            s.t = fixtures::uniform(rng, 0, 3);
            const double Hv = hamiltonian(s, fx.model);
            const double Hp = hamiltonian_phase(to_phase(s, fx.model.form()), fx.model);
            EXPECT_LE(std::abs(Hv - Hp), 1e-12 * std::max(1.0, std::abs(Hv))) << fx.name;
        }
    }
}

TEST(Phase, MomentaRoundTrip) {
    const QuadraticForm f{2, 0.5, 1};
    const CartesianState s{0.5, 1, 2, 0.3, -0.7};
    const auto back = from_phase(to_phase(s, f), f);
    EXPECT_NEAR(back.xdot, s.xdot, 1e-15);
    EXPECT_NEAR(back.ydot, s.ydot, 1e-15);
}
