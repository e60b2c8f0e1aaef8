#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ermakov/geometry.hpp"
#include "ermakov/invariants.hpp"
#include "ermakov/model.hpp"

// Reference models used by the tests, the acceptance suite and the bundled scenarios.
namespace ermakov::fixtures {

inline ModelSpec point_spec(QuadraticForm form, std::string f, std::string g, double l0, std::string rho,
                            std::variant<std::string, InverseSquareCoulomb, InverseSquareHarmonic> U) {
    ModelSpec s;
    s.form = form;
    s.f = std::move(f);
    s.g = std::move(g);
    s.lambda0_f = s.lambda0_g = l0;
    s.potential = PointSymmetricSpec{std::move(rho), std::move(U)};
    return s;
}

/// Isotropic oscillator: Vbar = R^2/2.
inline ErmakovModel iso_ho() { return validate_model(point_spec({1, 0, 1}, "0", "0", 1.0, "1", std::string("s^2/2"))); }

/// Kepler: U = -1/s.
inline ErmakovModel kepler() {
    return validate_model(point_spec({1, 0, 1}, "0", "0", 1.0, "1", InverseSquareCoulomb{0.0, 1.0}));
}

/// A = C = 0, B = 1 (kappa = -1). Lower limits 2 make I negative near the diagonal, which
/// gives kappa I > 0 and a bounded radial motion.
inline ErmakovModel goedert() {
    return validate_model(point_spec({0, 1, 0}, "lambda", "lambda", 2.0, "1", std::string("s^2/2")));
}

/// Identity form with coupling f = g = lambda.
inline ErmakovModel gen_fg() {
    return validate_model(point_spec({1, 0, 1}, "lambda", "lambda", 1.0, "1", std::string("s^2/2")));
}

/// Non-diagonal form with rho(t) = sqrt(1 + t^2).
inline ErmakovModel rho_t() {
    return validate_model(point_spec({2, 0.5, 1}, "lambda", "lambda", 1.0, "sqrt(1 + t^2)", std::string("s^2/2 - 1/s")));
}

/// Kepler with rho(t) = sqrt(1 + t^2).
inline ErmakovModel kepler_rho() {
    return validate_model(point_spec({1, 0, 1}, "0", "0", 1.0, "sqrt(1 + t^2)", InverseSquareCoulomb{0.0, 1.0}));
}

/// U = s^4, outside both linearisable families.
inline ErmakovModel quartic() { return validate_model(point_spec({1, 0, 1}, "0", "0", 1.0, "1", std::string("s^4"))); }

/// Time-dependent generic potential Vbar = (1 + 0.1 sin t) R^2/2.
inline ErmakovModel generic_forced() {
    ModelSpec s;
    s.f = "lambda";
    s.g = "lambda";
    s.potential = GenericPotentialSpec{"(1 + 0.1*sin(t))*R^2/2"};
    return validate_model(s);
}

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

/// State with Euclidean radius in [r0, r1], polar angle in [th0, th1] and velocity components in [-v, v].
inline CartesianState sector_state(Rng& rng, double r0, double r1, double th0, double th1, double v, double t = 0.0) {
    const double r = uniform(rng, r0, r1), th = uniform(rng, th0, th1);
    return {t, r * std::cos(th), r * std::sin(th), uniform(rng, -v, v), uniform(rng, -v, v)};
}

struct Fixture {
    std::string name;
    ErmakovModel model;
    std::function<CartesianState(Rng&)> sample;  // initial states with bounded motion over t in [0, 20]
};

inline Fixture iso_ho_fixture() {
    return {"ISO_HO", iso_ho(), [](Rng& rng) {
                const double pi = std::numbers::pi;
                return sector_state(rng, 0.5, 1.5, -pi, pi, 1.0);
            }};
}

inline Fixture kepler_fixture(const std::string& name = "KEPLER", ErmakovModel m = kepler()) {
    return {name, std::move(m), [](Rng& rng) {
                const double pi = std::numbers::pi;
                const double r = uniform(rng, 0.8, 1.2), ph = uniform(rng, -pi, pi);
                const double vt = uniform(rng, 0.85, 1.15), vr = uniform(rng, -0.15, 0.15);
                const double c = std::cos(ph), s = std::sin(ph);
                return CartesianState{0.0, r * c, r * s, vr * c - vt * s, vr * s + vt * c};
            }};
}

inline Fixture goedert_fixture() {
    ErmakovModel m = goedert();
    return {"GOEDERT", m, [m](Rng& rng) {
                const double q = std::numbers::pi / 4.0;
                for (;;) {
                    const auto s = sector_state(rng, 0.8, 1.2, q - 0.25, q + 0.25, 0.4);
                    if (ermakov_I(s, m) < -0.5) return s;
                }
            }};
}

inline Fixture gen_fg_fixture() {
    return {"GEN_FG", gen_fg(), [](Rng& rng) {
                const double q = std::numbers::pi / 4.0;
                return sector_state(rng, 0.7, 1.3, q - 0.4, q + 0.4, 0.8);
            }};
}

inline Fixture rho_t_fixture() {
    return {"RHO_T", rho_t(), [](Rng& rng) {
                const double q = std::numbers::pi / 4.0;
                return sector_state(rng, 0.7, 1.3, q - 0.4, q + 0.4, 0.8);
            }};
}

inline Fixture kepler_rho_fixture() { return kepler_fixture("KEPLER_RHO", kepler_rho()); }

/// The fixtures of the invariant-conservation protocol.
inline std::vector<Fixture> ermakov_fixtures() {
    return {iso_ho_fixture(), kepler_fixture(), goedert_fixture(), gen_fg_fixture()};
}

/// Every point-symmetric fixture, including the time-dependent rho ones.
inline std::vector<Fixture> point_symmetric_fixtures() {
    return {iso_ho_fixture(), kepler_fixture(), goedert_fixture(), gen_fg_fixture(), rho_t_fixture(),
            kepler_rho_fixture()};
}

/// A random positive definite form with entries of order one.
inline QuadraticForm random_definite_form(Rng& rng) {
    for (;;) {
        QuadraticForm f{uniform(rng, 0.3, 3.0), uniform(rng, -1.0, 1.0), uniform(rng, 0.3, 3.0)};
        if (kappa(f) > 0.1) return f;
    }
}

}  // namespace ermakov::fixtures
