// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "ermakov/ermakov.hpp"
#include "ermakov/fixtures.hpp"

using namespace ermakov;
using fixtures::point_spec;

namespace {

constexpr double pi = std::numbers::pi;

// Pinned tolerances.
constexpr double kDriftTol = 1e-8;
constexpr double kIntegratorTol = 1e-10;
constexpr double kNoetherTol = 1e-9;
constexpr double kCorruptedFloor = 1e-3;
constexpr double kConverseTol = 1e-10;
constexpr double kInvolutionTol = 1e-8;
constexpr double kCanonicalTol = 1e-12;
constexpr double kQuadratureTol = 1e-6;
constexpr double kConicTol = 1e-8;
constexpr double kLinearResidualTol = 1e-6;
constexpr double kPolarITol = 1e-12;
constexpr double kHamiltonianTol = 1e-12;
constexpr double kForceTol = 1e-9;
constexpr double kCriterion1Seconds = 10.0;
constexpr double kCriterion6Seconds = 5.0;

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

double relative_drift(const Trajectory& tr, const std::function<double(const TrajectorySample&)>& q) {
    const double q0 = q(tr.samples.front());
    double worst = 0.0;
    for (const auto& s : tr.samples) worst = std::max(worst, rel(q(s), q0));
    return worst;
}

StateFn tau_const(double c) {
    return [c](const DualState&) { return Dual(c); };
}
StateFn tau_r2_thetadot(QuadraticForm f) {
    return [f](const DualState& s) {
        return f.radius_sq(s.x, s.y) * (s.x * s.ydot - s.y * s.xdot) / (s.x * s.x + s.y * s.y);
    };
}

// ---- 1, 2: invariant conservation -------------------------------------------------------

Outcome conservation(const std::vector<fixtures::Fixture>& fxs, bool use_J, std::uint64_t seed, double budget) {
    const auto t0 = std::chrono::steady_clock::now();
    fixtures::Rng rng(seed);
    double worst = 0.0;
    for (const auto& fx : fxs) {
        for (int k = 0; k < 10; ++k) {
            const auto tr = integrate_steps(fx.model, fx.sample(rng), 20.0, IntegratorConfig{kIntegratorTol, kIntegratorTol});
            worst = std::max(worst, use_J ? relative_drift(tr, [](const TrajectorySample& s) { return *s.J; })
                                          : relative_drift(tr, [](const TrajectorySample& s) { return s.I; }));
        }
    }
    const double secs = seconds_since(t0);
    Outcome o{worst <= kDriftTol && secs < budget, {}};
    o.detail = fmt("max relative drift %.2e (tol %.0e), %.2f s", worst, kDriftTol, secs);
    return o;
}

// ---- 3: Noether criterion ---------------------------------------------------------------

Outcome noether_criterion() {
    fixtures::Rng rng(3);
    const auto fxs = fixtures::point_symmetric_fixtures();
    double worst = 0.0, weakest_control = 1e300;
    int n = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto& fx = fxs[static_cast<std::size_t>(i) % fxs.size()];
        auto s = fx.sample(rng);
        s.t = fixtures::uniform(rng, 0, 4);
        const auto gen = point_symmetry(fx.model);
        const double L = lagrangian(s, fx.model);
        worst = std::max(worst, std::abs(noether_residual(gen, s, fx.model)) / (1 + std::abs(L)));
        // The corrupted gauge adds d/dt(R^2/2) = R Rdot to the residual; keep states where that is visible.
        const auto p = to_polar(s, fx.model.form());
        if (std::abs(p.R * p.Rdot) > 0.01) {
            weakest_control = std::min(weakest_control, std::abs(noether_residual(corrupt_gauge(gen, fx.model), s, fx.model)));
            ++n;
        }
    }
    Outcome o{worst <= kNoetherTol && n > 500 && weakest_control > kCorruptedFloor, {}};
    o.detail = fmt("max |res|/(1+|L|) %.2e (tol %.0e); corrupted gauge min |res| %.2e", worst, kNoetherTol, weakest_control) +
               " over " + std::to_string(n) + " states (floor 1e-03)";
    return o;
}

// ---- 4: converse theorem ----------------------------------------------------------------

Outcome converse() {
    fixtures::Rng rng(4);
    const char* fs[] = {"lambda", "1 + lambda^2", "0"};
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto form = fixtures::random_definite_form(rng);
        const auto m = validate_model(point_spec(form, fs[i % 3], "lambda", 1.0, "sqrt(1 + t^2)", std::string("s^2/2 - 1/s")));
        const auto s = fixtures::sector_state(rng, 0.4, 2.0, 0.1, pi / 2 - 0.1, 1.5, fixtures::uniform(rng, 0, 3));
        const auto p = to_polar(s, form);
        const DualState d{s.t, s.x, s.y, s.xdot, s.ydot};
        for (const auto& tau : {tau_const(0.0), tau_const(1.0), tau_r2_thetadot(form)}) {
            const auto got = polar_components(converse_generator(m, tau), s, m);
            // dR = tau Rdot, dtheta = (tau - R^2/kappa) thetadot written out here.
            const double t = tau(d).v;
            const double dR = t * p.Rdot, dth = (t - p.R * p.R / m.kappa()) * p.thetadot;
            worst = std::max({worst, rel(got.dR, dR), rel(got.dtheta, dth)});
        }
    }
    return {worst <= kConverseTol, fmt("max relative component error %.2e (tol %.0e)", worst, kConverseTol)};
}

// ---- 5: involution ----------------------------------------------------------------------

Outcome involution() {
    fixtures::Rng rng(5);
    double worst = 0.0;
    for (const auto& fx : fixtures::point_symmetric_fixtures()) {
        const auto I = phase_I(fx.model), J = phase_J(fx.model);
        for (int i = 0; i < 100; ++i) {
            auto s = fx.sample(rng);
            s.t = fixtures::uniform(rng, 0, 3);
            worst = std::max(worst, std::abs(poisson_bracket(I, J, to_phase(s, fx.model.form()))));
        }
    }
    const auto m = fixtures::rho_t();
    const PhasePoint p{0.2, 0.9, 1.1, 0.3, -0.5};
    const double xpx = poisson_bracket(phase_function("x", m), phase_function("px", m), p);
    const double ypy = poisson_bracket(phase_function("y", m), phase_function("py", m), p);
    const double II = poisson_bracket(phase_I(m), phase_I(m), p);
    const double canon = std::max({std::abs(xpx - 1), std::abs(ypy - 1), std::abs(II)});
    return {worst <= kInvolutionTol && canon <= kCanonicalTol,
            fmt("max |{I,J}| %.2e (tol %.0e); canonical error %.2e (tol 1e-12)", worst, kInvolutionTol, canon)};
}

// ---- 6: reduction to quadratures --------------------------------------------------------

double max_norm(const Trajectory& a, const Trajectory& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < std::min(a.samples.size(), b.samples.size()); ++i) {
        const auto &p = a.samples[i].state, &q = b.samples[i].state;
        worst = std::max({worst, std::abs(p.x - q.x), std::abs(p.y - q.y), std::abs(p.xdot - q.xdot),
                          std::abs(p.ydot - q.ydot)});
    }
    return worst;
}

Outcome quadratures() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto iso = fixtures::iso_ho();
    const auto kep = fixtures::kepler();
    struct Case {
        const char* name;
        const ErmakovModel* m;
        CartesianState init;
        double J;  // J = Rdot^2/2 + W(R) at the start
    };
    const Case cases[] = {{"ISO_HO J=1.25", &iso, {0, 1, 0, std::sqrt(0.5), 1}, 0.25 + 0.5 + 0.5},
                          {"ISO_HO J=1", &iso, {0, 1, 0, 0, 1}, 0.5 + 0.5},
                          {"KEPLER", &kep, {0, 1, 0, 0, 1.1}, 0.605 - 1.0}};
    double worst = 0.0, worst_J = 0.0;
    std::string parts;
    for (const auto& c : cases) {
        const auto q = solve_by_quadrature(*c.m, c.init, 10.0, 201);
        const auto d = integrate(*c.m, c.init, 10.0, 201, IntegratorConfig{1e-12, 1e-14});
        const double e = max_norm(q.trajectory, d);
        worst = std::max(worst, e);
        worst_J = std::max(worst_J, std::abs(q.J - c.J));
        parts += std::string(" ") + c.name + fmt(" %.1e", e);
    }
    const double secs = seconds_since(t0);
    return {worst <= kQuadratureTol && worst_J <= 1e-14 && secs < kCriterion6Seconds,
            fmt("max-norm %.2e (tol %.0e), %.2f s;", worst, kQuadratureTol, secs) + parts};
}

// ---- 7: linearization -------------------------------------------------------------------

Outcome linearization() {
    std::string detail;
    bool pass = true;

    // (a) r = L^2/(1 + e cos theta) for a start at perihelion on the x axis.
    const auto kep = fixtures::kepler();
    double conic = 0.0;
    for (double e : {0.0, 0.21}) {
        const double L = std::sqrt(1 + e);
        const auto sol = solve_by_linearization(kep, {0, 1, 0, 0, L}, 12.0, 241);
        for (const auto& s : sol.trajectory.samples) {
            const double r = std::hypot(s.state.x, s.state.y), th = std::atan2(s.state.y, s.state.x);
            conic = std::max(conic, std::abs(r - L * L / (1 + e * std::cos(th))));
        }
        if (!sol.truncated.empty() || sol.trajectory.samples.size() != 241) pass = false;
    }
    pass = pass && conic <= kConicTol;
    detail += fmt("(a) conic error %.2e (tol %.0e)", conic, kConicTol);

    // (b) phi = alpha/R along direct trajectories; phi'' from five-point differences in t.
    const auto kep_rho = fixtures::kepler_rho();
    const auto fg_coulomb =
        validate_model(point_spec({1, 0, 1}, "lambda", "lambda", 1.0, "1", InverseSquareCoulomb{0.0, 1.0}));
    const auto u2_rho = validate_model(point_spec({2, 0.5, 1}, "lambda", "1", 1.0, "sqrt(1 + t^2)", std::string("0.3/s^2 + s^2")));
    struct Case {
        const ErmakovModel* m;
        CartesianState init;
    };
    const Case cases[] = {{&kep, {0, 1, 0, 0, 1.1}}, {&kep_rho, {0, 1, 0, 0.1, 1.0}},
                          {&fg_coulomb, {0, 1, 0.8, 0.1, 0.6}}, {&u2_rho, {0.5, 1, 0.8, 0.1, 0.5}}};
    double residual = 0.0;
    for (const auto& c : cases) {
        const auto& m = *c.m;
        const auto cls = classify_linearisable(m);
        const auto alpha = alpha_solve(m, cls, c.init.t, c.init.t + 1.0);
        const double I = ermakov_I(c.init, m), d = 1e-3;
        std::vector<double> grid;
        for (int k = 1; k <= 8; ++k)
            for (int j = -2; j <= 2; ++j) grid.push_back(c.init.t + 0.1 * k + j * d);
        const auto tr = integrate(m, c.init, grid, IntegratorConfig{1e-13, 1e-15});
        auto pieces = [&](const CartesianState& s) {
            const auto p = to_polar(s, m.form());
            const auto a = alpha(s.t);
            const double phidot = a.alpha_dot / p.R - a.alpha * p.Rdot / (p.R * p.R);
            return std::array<double, 4>{a.alpha / p.R, phidot / p.thetadot, p.thetadot, p.theta};
        };
        for (int k = 0; k < 8; ++k) {
            std::array<double, 5> slope{};
            for (int j = 0; j < 5; ++j) slope[j] = pieces(tr.samples[5 * k + j].state)[1];
            const auto mid = pieces(tr.samples[5 * k + 2].state);
            const double phi2 = (-slope[4] + 8 * slope[3] - 8 * slope[1] + slope[0]) / (12 * d) / mid[2];
            const double h = h_of_theta(mid[3], I, m), dh = dh_dtheta(mid[3], I, m);
            const double res = h * h * phi2 + h * dh * mid[1] + 2 * (m.kappa() * I + cls.a) * mid[0] - cls.forcing();
            residual = std::max(residual, std::abs(res) / (1 + std::abs(mid[0])));
        }
    }
    pass = pass && residual <= kLinearResidualTol;
    detail += fmt("; (b) residual %.2e (tol %.0e)", residual, kLinearResidualTol);

    // (c) classification tags.
    using K = LinearisableClass::Kind;
    auto is = [](const ErmakovModel& m, K k, double a, double bc) {
        const auto c = classify_linearisable(m);
        if (c.kind != k) return false;
        if (k == K::NotLinearisable) return true;
        const double second = k == K::U1 ? c.b : c.c;
        return std::abs(c.a - a) <= 1e-9 && std::abs(second - bc) <= 1e-9;
    };
    auto expr_model = [](const char* U) { return validate_model(point_spec({1, 0, 1}, "0", "0", 1.0, "1", std::string(U))); };
    const bool tags = is(fixtures::quartic(), K::NotLinearisable, 0, 0) && is(kep, K::U1, 0, 1) &&
                      is(fixtures::iso_ho(), K::U2, 0, 1) && is(expr_model("0.5/s^2 - 3/s"), K::U1, 0.5, 3) &&
                      is(u2_rho, K::U2, 0.3, 2) &&
                      is(validate_model(point_spec({1, 0, 1}, "0", "0", 1.0, "1", InverseSquareHarmonic{0.2, 4})), K::U2, 0.2, 4) &&
                      is(fixtures::rho_t(), K::NotLinearisable, 0, 0);
    pass = pass && tags;
    detail += std::string("; (c) tags ") + (tags ? "exact" : "WRONG");
    return {pass, detail};
}

// ---- 8: representation equality ---------------------------------------------------------

Outcome representation() {
    fixtures::Rng rng(8);
    const char* fs[] = {"lambda", "1 + lambda^2", "exp(-lambda)", "0"};
    const char* gs[] = {"lambda", "2", "0", "1/(1 + lambda^2)"};
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto form = fixtures::random_definite_form(rng);
        const auto m = validate_model(
            point_spec(form, fs[i % 4], gs[(i / 4) % 4], fixtures::uniform(rng, 0.5, 2), "1", std::string("s^2/2")));
        const auto s = fixtures::sector_state(rng, 0.3, 2.0, 0.05, pi / 2 - 0.05, 2.0);
        worst = std::max(worst, rel(ermakov_I_polar(to_polar(s, form), m), ermakov_I_cart(s, m)));
    }
    return {worst <= kPolarITol, fmt("max relative difference %.2e (tol %.0e)", worst, kPolarITol)};
}

// ---- 9: Hamiltonian consistency ---------------------------------------------------------

Outcome hamiltonian_consistency() {
    fixtures::Rng rng(9);
    double forms = 0.0, hj = 0.0, drift = 0.0;
    for (const auto& fx : fixtures::point_symmetric_fixtures()) {
        const bool unit_rho = fx.model.point().rho.str() == "1";
        for (int i = 0; i < 100; ++i) {
            auto s = fx.sample(rng);
            s.t = fixtures::uniform(rng, 0, 3);
            const double Hv = hamiltonian(s, fx.model);
            forms = std::max(forms, rel(Hv, hamiltonian_phase(to_phase(s, fx.model.form()), fx.model)));
            if (unit_rho) hj = std::max(hj, rel(Hv, noether_J(s, fx.model)));
        }
        if (unit_rho) {
            const auto tr = integrate_steps(fx.model, fx.sample(rng), 20.0, IntegratorConfig{kIntegratorTol, kIntegratorTol});
            drift = std::max(drift, relative_drift(tr, [](const TrajectorySample& s) { return *s.H; }));
        }
    }
    return {forms <= kHamiltonianTol && hj <= kHamiltonianTol && drift <= kDriftTol,
            fmt("velocity vs phase %.2e, H vs J %.2e (tol 1e-12); H drift %.2e (tol 1e-08)", forms, hj, drift)};
}

// ---- 10: equations of motion ------------------------------------------------------------

// M qddot = -grad V. grad V by five-point central differences, Richardson extrapolated over
// steps h and h/2 scaled by the distance to the nearer axis.
Acceleration lagrangian_force(const ErmakovModel& m, const CartesianState& s) {
    auto dV = [&](int which) {
        auto V = [&](double d) { return which == 0 ? potential(s.x + d, s.y, s.t, m) : potential(s.x, s.y + d, s.t, m); };
        auto D = [&](double h) { return (-V(2 * h) + 8 * V(h) - 8 * V(-h) + V(-2 * h)) / (12 * h); };
        const double h = 4e-3 * std::min({1.0, std::abs(s.x), std::abs(s.y)});
        const double coarse = D(h), fine = D(h / 2);
        return fine + (fine - coarse) / 15;
    };
    const auto& f = m.form();
    const double gx = -dV(0), gy = -dV(1), k = m.kappa();
    return {(f.C * gx - f.B * gy) / k, (f.A * gy - f.B * gx) / k};
}

Outcome eom_keystone() {
    fixtures::Rng rng(10);
    const char* fs[] = {"lambda", "1 + lambda^2", "exp(-lambda)", "0"};
    const char* gs[] = {"2*lambda", "1", "0", "1/(1 + lambda^2)"};
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto form = fixtures::random_definite_form(rng);
        const auto m = validate_model(point_spec(form, fs[i % 4], gs[(i / 4) % 4], 1.0, "sqrt(1 + t^2)",
                                                 std::string("s^2/2 - 1/s + 0.3/s^2")));
        const auto s = fixtures::sector_state(rng, 0.5, 2.0, 0.1, pi / 2 - 0.1, 1.0, fixtures::uniform(rng, 0, 3));
        const auto a = eom_rhs(s, m), b = lagrangian_force(m, s);
        worst = std::max({worst, rel(a.xddot, b.xddot), rel(a.yddot, b.yddot)});
    }
    return {worst <= kForceTol, fmt("max relative difference %.2e (tol %.0e)", worst, kForceTol)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"Ermakov invariant conservation",
         [] { return conservation(fixtures::ermakov_fixtures(), false, 1, kCriterion1Seconds); }},
        {"Noether invariant conservation",
         [] { return conservation(fixtures::point_symmetric_fixtures(), true, 2, 1e300); }},
        {"Noether criterion", noether_criterion},
        {"Converse generator", converse},
        {"Involution", involution},
        {"Reduction to quadratures", quadratures},
        {"Linearization", linearization},
        {"Representation equality", representation},
        {"Hamiltonian consistency", hamiltonian_consistency},
        {"Equations of motion", eom_keystone},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%s %2zu %-32s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    }
    return failures == 0 ? 0 : 1;
}
