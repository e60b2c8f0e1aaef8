#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ermakov/dual.hpp"
#include "ermakov/dynamics.hpp"
#include "ermakov/geometry.hpp"
#include "ermakov/invariants.hpp"
#include "ermakov/model.hpp"

namespace ermakov {

enum class GeneratorKind { Point, Dynamical };

using DualState = BasicCartesianState<Dual>;
using StateFn = std::function<Dual(const DualState&)>;
using PointFn = std::function<Dual(const Dual& t, const Dual& x, const Dual& y)>;

/// Infinitesimal transformation t -> t + eps tau, q -> q + eps eta with gauge term Lambda.
struct SymmetryGenerator {
    GeneratorKind kind = GeneratorKind::Dynamical;
    StateFn tau, eta1, eta2, gauge;
};

/// Builds a generator whose components see only (t, x, y).
inline SymmetryGenerator make_point_generator(PointFn tau, PointFn eta1, PointFn eta2, PointFn gauge) {
    auto wrap = [](PointFn f) -> StateFn { return [f = std::move(f)](const DualState& s) { return f(s.t, s.x, s.y); }; };
    return {GeneratorKind::Point, wrap(std::move(tau)), wrap(std::move(eta1)), wrap(std::move(eta2)),
            wrap(std::move(gauge))};
}

/// tau = rho^2, eta = rho rhodot (x, y), Lambda = (rho rhoddot + rhodot^2) R^2 / 2.
inline SymmetryGenerator point_symmetry(const ErmakovModel& m) {
    detail::require_point_symmetric(m, "point_symmetry");
    const auto p = m.point();
    const auto fm = m.form();
    return make_point_generator(
        [p](const Dual& t, const Dual&, const Dual&) {
            const Dual r = p.rho(t);
            return r * r;
        },
        [p](const Dual& t, const Dual& x, const Dual&) { return p.rho(t) * p.rho_dot(t) * x; },
        [p](const Dual& t, const Dual&, const Dual& y) { return p.rho(t) * p.rho_dot(t) * y; },
        [p, fm](const Dual& t, const Dual& x, const Dual& y) {
            const Dual rd = p.rho_dot(t);
            return 0.5 * (p.rho(t) * p.rho_ddot(t) + rd * rd) * fm.radius_sq(x, y);
        });
}

/// Adds R^2/2 to the gauge, which breaks the symmetry criterion wherever R Rdot != 0.
inline SymmetryGenerator corrupt_gauge(SymmetryGenerator gen, const ErmakovModel& m) {
    const auto fm = m.form();
    gen.gauge = [g = std::move(gen.gauge), fm](const DualState& s) { return g(s) + 0.5 * fm.radius_sq(s.x, s.y); };
    return gen;
}

inline SymmetryGenerator without_gauge(SymmetryGenerator gen) {
    gen.gauge = [](const DualState&) { return Dual(0.0); };
    return gen;
}

namespace detail {
inline DualState seed(const CartesianState& s, int which) {
    DualState d{s.t, s.x, s.y, s.xdot, s.ydot};
    switch (which) {
        case 0: d.t.d = 1.0; break;
        case 1: d.x.d = 1.0; break;
        case 2: d.y.d = 1.0; break;
        default: break;
    }
    return d;
}
/// Every component carries its derivative along the flow through s.
inline DualState flow(const CartesianState& s, const Acceleration& a) {
    return {Dual(s.t, 1.0), Dual(s.x, s.xdot), Dual(s.y, s.ydot), Dual(s.xdot, a.xddot), Dual(s.ydot, a.yddot)};
}
}  // namespace detail

/// tau L_t + eta . L_q + (etadot - taudot qdot) . L_qdot + taudot L - Lambdadot, with every total
/// time derivative taken along the equations of motion.
inline double noether_residual(const SymmetryGenerator& gen, const CartesianState& s, const ErmakovModel& m,
                               double axis_guard = 1e-8) {
    const auto acc = eom_rhs(s, m, axis_guard);
    const DualState fl = detail::flow(s, acc);
    const Dual tau = gen.tau(fl);
    const Dual e1 = gen.eta1(fl);
    const Dual e2 = gen.eta2(fl);
    const Dual lam = gen.gauge(fl);
    const double Lt = lagrangian(detail::seed(s, 0), m).d;
    const double Lx = lagrangian(detail::seed(s, 1), m).d;
    const double Ly = lagrangian(detail::seed(s, 2), m).d;
    const double L = lagrangian(s, m);
    const auto& fm = m.form();
    const double px = fm.A * s.xdot + fm.B * s.ydot;
    const double py = fm.B * s.xdot + fm.C * s.ydot;
    return tau.v * Lt + e1.v * Lx + e2.v * Ly + (e1.d - tau.d * s.xdot) * px + (e2.d - tau.d * s.ydot) * py +
           tau.d * L - lam.d;
}

/// Generator of the invariant I by the converse theorem:
/// eta = -g^{-1} dI/dqdot + tau qdot with g^{-1} = [[C, -B], [-B, A]]/kappa, and the gauge
/// Lambda = I + tau L - qdot . dI/dqdot for which the conserved quantity is -I.
inline SymmetryGenerator converse_generator(const ErmakovModel& m, StateFn tau) {
    const auto fm = m.form();
    const double k = m.kappa();
    SymmetryGenerator gen;
    gen.kind = GeneratorKind::Dynamical;
    gen.tau = tau;
    gen.eta1 = [fm, k, tau](const DualState& s) {
        const Dual L = angular_momentum(s);
        const Dual Ix = -L * s.y, Iy = L * s.x;
        return -(fm.C * Ix - fm.B * Iy) / k + tau(s) * s.xdot;
    };
    gen.eta2 = [fm, k, tau](const DualState& s) {
        const Dual L = angular_momentum(s);
        const Dual Ix = -L * s.y, Iy = L * s.x;
        return -(fm.A * Iy - fm.B * Ix) / k + tau(s) * s.ydot;
    };
    gen.gauge = [m, tau](const DualState& s) {
        const Dual L = angular_momentum(s);
        return ermakov_I(s, m) + tau(s) * lagrangian(s, m) - L * L;
    };
    return gen;
}

struct PolarVariation {
    double dR = 0.0;
    double dtheta = 0.0;
};

/// Pushes the Cartesian variation eta through the differential of (R, theta).
inline PolarVariation polar_components(const SymmetryGenerator& gen, const CartesianState& s, const ErmakovModel& m) {
    const DualState d{s.t, s.x, s.y, s.xdot, s.ydot};
    const double e1 = gen.eta1(d).v, e2 = gen.eta2(d).v;
    const auto& fm = m.form();
    const double R2 = fm.radius_sq(s.x, s.y);
    if (!(R2 > 0.0)) throw DegenerateDirection("polar_components: R^2 <= 0");
    const double R = std::sqrt(R2);
    const double r2 = s.x * s.x + s.y * s.y;
    return {((fm.A * s.x + fm.B * s.y) * e1 + (fm.B * s.x + fm.C * s.y) * e2) / R, (-s.y * e1 + s.x * e2) / r2};
}

/// dR = tau Rdot, dtheta = -R^2 thetadot/kappa + tau thetadot.
inline PolarVariation ermakov_polar_variation(double tau, const PolarState& p, const ErmakovModel& m) {
    return {tau * p.Rdot, -p.R * p.R * p.thetadot / m.kappa() + tau * p.thetadot};
}

// ---- Phase space -------------------------------------------------------------------------

using DualPhasePoint = BasicPhasePoint<Dual>;

struct PhaseFunction {
    std::string name;
    std::function<Dual(const DualPhasePoint&)> fn;

    double operator()(const PhasePoint& p) const { return fn({p.t, p.x, p.y, p.px, p.py}).v; }
};

inline PhaseFunction phase_coordinate(int which) {
    static const char* names[] = {"x", "y", "px", "py"};
    return {names[which], [which](const DualPhasePoint& p) {
                switch (which) {
                    case 0: return p.x;
                    case 1: return p.y;
                    case 2: return p.px;
                    default: return p.py;
                }
            }};
}
inline PhaseFunction phase_I(const ErmakovModel& m) {
    return {"I", [m](const DualPhasePoint& p) { return ermakov_I(from_phase(p, m.form()), m); }};
}
inline PhaseFunction phase_J(const ErmakovModel& m) {
    return {"J", [m](const DualPhasePoint& p) { return noether_J(from_phase(p, m.form()), m); }};
}
inline PhaseFunction phase_H(const ErmakovModel& m) {
    return {"H", [m](const DualPhasePoint& p) { return hamiltonian(from_phase(p, m.form()), m); }};
}

/// Catalog lookup by name: I, J, H, x, y, px, py.
inline PhaseFunction phase_function(const std::string& name, const ErmakovModel& m) {
    if (name == "I") return phase_I(m);
    if (name == "J") return phase_J(m);
    if (name == "H") return phase_H(m);
    if (name == "x") return phase_coordinate(0);
    if (name == "y") return phase_coordinate(1);
    if (name == "px") return phase_coordinate(2);
    if (name == "py") return phase_coordinate(3);
    throw Error("unknown phase function '" + name + "'");
}

/// (d/dx, d/dy, d/dpx, d/dpy) by forward-mode differentiation.
inline std::array<double, 4> gradient(const PhaseFunction& F, const PhasePoint& p) {
    std::array<double, 4> g{};
    for (int i = 0; i < 4; ++i) {
        DualPhasePoint d{p.t, p.x, p.y, p.px, p.py};
        Dual* slots[] = {&d.x, &d.y, &d.px, &d.py};
        slots[i]->d = 1.0;
        g[static_cast<std::size_t>(i)] = F.fn(d).d;
    }
    return g;
}

/// Central-difference gradient, for cross-checking `gradient`.
inline std::array<double, 4> gradient_fd(const PhaseFunction& F, const PhasePoint& p, double rel_step = 1e-6) {
    std::array<double, 4> g{};
    for (int i = 0; i < 4; ++i) {
        PhasePoint a = p, b = p;
        double* sa[] = {&a.x, &a.y, &a.px, &a.py};
        double* sb[] = {&b.x, &b.y, &b.px, &b.py};
        const double h = rel_step * std::max(1.0, std::abs(*sa[i]));
        *sa[i] += h;
        *sb[i] -= h;
        g[static_cast<std::size_t>(i)] = (F(a) - F(b)) / (2.0 * h);
    }
    return g;
}

/// {Fa, Fb} = sum_i dFa/dq_i dFb/dp_i - dFa/dp_i dFb/dq_i.
inline double poisson_bracket(const PhaseFunction& Fa, const PhaseFunction& Fb, const PhasePoint& p) {
    const auto a = gradient(Fa, p);
    const auto b = gradient(Fb, p);
    return a[0] * b[2] + a[1] * b[3] - a[2] * b[0] - a[3] * b[1];
}

}  // namespace ermakov
