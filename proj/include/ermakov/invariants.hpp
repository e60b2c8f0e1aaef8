#pragma once

#include <cmath>
#include <string>

#include "ermakov/dual.hpp"
#include "ermakov/errors.hpp"
#include "ermakov/geometry.hpp"
#include "ermakov/model.hpp"

namespace ermakov {

enum class InvariantKind { ErmakovI, NoetherJ, HamiltonianH };

struct InvariantValue {
    double value = 0.0;
    InvariantKind which = InvariantKind::ErmakovI;
    CartesianState evaluated_at;
};

/// Phase-space point (canonical momenta px = A xdot + B ydot, py = B xdot + C ydot).
template <class T>
struct BasicPhasePoint {
    T t{}, x{}, y{}, px{}, py{};
};
using PhasePoint = BasicPhasePoint<double>;

template <class T>
BasicPhasePoint<T> to_phase(const BasicCartesianState<T>& s, const QuadraticForm& fm) {
    return {s.t, s.x, s.y, fm.A * s.xdot + fm.B * s.ydot, fm.B * s.xdot + fm.C * s.ydot};
}

template <class T>
BasicCartesianState<T> from_phase(const BasicPhasePoint<T>& p, const QuadraticForm& fm) {
    const double k = kappa(fm);
    return {p.t, p.x, p.y, (fm.C * p.px - fm.B * p.py) / k, (fm.A * p.py - fm.B * p.px) / k};
}

/// x ydot - y xdot
template <class T>
T angular_momentum(const BasicCartesianState<T>& s) {
    return s.x * s.ydot - s.y * s.xdot;
}

/// I = (x ydot - y xdot)^2/2 + F(y/x) + G(x/y).
template <class T>
T ermakov_I(const BasicCartesianState<T>& s, const ErmakovModel& m) {
    const T L = angular_momentum(s);
    T out = 0.5 * L * L;
    if (!m.f_zero()) {
        if (value_of(s.x) == 0.0) throw AxisSingularity("ermakov_I: x = 0 with f nonzero");
        out = out + m.F(s.y / s.x);
    }
    if (!m.g_zero()) {
        if (value_of(s.y) == 0.0) throw AxisSingularity("ermakov_I: y = 0 with g nonzero");
        out = out + m.G(s.x / s.y);
    }
    return out;
}

inline double ermakov_I_cart(const CartesianState& s, const ErmakovModel& m) { return ermakov_I(s, m); }

/// I = R^4 psi^4 thetadot^2/2 + F(tan theta) + G(cot theta).
inline double ermakov_I_polar(const PolarState& p, const ErmakovModel& m) {
    const double psi2 = psi_sq(p.theta, m.form());
    const double R2 = p.R * p.R;
    double out = 0.5 * R2 * R2 * psi2 * psi2 * p.thetadot * p.thetadot;
    const double s = std::sin(p.theta), c = std::cos(p.theta);
    if (!m.f_zero()) {
        if (std::abs(c) < kAxisFloor) throw AxisSingularity("ermakov_I_polar: cos(theta) = 0 with f nonzero");
        out += m.F(s / c);
    }
    if (!m.g_zero()) {
        if (std::abs(s) < kAxisFloor) throw AxisSingularity("ermakov_I_polar: sin(theta) = 0 with g nonzero");
        out += m.G(c / s);
    }
    return out;
}

namespace detail {
inline void require_point_symmetric(const ErmakovModel& m, const char* what) {
    if (!m.point_symmetric()) throw Error(std::string(what) + " requires a point-symmetric model");
}

template <class T>
void radius_and_rate(const BasicCartesianState<T>& s, const QuadraticForm& fm, T& R, T& Rdot) {
    using std::sqrt;
    const T R2 = fm.radius_sq(s.x, s.y);
    if (!(value_of(R2) > 0.0)) throw DegenerateDirection("R^2 <= 0 at the evaluation point");
    R = sqrt(R2);
    Rdot = fm.inner(s.x, s.y, s.xdot, s.ydot) / R;
}
}  // namespace detail

/// J = (rho Rdot - rhodot R)^2/2 + U(R/rho) + kappa I (rho/R)^2.
template <class T>
T noether_J(const BasicCartesianState<T>& s, const ErmakovModel& m) {
    detail::require_point_symmetric(m, "noether_J");
    T R, Rdot;
    detail::radius_and_rate(s, m.form(), R, Rdot);
    const T rho = m.rho(s.t);
    const T rhodot = m.point().rho_dot(s.t);
    const T w = rho * Rdot - rhodot * R;
    const T q = rho / R;
    return 0.5 * w * w + m.point().U.value(R / rho) + m.kappa() * ermakov_I(s, m) * q * q;
}

/// H = Rdot^2/2 + kappa I/R^2 - rhoddot R^2/(2 rho) + U(R/rho)/rho^2.
template <class T>
T hamiltonian(const BasicCartesianState<T>& s, const ErmakovModel& m) {
    detail::require_point_symmetric(m, "hamiltonian");
    T R, Rdot;
    detail::radius_and_rate(s, m.form(), R, Rdot);
    const T rho = m.rho(s.t);
    const T rhoddot = m.point().rho_ddot(s.t);
    return 0.5 * Rdot * Rdot + m.kappa() * ermakov_I(s, m) / (R * R) - rhoddot * R * R / (2.0 * rho) +
           m.point().U.value(R / rho) / (rho * rho);
}

/// H = (C px^2 - 2B px py + A py^2)/(2 kappa) + V for any model.
template <class T>
T hamiltonian_phase(const BasicPhasePoint<T>& p, const ErmakovModel& m) {
    const auto& fm = m.form();
    const T kinetic = (fm.C * p.px * p.px - 2.0 * fm.B * p.px * p.py + fm.A * p.py * p.py) / (2.0 * m.kappa());
    return kinetic + potential(p.x, p.y, p.t, m);
}

/// T + V in velocity form.
template <class T>
T energy(const BasicCartesianState<T>& s, const ErmakovModel& m) {
    return 0.5 * m.form().inner(s.xdot, s.ydot, s.xdot, s.ydot) + potential(s.x, s.y, s.t, m);
}

/// Lagrangian L = T - V.
template <class T>
T lagrangian(const BasicCartesianState<T>& s, const ErmakovModel& m) {
    return 0.5 * m.form().inner(s.xdot, s.ydot, s.xdot, s.ydot) - potential(s.x, s.y, s.t, m);
}

}  // namespace ermakov
