#pragma once

#include <cmath>

#include "ermakov/errors.hpp"

namespace ermakov {

/// Constant coefficients of the kinetic metric T = (A xdot^2 + 2B xdot ydot + C ydot^2)/2.
/// The same form defines the radius R^2 = A x^2 + 2B xy + C y^2.
struct QuadraticForm {
    double A = 1.0;
    double B = 0.0;
    double C = 1.0;

    template <class T>
    T radius_sq(const T& x, const T& y) const {
        return A * x * x + 2.0 * B * x * y + C * y * y;
    }
    /// Bilinear form q1^T M q2.
    template <class T>
    T inner(const T& x1, const T& y1, const T& x2, const T& y2) const {
        return A * x1 * x2 + B * (x1 * y2 + y1 * x2) + C * y1 * y2;
    }
};

inline double kappa(const QuadraticForm& form) { return form.A * form.C - form.B * form.B; }

template <class T>
struct BasicCartesianState {
    T t{}, x{}, y{}, xdot{}, ydot{};
};
using CartesianState = BasicCartesianState<double>;

struct PolarState {
    double t = 0.0;
    double R = 1.0;
    double theta = 0.0;
    double Rdot = 0.0;
    double thetadot = 0.0;
};

namespace detail {
inline constexpr double kDirectionFloor = 1e-14;

// A cos^2 + 2B sin cos + C sin^2, i.e. psi^-2.
inline double direction_weight(double theta, const QuadraticForm& f) {
    const double c = std::cos(theta), s = std::sin(theta);
    return f.A * c * c + 2.0 * f.B * s * c + f.C * s * s;
}
// d/dtheta of direction_weight.
inline double direction_weight_prime(double theta, const QuadraticForm& f) {
    return (f.C - f.A) * std::sin(2.0 * theta) + 2.0 * f.B * std::cos(2.0 * theta);
}
}  // namespace detail

/// psi^2(theta) = 1/(A cos^2 + 2B sin cos + C sin^2); the Euclidean radius is r = R psi.
inline double psi_sq(double theta, const QuadraticForm& form) {
    const double w = detail::direction_weight(theta, form);
    if (std::abs(w) < detail::kDirectionFloor)
        throw DegenerateDirection("quadratic form vanishes along theta = " + std::to_string(theta));
    return 1.0 / w;
}

inline PolarState to_polar(const CartesianState& s, const QuadraticForm& form) {
    const double r2 = s.x * s.x + s.y * s.y;
    if (!(r2 > 0.0)) throw DegenerateDirection("to_polar: state at the origin");
    const double R2 = form.radius_sq(s.x, s.y);
    if (!(R2 > 0.0))
        throw DegenerateDirection("to_polar: R^2 = " + std::to_string(R2) + " <= 0 outside the cone of the form");
    PolarState p;
    p.t = s.t;
    p.R = std::sqrt(R2);
    p.theta = std::atan2(s.y, s.x);
    p.Rdot = form.inner(s.x, s.y, s.xdot, s.ydot) / p.R;
    p.thetadot = (s.x * s.ydot - s.y * s.xdot) / r2;
    return p;
}

inline CartesianState from_polar(const PolarState& p, const QuadraticForm& form) {
    const double w = detail::direction_weight(p.theta, form);
    if (!(w > detail::kDirectionFloor))
        throw DegenerateDirection("from_polar: psi^2 undefined or negative at theta = " + std::to_string(p.theta));
    const double psi = 1.0 / std::sqrt(w);
    // dpsi/dtheta = -w'/(2 w^{3/2})
    const double dpsi = -0.5 * detail::direction_weight_prime(p.theta, form) * psi / w;
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    const double r = p.R * psi;
    const double rdot = p.Rdot * psi + p.R * dpsi * p.thetadot;
    CartesianState out;
    out.t = p.t;
    out.x = r * c;
    out.y = r * s;
    out.xdot = rdot * c - r * s * p.thetadot;
    out.ydot = rdot * s + r * c * p.thetadot;
    return out;
}

}  // namespace ermakov
