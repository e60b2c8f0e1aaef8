#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ermakov/dynamics.hpp"
#include "ermakov/errors.hpp"
#include "ermakov/geometry.hpp"
#include "ermakov/invariants.hpp"
#include "ermakov/model.hpp"
#include "ermakov/ode.hpp"
#include "ermakov/solver.hpp"

namespace ermakov {

/// U1: U = a/s^2 - b/s, linearised with alpha = rho.
/// U2: U = a/s^2 + c s^2/2, linearised with alpha from alpha'' + (c/rho^3 - rhoddot) alpha/rho = 0.
struct LinearisableClass {
    enum class Kind { U1, U2, NotLinearisable };
    Kind kind = Kind::NotLinearisable;
    double a = 0.0, b = 0.0, c = 0.0;
    double residual = 0.0;  // max |U - fit| over the sample, 0 for parametric potentials

    bool linearisable() const { return kind != Kind::NotLinearisable; }
    double forcing() const { return kind == Kind::U1 ? b : 0.0; }
    std::string describe() const {
        switch (kind) {
            case Kind::U1: return "U1(a=" + detail::format_number(a) + ", b=" + detail::format_number(b) + ")";
            case Kind::U2: return "U2(a=" + detail::format_number(a) + ", c=" + detail::format_number(c) + ")";
            default: return "NotLinearisable";
        }
    }
};

namespace detail {
struct Fit2 {
    double p = 0.0, q = 0.0, residual = std::numeric_limits<double>::infinity();
    bool ok = false;
};

// Least squares u ~ p e1 + q e2 by modified Gram-Schmidt, with pointwise acceptance.
inline Fit2 fit_two(const std::vector<double>& u, const std::vector<double>& e1, const std::vector<double>& e2) {
    const std::size_t n = u.size();
    auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
        return s;
    };
    const double n1 = std::sqrt(dot(e1, e1));
    std::vector<double> q1(n), q2(e2);
    for (std::size_t i = 0; i < n; ++i) q1[i] = e1[i] / n1;
    const double r12 = dot(q1, e2);
    for (std::size_t i = 0; i < n; ++i) q2[i] -= r12 * q1[i];
    const double n2 = std::sqrt(dot(q2, q2));
    for (auto& v : q2) v /= n2;
    const double c1 = dot(q1, u), c2 = dot(q2, u);
    Fit2 out;
    out.q = c2 / n2;
    out.p = (c1 - r12 * out.q) / n1;
    out.residual = 0.0;
    out.ok = true;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::abs(u[i] - out.p * e1[i] - out.q * e2[i]);
        out.residual = std::max(out.residual, r);
        if (r > 1e-9 * std::max(1.0, std::abs(u[i]))) out.ok = false;
    }
    if (!std::isfinite(out.p) || !std::isfinite(out.q)) out.ok = false;
    return out;
}
}  // namespace detail

/// Parametric potentials classify exactly; expressions are fitted on 32 log-spaced points of [0.2, 5].
inline LinearisableClass classify_linearisable(const ErmakovModel& m) {
    LinearisableClass out;
    if (!m.point_symmetric()) return out;
    const auto& v = m.point().U.variant();
    if (auto* p = std::get_if<InverseSquareCoulomb>(&v)) {
        out.kind = LinearisableClass::Kind::U1;
        out.a = p->a;
        out.b = p->b;
        return out;
    }
    if (auto* p = std::get_if<InverseSquareHarmonic>(&v)) {
        out.kind = LinearisableClass::Kind::U2;
        out.a = p->a;
        out.c = p->c;
        return out;
    }
    constexpr int n = 32;
    std::vector<double> u(n), inv2(n), minv(n), half_sq(n);
    try {
        for (int i = 0; i < n; ++i) {
            const double s = 0.2 * std::pow(25.0, i / double(n - 1));
            u[i] = m.point().U.value(s);
            if (!std::isfinite(u[i])) return out;
            inv2[i] = 1.0 / (s * s);
            minv[i] = -1.0 / s;
            half_sq[i] = 0.5 * s * s;
        }
    } catch (const EvalDomainError&) {
        return out;
    }
    const auto f1 = detail::fit_two(u, inv2, minv), f2 = detail::fit_two(u, inv2, half_sq);
    if (f1.ok && (!f2.ok || f1.residual <= f2.residual)) {
        out.kind = LinearisableClass::Kind::U1;
        out.a = f1.p;
        out.b = f1.q;
        out.residual = f1.residual;
    } else if (f2.ok) {
        out.kind = LinearisableClass::Kind::U2;
        out.a = f2.p;
        out.c = f2.q;
        out.residual = f2.residual;
    } else {
        out.residual = std::min(f1.residual, f2.residual);
    }
    return out;
}

struct AlphaJet {
    double alpha = 0.0, alpha_dot = 0.0, alpha_ddot = 0.0;
};

/// alpha(t) for the linearising variable phi = alpha/R: rho itself for U1, a sampled solution of
/// the alpha equation for U2.
class AlphaFunction {
public:
    AlphaFunction() = default;

    static AlphaFunction from_rho(const ErmakovModel& m) {
        AlphaFunction a;
        a.m_ = &m;
        a.closed_ = true;
        return a;
    }
    static AlphaFunction from_rho(ErmakovModel&&) = delete;

    bool closed_form() const { return closed_; }
    double t_begin() const { return t0_; }
    double t_end() const { return t1_; }

    AlphaJet operator()(double t) const {
        if (closed_) {
            const auto j = m_->rho_jet(t);
            return {j.rho, j.rho_dot, j.rho_ddot};
        }
        if (steps_.empty()) return {1.0, 0.0, ddot(t, 1.0)};
        // Slight overshoots of the window reuse the nearest step's polynomial.
        const bool fwd = t1_ >= t0_;
        auto it = std::lower_bound(steps_.begin(), steps_.end(), t, [fwd](const OdeStep<2>& s, double v) {
            return fwd ? s.t1() < v : s.t1() > v;
        });
        if (it == steps_.end()) --it;
        const auto y = t == it->t1() ? it->y1 : (*it)(t);
        return {y[0], y[1], ddot(t, y[0])};
    }

private:
    friend AlphaFunction alpha_solve(const ErmakovModel&, const LinearisableClass&, double, double);

    double ddot(double t, double alpha) const {
        const auto j = m_->rho_jet(t);
        return -(c_ / (j.rho * j.rho * j.rho) - j.rho_ddot) * alpha / j.rho;
    }

    const ErmakovModel* m_ = nullptr;
    bool closed_ = false;
    double c_ = 0.0, t0_ = 0.0, t1_ = 0.0;
    std::vector<OdeStep<2>> steps_;
};

/// U1: alpha = rho. U2: alpha(t0) = 1, alphadot(t0) = 0 integrated over [t0, t1] (either order).
inline AlphaFunction alpha_solve(const ErmakovModel& m, const LinearisableClass& cls, double t0, double t1) {
    detail::require_point_symmetric(m, "alpha_solve");
    if (!cls.linearisable()) throw Error("alpha_solve: the potential is not linearisable");
    if (cls.kind == LinearisableClass::Kind::U1) return AlphaFunction::from_rho(m);
    AlphaFunction a;
    a.m_ = &m;
    a.c_ = cls.c;
    a.t0_ = t0;
    a.t1_ = t1;
    if (t1 == t0) return a;
    OdeOptions opt;
    opt.rel_tol = 1e-13;
    opt.abs_tol = 1e-15;
    opt.dense = true;
    const double stops[1] = {t1};
    integrate_dop853<2>(
        [&a](double t, const std::array<double, 2>& y) { return std::array<double, 2>{y[1], a.ddot(t, y[0])}; }, t0,
        std::array<double, 2>{1.0, 0.0}, std::span<const double>(stops), opt, [&](const OdeStep<2>& step, bool) {
            if (step.h == 0.0) return true;
            if (step.y1[0] <= 0.0) {
                double lo = step.t0, hi = step.t1();
                for (int i = 0; i < 200 && lo != hi; ++i) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid == lo || mid == hi) break;
                    (step(mid)[0] > 0.0 ? lo : hi) = mid;
                }
                throw AlphaVanishes("alpha vanishes at t = " + detail::format_number(hi) +
                                        "; the linearising chart breaks down",
                                    hi);
            }
            a.steps_.push_back(step);
            return true;
        });
    return a;
}

/// Vbar reconstructed from the linearisable form a/R^2 - b/(alpha R) - alphaddot R^2/(2 alpha).
inline double linear_vbar(double R, double t, const LinearisableClass& cls, const AlphaFunction& alpha) {
    const auto j = alpha(t);
    return cls.a / (R * R) - cls.forcing() / (j.alpha * R) - j.alpha_ddot * R * R / (2.0 * j.alpha);
}

namespace detail {
// phi'' from h^2 phi'' + h h' phi' + 2(kappa I + a) phi = b.
inline double phi_second(double theta, double phi, double dphi, double I, const LinearisableClass& cls,
                         const ErmakovModel& m) {
    const double h = h_of_theta(theta, I, m);
    if (!(h > 0.0)) throw AngularTurning("h vanishes at theta = " + format_number(theta), theta);
    const double dh = dh_dtheta(theta, I, m);
    return (cls.forcing() - 2.0 * (m.kappa() * I + cls.a) * phi - h * dh * dphi) / (h * h);
}

inline void require_quadrant(const ErmakovModel& m, double theta0, double theta) {
    if (m.uncoupled()) return;
    if (std::cos(theta) * std::cos(theta0) <= 0.0 || std::sin(theta) * std::sin(theta0) <= 0.0)
        throw AxisSingularity("angle " + format_number(theta) + " leaves the initial quadrant");
}
}  // namespace detail

struct LinearTable {
    std::vector<double> theta, phi, dphi;
};

/// phi(theta) sampled at `thetas` (monotone, starting from the initial angle).
inline LinearTable integrate_linear(const ErmakovModel& m, double I, const LinearisableClass& cls, double phi0,
                                    double dphi0, std::span<const double> thetas) {
    if (!cls.linearisable()) throw Error("integrate_linear: the potential is not linearisable");
    LinearTable out;
    if (thetas.empty()) return out;
    const double th0 = thetas.front();
    out.theta.push_back(th0);
    out.phi.push_back(phi0);
    out.dphi.push_back(dphi0);
    if (thetas.size() == 1) return out;
    OdeOptions opt;
    opt.rel_tol = 1e-12;
    opt.abs_tol = 1e-14;
    integrate_dop853<2>(
        [&](double th, const std::array<double, 2>& y) {
            detail::require_quadrant(m, th0, th);
            return std::array<double, 2>{y[1], detail::phi_second(th, y[0], y[1], I, cls, m)};
        },
        th0, std::array<double, 2>{phi0, dphi0}, thetas.subspan(1), opt, [&](const OdeStep<2>& step, bool at_stop) {
            if (at_stop && step.h != 0.0) {
                out.theta.push_back(step.t1());
                out.phi.push_back(step.y1[0]);
                out.dphi.push_back(step.y1[1]);
            }
            return true;
        });
    return out;
}

/// Initial data of the linear problem: phi = alpha/R and dphi/dtheta = phidot/thetadot.
struct LinearStart {
    double t0 = 0.0, theta0 = 0.0, phi0 = 0.0, dphi0 = 0.0;
    double sign = 1.0;  // sign of R^2 thetadot
};

inline LinearStart linear_start(const ErmakovModel& m, const AlphaFunction& alpha, const CartesianState& init) {
    const auto p = to_polar(init, m.form());
    if (p.thetadot == 0.0) throw AngularTurning("linearization needs a nonzero angular velocity", p.theta);
    const auto a = alpha(init.t);
    const double phidot = a.alpha_dot / p.R - a.alpha * p.Rdot / (p.R * p.R);
    return {init.t, p.theta, a.alpha / p.R, phidot / p.thetadot, p.thetadot > 0.0 ? 1.0 : -1.0};
}

struct LinearSolution {
    LinearisableClass cls;
    double I = 0.0;
    std::vector<double> theta, phi;
    Trajectory trajectory;
    std::string truncated;  // non-empty when phi reached 0 before the last requested time
};

/// Integrates phi together with t(theta) = t0 + integral sign alpha^2/(phi^2 h) dtheta and samples
/// the original motion at `times` (monotone, first entry at or after start.t0 in the direction of
/// travel).
inline LinearSolution reconstruct(const ErmakovModel& m, double I, const LinearisableClass& cls,
                                  const AlphaFunction& alpha, const LinearStart& start, std::span<const double> times,
                                  double axis_guard = 1e-8) {
    if (!cls.linearisable()) throw Error("reconstruct: the potential is not linearisable");
    LinearSolution out;
    out.cls = cls;
    out.I = I;
    if (times.empty()) return out;
    const double tdir = times.back() >= start.t0 ? 1.0 : -1.0;
    const double s = start.sign;

    auto emit = [&](double t, double th, double phi, double dphi) {
        if (!(phi > 0.0)) throw UnboundedMotion("phi = alpha/R reached 0 at theta = " + detail::format_number(th));
        const auto a = alpha(t);
        PolarState p;
        p.t = t;
        p.theta = th;
        p.R = a.alpha / phi;
        p.thetadot = s * h_of_theta(th, I, m) / (p.R * p.R);
        const double phidot = dphi * p.thetadot;
        p.Rdot = a.alpha_dot / phi - a.alpha * phidot / (phi * phi);
        out.theta.push_back(th);
        out.phi.push_back(phi);
        out.trajectory.samples.push_back(detail::make_sample(from_polar(p, m.form()), m, axis_guard));
    };

    std::size_t next = 0;
    while (next < times.size() && times[next] == start.t0) {
        emit(start.t0, start.theta0, start.phi0, start.dphi0);
        ++next;
    }
    using S3 = std::array<double, 3>;
    auto rhs = [&](double th, const S3& y) {
        detail::require_quadrant(m, start.theta0, th);
        if (!(y[0] > 0.0)) throw UnboundedMotion("phi = alpha/R reached 0 at theta = " + detail::format_number(th));
        const double a = alpha(y[2]).alpha;
        const double h = h_of_theta(th, I, m);
        return S3{y[1], detail::phi_second(th, y[0], y[1], I, cls, m), s * a * a / (y[0] * y[0] * h)};
    };
    if (next < times.size()) {
        OdeOptions opt;
        opt.rel_tol = 1e-12;
        opt.abs_tol = 1e-14;
        opt.dense = true;
        // theta runs forward when t does and R^2 thetadot > 0.
        const double th_dir = s * tdir;
        const double stops[1] = {start.theta0 + th_dir * 1e7};
        double last_theta = start.theta0;
        try {
            integrate_dop853<3>(rhs, start.theta0, S3{start.phi0, start.dphi0, start.t0}, std::span<const double>(stops),
                                opt, [&](const OdeStep<3>& step, bool) {
                                    if (step.h == 0.0) return true;
                                    last_theta = step.t1();
                                    while (next < times.size() && (times[next] - step.y1[2]) * tdir <= 0.0) {
                                        const double target = times[next];
                                        // t(theta) is monotone across the step.
                                        double th = step.t1();
                                        if (step.y1[2] != target) {
                                            double lo = step.t0, hi = step.t1();
                                            for (int i = 0; i < 200; ++i) {
                                                const double mid = 0.5 * (lo + hi);
                                                if (mid == lo || mid == hi) break;
                                                ((step(mid)[2] - target) * tdir < 0.0 ? lo : hi) = mid;
                                            }
                                            th = 0.5 * (lo + hi);
                                        }
                                        const auto y = th == step.t1() ? step.y1 : step(th);
                                        emit(target, th, y[0], y[1]);
                                        ++next;
                                    }
                                    return next < times.size();
                                });
        } catch (const UnboundedMotion& e) {
            out.truncated = e.what();
        } catch (const StepUnderflow& e) {
            // Stalling where h -> 0 means theta turns, which the theta parametrisation cannot follow.
            if (angular_radicand(last_theta, I, m) <= 1e-6 * std::max(1.0, std::abs(I)))
                throw AngularTurning("angular motion turns near theta = " + detail::format_number(last_theta) +
                                         "; the linearization in theta needs monotone theta",
                                     last_theta);
            out.truncated = std::string("reconstruction stalled: ") + e.what();
        }
        if (out.truncated.empty() && next < times.size())
            out.truncated = "theta range exhausted before t = " + detail::format_number(times[next]);
    }
    if (out.trajectory.samples.size() >= 2) out.trajectory.drift = drift_report(out.trajectory);
    return out;
}

/// Full pipeline from a Cartesian initial state: classify, choose alpha, integrate phi in theta and
/// map back to the original variables.
inline LinearSolution solve_by_linearization(const ErmakovModel& m, const CartesianState& init,
                                             std::span<const double> times, double axis_guard = 1e-8) {
    detail::require_point_symmetric(m, "solve_by_linearization");
    const auto cls = classify_linearisable(m);
    if (!cls.linearisable())
        throw Error("potential U = " + m.point().U.describe() + " is not linearisable (fit residual " +
                    detail::format_number(cls.residual) + ")");
    double t_far = init.t;
    for (double t : times)
        if (std::abs(t - init.t) > std::abs(t_far - init.t)) t_far = t;
    const auto alpha = alpha_solve(m, cls, init.t, t_far);
    const double I = ermakov_I(init, m);
    return reconstruct(m, I, cls, alpha, linear_start(m, alpha, init), times, axis_guard);
}

inline LinearSolution solve_by_linearization(const ErmakovModel& m, const CartesianState& init, double t_end,
                                             int samples) {
    const auto grid = uniform_grid(init.t, t_end, samples);
    return solve_by_linearization(m, init, std::span<const double>(grid));
}

}  // namespace ermakov
