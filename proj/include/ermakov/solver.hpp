#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ermakov/dynamics.hpp"
#include "ermakov/errors.hpp"
#include "ermakov/geometry.hpp"
#include "ermakov/invariants.hpp"
#include "ermakov/model.hpp"
#include "ermakov/quadrature.hpp"

namespace ermakov {

namespace detail {
inline constexpr QuadratureOptions kSolverQuad{1e-14, 1e-12, 4000};
}

/// T(t) = integral of 1/rho^2 from t0 to t.
inline double rescale_time(const ErmakovModel& m, double t0, double t) {
    detail::require_point_symmetric(m, "rescale_time");
    if (m.point().rho.is_constant()) {
        const double r = m.rho(t0);
        return (t - t0) / (r * r);
    }
    return integrate_adaptive(
               [&](double tau) {
                   const double r = m.rho(tau);
                   return 1.0 / (r * r);
               },
               t0, t, detail::kSolverQuad)
        .value;
}

/// T at every entry of `times`, accumulated piecewise between consecutive entries.
inline std::vector<double> rescale_times(const ErmakovModel& m, double t0, std::span<const double> times) {
    std::vector<double> out;
    out.reserve(times.size());
    double prev_t = t0, prev_T = 0.0;
    for (double t : times) {
        prev_T += rescale_time(m, prev_t, t);
        prev_t = t;
        out.push_back(prev_T);
    }
    return out;
}

/// W(Rbar) = U(Rbar) + kappa I / Rbar^2.
struct EffectivePotential {
    const ErmakovModel* model = nullptr;
    double kappa_I = 0.0;

    double operator()(double r) const { return model->point().U.value(r) + kappa_I / (r * r); }
    double derivative(double r) const { return model->point().U.derivative(r) - 2.0 * kappa_I / (r * r * r); }
};

namespace detail {

/// One monotone stretch of the radial motion, parameterised by u on [0, u_max]. `dtau(u)` is
/// dT/du along the stretch and `radius(u)` the radius it maps to.
struct RadialLeg {
    std::function<double(double)> dtau;
    std::function<double(double)> radius;
    std::vector<double> nodes, tau, sigma;

    double dsigma(double u) const {
        const double r = radius(u);
        return dtau(u) / (r * r);
    }
    void build(double u_max, int panels) {
        nodes.clear();
        tau.assign(1, 0.0);
        sigma.assign(1, 0.0);
        nodes.push_back(0.0);
        for (int k = 1; k <= panels; ++k) append(u_max * k / panels);
        nodes.back() = u_max;
    }
    void append(double u) {
        const double a = nodes.back();
        tau.push_back(tau.back() + integrate_adaptive(dtau, a, u, kSolverQuad).value);
        sigma.push_back(sigma.back() +
                        integrate_adaptive([this](double v) { return dsigma(v); }, a, u, kSolverQuad).value);
        nodes.push_back(u);
    }
    double total_tau() const { return tau.back(); }
    double total_sigma() const { return sigma.back(); }

    std::size_t panel_of(double u) const {
        auto it = std::upper_bound(nodes.begin(), nodes.end(), u);
        if (it == nodes.begin()) return 0;
        return std::min<std::size_t>(static_cast<std::size_t>(it - nodes.begin()) - 1, nodes.size() - 2);
    }
    double tau_at(double u) const {
        const auto k = panel_of(u);
        return tau[k] + integrate_adaptive(dtau, nodes[k], u, kSolverQuad).value;
    }
    double sigma_at(double u) const {
        const auto k = panel_of(u);
        return sigma[k] + integrate_adaptive([this](double v) { return dsigma(v); }, nodes[k], u, kSolverQuad).value;
    }
    /// u with tau_at(u) = a, for a in [0, total_tau()].
    double invert(double a) const {
        if (a <= 0.0) return nodes.front();
        if (a >= total_tau()) return nodes.back();
        auto it = std::upper_bound(tau.begin(), tau.end(), a);
        const auto k = static_cast<std::size_t>(it - tau.begin()) - 1;
        double lo = nodes[k], hi = nodes[k + 1];
        double u = lo + (hi - lo) * (a - tau[k]) / (tau[k + 1] - tau[k]);
        for (int it2 = 0; it2 < 100; ++it2) {
            const double val = tau[k] + integrate_adaptive(dtau, nodes[k], u, kSolverQuad).value - a;
            if (std::abs(val) <= 1e-15 * std::max(1.0, std::abs(a))) break;
            if (val > 0.0)
                hi = u;
            else
                lo = u;
            double next = u - val / dtau(u);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (next == u || hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) {
                u = next;
                break;
            }
            u = next;
        }
        return u;
    }
};

}  // namespace detail

struct RadialSample {
    double Rbar = 0.0;
    double dRbar_dT = 0.0;
    double S = 0.0;  // integral of dT / Rbar^2 since T = 0
};

/// Rescaled radial motion 1/2 (dRbar/dT)^2 + W(Rbar) = J, solved by quadrature between the
/// turning points (roots of J - W). Immutable once constructed.
class RadialMotion {
public:
    enum class Kind { Constant, Bounded, Unbounded };

    /// `T_reach` bounds |T| for unbounded motion, whose table is only built that far.
    RadialMotion(const ErmakovModel& m, double I, double J, double Rbar0, double v0, double T_reach = 0.0)
        : W_{&m, m.kappa() * I}, J_(J), R0_(Rbar0), v0_(v0) {
        if (!(Rbar0 > 0.0) || !std::isfinite(Rbar0)) throw ForbiddenRegion("solve_radial: Rbar0 must be positive");
        const double scale = std::max(1.0, std::abs(J));
        const double g0 = J - W_(Rbar0);
        if (g0 < -1e-10 * scale)
            throw ForbiddenRegion("solve_radial: J = " + detail::format_number(J) + " < W(Rbar0) = " +
                                  detail::format_number(W_(Rbar0)));
        if (std::abs(g0 - 0.5 * v0 * v0) > 1e-10 * scale)
            throw InconsistentEnergy("solve_radial: J - W(Rbar0) = " + detail::format_number(g0) +
                                     " differs from (dRbar/dT)^2/2 = " + detail::format_number(0.5 * v0 * v0));
        const bool resting = 0.5 * v0 * v0 <= 1e-14 * scale;
        if (resting && std::abs(W_.derivative(Rbar0)) * Rbar0 <= 1e-9 * scale) {
            kind_ = Kind::Constant;
            return;
        }
        locate_turning_points(resting, scale);
        if (kind_ == Kind::Constant) return;
        build_tables(T_reach);
    }
    RadialMotion(ErmakovModel&&, double, double, double, double, double = 0.0) = delete;
    RadialMotion(const RadialMotion&) = delete;
    RadialMotion& operator=(const RadialMotion&) = delete;

    Kind kind() const { return kind_; }
    double inner() const { return r1_; }
    /// Outer turning point, infinite for unbounded motion.
    double outer() const { return r2_; }
    /// Radial period in T (bounded motion only).
    double period() const { return 2.0 * half_tau_; }
    const EffectivePotential& W() const { return W_; }
    double J() const { return J_; }

    std::vector<double> turning_points() const {
        if (kind_ == Kind::Constant) return {R0_};
        if (kind_ == Kind::Unbounded) return {r1_};
        return {r1_, r2_};
    }

    RadialSample at(double T) const {
        if (kind_ == Kind::Constant) return {R0_, 0.0, T / (R0_ * R0_)};
        const auto a = absolute(psi0_ + T);
        return {a.Rbar, a.dRbar_dT, a.S - S0_};
    }

private:
    struct PathPoint {
        double r, speed, sigma;
    };

    // Radius, |dRbar/dT| and accumulated sigma at distance a >= 0 along the outgoing path from r1.
    PathPoint outgoing(double a) const {
        if (a <= left_.total_tau()) {
            const double u = left_.invert(a);
            return {r1_ + u * u, 2.0 * u / left_.dtau(u), left_.sigma_at(u)};
        }
        if (kind_ == Kind::Bounded) {
            const double b = std::max(0.0, half_tau_ - a);
            const double u = right_.invert(b);
            return {r2_ - u * u, 2.0 * u / right_.dtau(u), left_.total_sigma() + right_.total_sigma() - right_.sigma_at(u)};
        }
        const double b = a - left_.total_tau();
        if (b > far_.total_tau())
            throw NoTurningPoint("unbounded radial motion leaves the tabulated range (Rbar > " +
                                 detail::format_number(far_.nodes.back()) + ")");
        const double r = far_.invert(b);
        return {r, 1.0 / far_.dtau(r), left_.total_sigma() + far_.sigma_at(r)};
    }

    RadialSample absolute(double psi) const {
        double n = 0.0;
        if (kind_ == Kind::Bounded) {
            n = std::floor((psi + half_tau_) / (2.0 * half_tau_));
            psi -= 2.0 * half_tau_ * n;
        }
        const double sgn = psi < 0.0 ? -1.0 : 1.0;
        const auto p = outgoing(std::abs(psi));
        return {p.r, sgn * p.speed, 2.0 * half_sigma_ * n + sgn * p.sigma};
    }

    double g(double r) const { return J_ - W_(r); }

    // Bisection between an allowed radius a (g >= 0) and a forbidden one b (g < 0).
    double bisect(double a, double b) const {
        for (int i = 0; i < 400; ++i) {
            const double mid = 0.5 * (a + b);
            if (mid == a || mid == b) break;
            (g(mid) >= 0.0 ? a : b) = mid;
        }
        return a;
    }

    // Scan from an allowed radius by factor `step` until g < 0; returns the root or +-inf.
    double scan(double from, double step, double limit) const {
        double prev = from;
        for (double r = from * step; step > 1.0 ? r < limit : r > limit; r *= step) {
            if (g(r) < 0.0) return bisect(prev, r);
            prev = r;
        }
        return step > 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }

    void locate_turning_points(bool resting, double scale) {
        const double inner_limit = R0_ * 1e-12, outer_limit = R0_ * 1e8;
        if (resting) {
            // Rbar0 is itself a turning point; the force decides which one.
            const bool is_inner = W_.derivative(R0_) < 0.0;
            const double dir = is_inner ? 1.0 : -1.0;
            double start = 0.0;
            for (double d = 1e-10; d < 0.5; d *= 4.0) {
                const double r = R0_ * (1.0 + dir * d);
                if (g(r) > 0.0) {
                    start = r;
                    break;
                }
                if (g(r) < -1e-12 * scale) break;
            }
            if (start == 0.0) {
                kind_ = Kind::Constant;
                return;
            }
            if (is_inner) {
                r1_ = R0_;
                r2_ = scan(start, 1.05, outer_limit);
            } else {
                r2_ = R0_;
                r1_ = scan(start, 1.0 / 1.05, inner_limit);
            }
        } else {
            r1_ = scan(R0_, 1.0 / 1.05, inner_limit);
            r2_ = scan(R0_, 1.05, outer_limit);
        }
        if (!(r1_ > 0.0))
            throw NoTurningPoint("radial motion has no inner turning point: Rbar reaches 0 (J = " +
                                 detail::format_number(J_) + ")");
        kind_ = std::isfinite(r2_) ? Kind::Bounded : Kind::Unbounded;
    }

    // Mean of W' over [r, r + d] by the 15-point Kronrod rule (exact enough for short intervals).
    double mean_slope(double r, double d) const {
        const double c = r + 0.5 * d, half = 0.5 * d;
        double acc = detail::kWgk[7] * W_.derivative(c);
        for (int j = 0; j < 7; ++j)
            acc += detail::kWgk[j] * (W_.derivative(c - half * detail::kXgk[j]) + W_.derivative(c + half * detail::kXgk[j]));
        return 0.5 * acc;
    }

    // dT/du on the stretch r = root + side u^2. Near the root J - W is evaluated as
    // -side u^2 <W'> instead of by subtraction, so the integrand stays accurate down to u = 0.
    double end_integrand(double u, double root, double side) const {
        const double u2 = u * u;
        double q = 0.0;  // (J - W)/u^2
        if (u2 <= 0.1 * root)
            q = -side * mean_slope(root, side * u2);
        else
            q = g(root + side * u2) / u2;
        if (!(q > 0.0)) q = std::abs(W_.derivative(root));
        return 2.0 / std::sqrt(2.0 * q);
    }

    void build_tables(double T_reach) {
        constexpr int panels = 64;
        const double r1 = r1_, r2 = r2_;
        left_.dtau = [this, r1](double u) { return end_integrand(u, r1, 1.0); };
        left_.radius = [r1](double u) { return r1 + u * u; };
        if (kind_ == Kind::Bounded) {
            const double mid = 0.5 * (r1 + r2);
            right_.dtau = [this, r2](double u) { return end_integrand(u, r2, -1.0); };
            right_.radius = [r2](double u) { return r2 - u * u; };
            left_.build(std::sqrt(mid - r1), panels);
            right_.build(std::sqrt(r2 - mid), panels);
            half_tau_ = left_.total_tau() + right_.total_tau();
            half_sigma_ = left_.total_sigma() + right_.total_sigma();
        } else {
            const double edge = 2.0 * r1;
            left_.build(std::sqrt(edge - r1), panels);
            far_.dtau = [this](double r) { return 1.0 / std::sqrt(2.0 * g(r)); };
            far_.radius = [](double r) { return r; };
            far_.nodes = {edge};
            far_.tau = {0.0};
            far_.sigma = {0.0};
            const double reach = std::abs(T_reach) + tau_from_inner(R0_) + 1.0;
            while (left_.total_tau() + far_.total_tau() < reach && far_.nodes.back() < R0_ * 1e12)
                far_.append(far_.nodes.back() * 1.25);
        }
        const double a0 = tau_from_inner(R0_);
        if (v0_ > 0.0)
            psi0_ = a0;
        else if (v0_ < 0.0)
            psi0_ = -a0;
        else
            psi0_ = R0_ == r1_ ? 0.0 : (kind_ == Kind::Bounded ? half_tau_ : a0);
        S0_ = absolute(psi0_).S;
    }

    double tau_from_inner(double r) const {
        if (r <= r1_) return 0.0;
        if (kind_ == Kind::Bounded) {
            const double mid = 0.5 * (r1_ + r2_);
            if (r <= mid) return left_.tau_at(std::sqrt(r - r1_));
            return half_tau_ - right_.tau_at(std::sqrt(std::max(0.0, r2_ - r)));
        }
        const double edge = left_.radius(left_.nodes.back());
        if (r <= edge) return left_.tau_at(std::sqrt(r - r1_));
        return left_.total_tau() + integrate_adaptive(far_.dtau, edge, r, detail::kSolverQuad).value;
    }

    EffectivePotential W_;
    double J_, R0_, v0_;
    Kind kind_ = Kind::Bounded;
    double r1_ = 0.0, r2_ = 0.0;
    detail::RadialLeg left_, right_, far_;
    double half_tau_ = 0.0, half_sigma_ = 0.0, psi0_ = 0.0, S0_ = 0.0;
};

inline RadialMotion solve_radial(const ErmakovModel& m, double I, double J, double Rbar0, double v0,
                                 double T_reach = 0.0) {
    detail::require_point_symmetric(m, "solve_radial");
    return RadialMotion(m, I, J, Rbar0, v0, T_reach);
}

RadialMotion solve_radial(ErmakovModel&&, double, double, double, double, double = 0.0) = delete;

// ---- Angular motion ------------------------------------------------------------------------

/// I - F(tan theta) - G(cot theta).
inline double angular_radicand(double theta, double I, const ErmakovModel& m) {
    double k = I;
    if (!m.f_zero()) k -= m.F(std::tan(theta));
    if (!m.g_zero()) k -= m.G(1.0 / std::tan(theta));
    return k;
}

/// h(theta; I) = sqrt(2) psi^-2(theta) sqrt(I - F(tan theta) - G(cot theta)), so that
/// R^2 |thetadot| = h along every motion with Ermakov invariant I.
inline double h_of_theta(double theta, double I, const ErmakovModel& m) {
    const double k = angular_radicand(theta, I, m);
    if (k < 0.0)
        throw AngularTurning("angular radicand I - F - G = " + detail::format_number(k) + " < 0 at theta = " +
                                 detail::format_number(theta),
                             theta);
    return std::sqrt(2.0 * k) * detail::direction_weight(theta, m.form());
}

/// dh/dtheta, with F' = f and G' = g through the chain rule.
inline double dh_dtheta(double theta, double I, const ErmakovModel& m) {
    const double k = angular_radicand(theta, I, m);
    if (!(k > 0.0))
        throw AngularTurning("dh/dtheta is singular where the angular radicand vanishes (theta = " +
                                 detail::format_number(theta) + ")",
                             theta);
    const double c = std::cos(theta), s = std::sin(theta);
    double dk = 0.0;
    if (!m.f_zero()) dk -= m.f_at(s / c) / (c * c);
    if (!m.g_zero()) dk += m.g_at(c / s) / (s * s);
    const double D = detail::direction_weight(theta, m.form()), dD = detail::direction_weight_prime(theta, m.form());
    return std::sqrt(2.0) * (dD * std::sqrt(k) + D * dk / (2.0 * std::sqrt(k)));
}

/// theta as a function of S = integral dT/Rbar^2, from Theta(theta) = integral dtheta/h = sign S.
/// Queries are cheapest in monotone order; the object caches the last solution and is not
/// safe for concurrent use.
class AngularMotion {
public:
    AngularMotion(const ErmakovModel& m, double I, double theta0, double sign)
        : m_(&m), I_(I), theta0_(theta0), sign_(sign), last_theta_(theta0) {
        if (sign == 0.0) {
            if (!m.uncoupled() && std::abs(coupling_torque(theta0)) > 0.0)
                throw AngularTurning("angular velocity vanishes at the initial point; theta is not monotone", theta0);
            frozen_ = true;
            return;
        }
        const double h0 = h_of_theta(theta0, I, m);
        if (!(h0 > 0.0)) throw AngularTurning("h vanishes at the initial angle", theta0);
    }

    AngularMotion(ErmakovModel&&, double, double, double) = delete;

    /// Theta(theta) = integral from theta0 of dtheta'/h.
    double Theta(double theta) const { return integral(theta0_, theta); }

    double theta_at(double S) {
        if (frozen_) return theta0_;
        const double target = sign_ * S;
        double lo = last_theta_, Tlo = last_Theta_;
        if (target == Tlo) return lo;
        const double dir = target > Tlo ? 1.0 : -1.0;
        // Walk out until the target is bracketed or the radicand closes.
        double step = std::abs(target - Tlo) * h_of_theta(lo, I_, *m_) * 1.05 + 1e-12;
        double hi, Thi;
        const double scale = std::max(1.0, std::abs(I_));
        for (;;) {
            const double trial = lo + dir * step;
            // Close to a zero of the radicand the integrand is handled from the edge instead.
            if (!open(trial) || angular_radicand(trial, I_, *m_) < 1e-3 * scale)
                return near_edge(lo, Tlo, trial, dir, target, scale);
            const double Ttrial = Tlo + integral(lo, trial);
            if ((Ttrial - target) * dir >= 0.0) {
                hi = trial;
                Thi = Ttrial;
                break;
            }
            lo = trial;
            Tlo = Ttrial;
            step *= 2.0;
        }
        // Safeguarded Newton on Theta(theta) - target inside [lo, hi].
        double a = lo, Ta = Tlo, b = hi;
        double th = lo + (hi - lo) * (target - Tlo) / (Thi - Tlo);
        double Tth = Ta;
        for (int it = 0; it < 200; ++it) {
            Tth = Ta + integral(a, th);
            const double res = Tth - target;
            if (std::abs(res) <= 1e-14 * std::max(1.0, std::abs(target))) break;
            if (res * dir < 0.0) {
                a = th;
                Ta = Tth;
            } else {
                b = th;
            }
            double next = th;
            try {
                next = th - res * h_of_theta(th, I_, *m_);
            } catch (const AngularTurning&) {
                next = 0.5 * (a + b);
            }
            const bool inside = (next - a) * (next - b) < 0.0;
            if (!inside) next = 0.5 * (a + b);
            if (next == th || std::abs(b - a) <= 2 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(th))) {
                th = next;
                Tth = Ta + integral(a, th);
                break;
            }
            th = next;
        }
        last_theta_ = th;
        last_Theta_ = Tth;
        return th;
    }

private:
    // Solves Theta = target on [lo, edge), where edge is the last open angle beyond lo. With
    // theta = edge - dir w^2 the integrand 2w/h is smooth in w, and the radicand is taken as
    // -dir w^2 <dK/dtheta> so it does not suffer from cancellation next to its zero.
    double near_edge(double lo, double Tlo, double trial, double dir, double target, double scale) {
        double closed = trial, d = std::abs(trial - lo);
        for (int i = 0; i < 64 && open(closed); ++i, d *= 2.0) closed += dir * d;
        if (open(closed)) throw AngularTurning("no angular boundary found beyond theta = " + detail::format_number(trial), trial);
        const double edge = boundary(lo, closed);
        const bool turning = angular_radicand(edge, I_, *m_) <= 1e-8 * scale;
        const auto& form = m_->form();
        auto iw = [&](double w) {
            const double w2 = w * w, th = edge - dir * w2;
            const double D = detail::direction_weight(th, form);
            if (turning && w2 <= 0.25) {
                const double q = -dir * mean_torque(th, edge);
                return 2.0 / (std::sqrt(2.0 * std::max(q, 0.0)) * D);
            }
            const double k = angular_radicand(th, I_, *m_);
            return 2.0 * w / (std::sqrt(2.0 * k) * D);
        };
        const double wmax = std::sqrt(std::max(0.0, dir * (edge - lo)));
        const double A_edge = integrate_adaptive(iw, 0.0, wmax, detail::kSolverQuad).value;
        const double A_target = dir * (target - Tlo);
        if (A_target > A_edge * (1.0 + 1e-12) + 1e-14) {
            if (turning)
                throw AngularTurning("angular motion turns at theta = " + detail::format_number(edge) +
                                         "; the separable quadrature needs monotone theta",
                                     edge);
            throw AxisSingularity("angular motion reaches theta = " + detail::format_number(edge) +
                                  " where the model is singular");
        }
        // integral_0^w iw = A_edge - A_target
        const double B = std::max(0.0, A_edge - A_target);
        double a = 0.0, b = wmax, w = wmax * (A_edge > 0.0 ? B / A_edge : 0.0);
        for (int it = 0; it < 200; ++it) {
            const double res = integrate_adaptive(iw, 0.0, w, detail::kSolverQuad).value - B;
            if (std::abs(res) <= 1e-14 * std::max(1.0, std::abs(target))) break;
            (res > 0.0 ? b : a) = w;
            double next = w - res / iw(w);
            if (!(next > a && next < b)) next = 0.5 * (a + b);
            if (next == w || b - a <= 2 * std::numeric_limits<double>::epsilon() * std::max(1.0, wmax)) {
                w = next;
                break;
            }
            w = next;
        }
        last_theta_ = edge - dir * w * w;
        last_Theta_ = target;
        return last_theta_;
    }

    // Average of dK/dtheta over [a, b] by the 15-point Kronrod rule.
    double mean_torque(double a, double b) const {
        const double c = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = detail::kWgk[7] * coupling_torque(c);
        for (int j = 0; j < 7; ++j)
            acc += detail::kWgk[j] * (coupling_torque(c - half * detail::kXgk[j]) + coupling_torque(c + half * detail::kXgk[j]));
        return 0.5 * acc;
    }

    // dK/dtheta for K = I - F(tan theta) - G(cot theta).
    double coupling_torque(double theta) const {
        const double c = std::cos(theta), s = std::sin(theta);
        double dk = 0.0;
        if (!m_->f_zero()) dk -= m_->f_at(s / c) / (c * c);
        if (!m_->g_zero()) dk += m_->g_at(c / s) / (s * s);
        return dk;
    }

    double integral(double a, double b) const {
        if (a == b) return 0.0;
        QuadratureOptions opt = detail::kSolverQuad;
        opt.max_subdivisions = 20000;
        return integrate_adaptive(
                   [this](double th) {
                       const double h = h_of_theta(th, I_, *m_);
                       return h > 0.0 ? 1.0 / h : 0.0;
                   },
                   a, b, opt)
            .value;
    }

    // h > 0 at th, without leaving the initial quadrant when the model is coupled.
    bool open(double th) const {
        if (!m_->uncoupled()) {
            const double c0 = std::cos(theta0_), s0 = std::sin(theta0_);
            if (std::cos(th) * c0 <= 0.0 || std::sin(th) * s0 <= 0.0) return false;
        }
        return angular_radicand(th, I_, *m_) > 0.0 && detail::direction_weight(th, m_->form()) > 0.0;
    }

    // Last angle between an allowed `inside` and a closed `outside` where h is still positive.
    double boundary(double inside, double outside) const {
        for (int i = 0; i < 400; ++i) {
            const double mid = 0.5 * (inside + outside);
            if (mid == inside || mid == outside) break;
            (open(mid) ? inside : outside) = mid;
        }
        return inside;
    }

    const ErmakovModel* m_;
    double I_, theta0_, sign_;
    bool frozen_ = false;
    double last_theta_, last_Theta_ = 0.0;
};

// ---- Full solution -------------------------------------------------------------------------

struct QuadratureSolution {
    double I = 0.0, J = 0.0;
    RadialMotion::Kind radial_kind = RadialMotion::Kind::Constant;
    std::vector<double> turning_points;
    std::vector<double> t, T, Rbar, dRbar_dT, S, theta;
    Trajectory trajectory;
};

/// Solves a point-symmetric model through the invariants: rescaled time, radial energy
/// quadrature, separable angular quadrature, and back to Cartesian samples at `times`.
inline QuadratureSolution solve_by_quadrature(const ErmakovModel& m, const CartesianState& init,
                                              std::span<const double> times, double axis_guard = 1e-8) {
    detail::require_point_symmetric(m, "solve_by_quadrature");
    QuadratureSolution out;
    out.I = ermakov_I(init, m);
    out.J = noether_J(init, m);
    const auto p0 = to_polar(init, m.form());
    const auto j0 = m.rho_jet(init.t);
    const double Rbar0 = p0.R / j0.rho;
    const double v0 = j0.rho * p0.Rdot - j0.rho_dot * p0.R;

    out.t.assign(times.begin(), times.end());
    out.T = rescale_times(m, init.t, times);
    double reach = 0.0;
    for (double T : out.T) reach = std::max(reach, std::abs(T));
    const RadialMotion radial(m, out.I, out.J, Rbar0, v0, reach);
    out.radial_kind = radial.kind();
    out.turning_points = radial.turning_points();

    const double Lz = init.x * init.ydot - init.y * init.xdot;
    const double sign = Lz > 0.0 ? 1.0 : (Lz < 0.0 ? -1.0 : 0.0);
    AngularMotion angular(m, out.I, p0.theta, sign);

    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto r = radial.at(out.T[i]);
        const double th = angular.theta_at(r.S);
        out.Rbar.push_back(r.Rbar);
        out.dRbar_dT.push_back(r.dRbar_dT);
        out.S.push_back(r.S);
        out.theta.push_back(th);

        const auto j = m.rho_jet(times[i]);
        PolarState p;
        p.t = times[i];
        p.R = j.rho * r.Rbar;
        p.theta = th;
        p.Rdot = j.rho_dot * r.Rbar + r.dRbar_dT / j.rho;
        p.thetadot = sign == 0.0 ? 0.0 : sign * h_of_theta(th, out.I, m) / (p.R * p.R);
        out.trajectory.samples.push_back(detail::make_sample(from_polar(p, m.form()), m, axis_guard));
    }
    if (out.trajectory.samples.size() >= 2) out.trajectory.drift = drift_report(out.trajectory);
    return out;
}

inline QuadratureSolution solve_by_quadrature(const ErmakovModel& m, const CartesianState& init, double t_end,
                                              int samples) {
    const auto grid = uniform_grid(init.t, t_end, samples);
    return solve_by_quadrature(m, init, std::span<const double>(grid));
}

}  // namespace ermakov
