#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ermakov/errors.hpp"
#include "ermakov/geometry.hpp"
#include "ermakov/invariants.hpp"
#include "ermakov/model.hpp"
#include "ermakov/ode.hpp"

namespace ermakov {

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    bool dense_output = false;  // sample grids by interpolation instead of landing steps on them
    double axis_guard = 1e-8;
};

struct Acceleration {
    double xddot = 0.0;
    double yddot = 0.0;
};

/// xddot = -omega^2 x + f(y/x)/(y x^2), yddot = -omega^2 y + g(x/y)/(x y^2).
inline Acceleration eom_rhs(const CartesianState& s, const ErmakovModel& m, double axis_guard = 1e-8) {
    const bool coupled = !m.uncoupled();
    if (coupled) {
        const double r = std::hypot(s.x, s.y);
        if (std::min(std::abs(s.x), std::abs(s.y)) < axis_guard * r || r == 0.0)
            throw AxisSingularity("trajectory reached a coordinate axis at t = " + std::to_string(s.t) +
                                  " (x = " + std::to_string(s.x) + ", y = " + std::to_string(s.y) + ")");
    }
    const double R2 = m.form().radius_sq(s.x, s.y);
    if (!(R2 > 0.0)) throw DegenerateDirection("eom_rhs: R^2 <= 0 at t = " + std::to_string(s.t));
    const double w2 = omega_sq(std::sqrt(R2), std::atan2(s.y, s.x), s.t, m);
    Acceleration a{-w2 * s.x, -w2 * s.y};
    if (!m.f_zero()) a.xddot += m.f_at(s.y / s.x) / (s.y * s.x * s.x);
    if (!m.g_zero()) a.yddot += m.g_at(s.x / s.y) / (s.x * s.y * s.y);
    return a;
}

struct TrajectorySample {
    double t = 0.0;
    CartesianState state;
    double I = 0.0;
    std::optional<double> J;
    std::optional<double> H;
    Acceleration acc;
};

struct DriftEntry {
    std::string name;
    double drift = 0.0;
    double at = 0.0;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    OdeStats stats;
    std::vector<DriftEntry> drift;

    const DriftEntry* find_drift(const std::string& name) const {
        for (const auto& d : drift)
            if (d.name == name) return &d;
        return nullptr;
    }
};

/// max_t |Q(t) - Q(t0)| / max(1, |Q(t0)|) for each recorded invariant.
inline std::vector<DriftEntry> drift_report(const Trajectory& tr) {
    if (tr.samples.size() < 2) throw Error("drift_report needs at least two samples");
    auto measure = [&](const std::string& name, auto&& get) {
        const double q0 = get(tr.samples.front());
        DriftEntry d{name, 0.0, tr.samples.front().t};
        const double scale = std::max(1.0, std::abs(q0));
        for (const auto& s : tr.samples) {
            const double v = std::abs(get(s) - q0) / scale;
            if (v > d.drift) {
                d.drift = v;
                d.at = s.t;
            }
        }
        return d;
    };
    std::vector<DriftEntry> out;
    out.push_back(measure("I", [](const TrajectorySample& s) { return s.I; }));
    if (tr.samples.front().J) out.push_back(measure("J", [](const TrajectorySample& s) { return *s.J; }));
    if (tr.samples.front().H) out.push_back(measure("H", [](const TrajectorySample& s) { return *s.H; }));
    return out;
}

inline std::vector<double> uniform_grid(double t0, double t1, int samples) {
    if (samples < 2) return {t0, t1};
    std::vector<double> out(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) out[static_cast<std::size_t>(i)] = t0 + (t1 - t0) * i / (samples - 1);
    out.back() = t1;
    return out;
}

namespace detail {
inline TrajectorySample make_sample(const CartesianState& s, const ErmakovModel& m, double axis_guard) {
    TrajectorySample out;
    out.t = s.t;
    out.state = s;
    out.I = ermakov_I(s, m);
    if (m.point_symmetric()) {
        out.J = noether_J(s, m);
        out.H = hamiltonian(s, m);
    }
    out.acc = eom_rhs(s, m, axis_guard);
    return out;
}
inline CartesianState unpack(double t, const std::array<double, 4>& y) { return {t, y[0], y[1], y[2], y[3]}; }

/// Right-hand side of the first-order system. For coupled models every evaluation must stay in
/// the open quadrant of the initial point, so a step cannot jump over a guarded axis when the
/// singular factors happen to cancel.
inline auto first_order_rhs(const ErmakovModel& m, const CartesianState& init, double axis_guard) {
    const bool coupled = !m.uncoupled();
    const bool xpos = init.x > 0.0, ypos = init.y > 0.0;
    return [&m, coupled, xpos, ypos, axis_guard](double t, const std::array<double, 4>& y) {
        if (coupled && ((y[0] > 0.0) != xpos || (y[1] > 0.0) != ypos))
            throw AxisSingularity("trajectory crossed a coordinate axis near t = " + std::to_string(t));
        const auto a = eom_rhs(unpack(t, y), m, axis_guard);
        return std::array<double, 4>{y[2], y[3], a.xddot, a.yddot};
    };
}
}  // namespace detail

/// Integrate the equations of motion from `init`, sampling at `times` (monotone, in the
/// direction of integration; entries at init.t are sampled directly).
inline Trajectory integrate(const ErmakovModel& m, const CartesianState& init, std::span<const double> times,
                            const IntegratorConfig& cfg = {}) {
    if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0)) throw Error("integrator tolerances must be positive");
    for (double v : {init.x, init.y, init.xdot, init.ydot, init.t})
        if (!std::isfinite(v)) throw Error("initial state must be finite");
    Trajectory tr;
    if (times.empty()) return tr;
    if (m.point_symmetric()) {
        // Vbar ~ 1/rho^4 near a zero of rho, so the integrator would stall before reaching it.
        (void)m.rho(init.t);
        for (double t : times) (void)m.rho(t);
    }
    OdeOptions opt;
    opt.rel_tol = cfg.rel_tol;
    opt.abs_tol = cfg.abs_tol;
    opt.max_step = cfg.max_step;
    opt.dense = cfg.dense_output;
    const auto rhs = detail::first_order_rhs(m, init, cfg.axis_guard);
    const double dir = times.back() >= init.t ? 1.0 : -1.0;
    std::size_t next = 0;
    while (next < times.size() && (times[next] - init.t) * dir <= 0.0) {
        CartesianState s = init;
        s.t = times[next];
        if (times[next] == init.t) tr.samples.push_back(detail::make_sample(s, m, cfg.axis_guard));
        ++next;
    }
    std::array<double, 4> y0{init.x, init.y, init.xdot, init.ydot};
    if (next < times.size()) {
        const std::vector<double> stops = cfg.dense_output ? std::vector<double>{times.back()}
                                                           : std::vector<double>(times.begin() + static_cast<long>(next), times.end());
        tr.stats = integrate_dop853<4>(rhs, init.t, y0, stops, opt, [&](const OdeStep<4>& step, bool) {
            while (next < times.size() && step.h != 0.0 && step.contains(times[next])) {
                const double t = times[next];
                const auto y = t == step.t1() ? step.y1 : step(t);
                tr.samples.push_back(detail::make_sample(detail::unpack(t, y), m, cfg.axis_guard));
                ++next;
            }
            return true;
        });
    }
    if (tr.samples.size() >= 2) tr.drift = drift_report(tr);
    return tr;
}

inline Trajectory integrate(const ErmakovModel& m, const CartesianState& init, double t_end, int samples,
                            const IntegratorConfig& cfg = {}) {
    const auto grid = uniform_grid(init.t, t_end, samples);
    return integrate(m, init, std::span<const double>(grid), cfg);
}

/// Sample at every accepted step instead of a fixed grid.
inline Trajectory integrate_steps(const ErmakovModel& m, const CartesianState& init, double t_end,
                                  const IntegratorConfig& cfg = {}) {
    Trajectory tr;
    OdeOptions opt;
    opt.rel_tol = cfg.rel_tol;
    opt.abs_tol = cfg.abs_tol;
    opt.max_step = cfg.max_step;
    const auto rhs = detail::first_order_rhs(m, init, cfg.axis_guard);
    tr.samples.push_back(detail::make_sample(init, m, cfg.axis_guard));
    const double stops[1] = {t_end};
    tr.stats = integrate_dop853<4>(rhs, init.t, std::array<double, 4>{init.x, init.y, init.xdot, init.ydot},
                                   std::span<const double>(stops), opt, [&](const OdeStep<4>& step, bool) {
                                       if (step.h != 0.0)
                                           tr.samples.push_back(
                                               detail::make_sample(detail::unpack(step.t1(), step.y1), m, cfg.axis_guard));
                                       return true;
                                   });
    if (tr.samples.size() >= 2) tr.drift = drift_report(tr);
    return tr;
}

}  // namespace ermakov
