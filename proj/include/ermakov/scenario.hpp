#pragma once

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ermakov/dynamics.hpp"
#include "ermakov/errors.hpp"
#include "ermakov/invariants.hpp"
#include "ermakov/linearize.hpp"
#include "ermakov/model.hpp"
#include "ermakov/noether.hpp"
#include "ermakov/solver.hpp"

namespace ermakov {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline constexpr int kScenarioVersion = 1;

/// The scenario file does not follow the schema; `issues()` lists every violation.
class ScenarioError : public Error {
public:
    explicit ScenarioError(std::vector<std::string> issues) : Error(join(issues)), issues_(std::move(issues)) {}
    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string out = "invalid scenario:";
        for (const auto& s : issues) out += "\n  - " + s;
        return out;
    }
    std::vector<std::string> issues_;
};

enum class GaugeChoice { Exact, Corrupted, None };

struct VerifySettings {
    GaugeChoice gauge = GaugeChoice::Exact;
    int states = 1000;
    int phase_points = 100;
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 42;
    ModelSpec model;
    CartesianState initial;
    double t_end = 0.0;
    int samples = 0;
    IntegratorConfig integrator;
    VerifySettings verify;

    std::vector<double> grid() const { return uniform_grid(initial.t, t_end, samples); }
};

namespace detail {

/// Reads the keys of one JSON object and records type errors and unknown keys.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path, std::vector<std::string>& issues)
        : j_(j), path_(std::move(path)), issues_(issues) {
        ok_ = j.is_object();
        if (!ok_) issues_.push_back(path_ + ": expected an object");
    }
    bool ok() const { return ok_; }
    bool has(const std::string& key) const { return ok_ && j_.contains(key); }
    std::string at(const std::string& key) const { return path_ + "." + key; }

    const Json* get(const std::string& key, bool required) {
        seen_.insert(key);
        if (!ok_) return nullptr;
        auto it = j_.find(key);
        if (it == j_.end()) {
            if (required) issues_.push_back(at(key) + ": missing");
            return nullptr;
        }
        return &*it;
    }
    void number(const std::string& key, double& out, bool required) {
        if (const Json* v = get(key, required)) {
            if (v->is_number() && std::isfinite(v->get<double>()))
                out = v->get<double>();
            else
                issues_.push_back(at(key) + ": expected a finite number");
        }
    }
    void integer(const std::string& key, long long& out, bool required) {
        if (const Json* v = get(key, required)) {
            if (v->is_number_integer())
                out = v->get<long long>();
            else
                issues_.push_back(at(key) + ": expected an integer");
        }
    }
    void text(const std::string& key, std::string& out, bool required) {
        if (const Json* v = get(key, required)) {
            if (v->is_string())
                out = v->get<std::string>();
            else
                issues_.push_back(at(key) + ": expected a string");
        }
    }
    void finish() {
        if (!ok_) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) issues_.push_back(at(it.key()) + ": unknown key");
    }

private:
    const Json& j_;
    std::string path_;
    std::vector<std::string>& issues_;
    std::set<std::string> seen_;
    bool ok_ = false;
};

inline bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    });
}

inline void parse_U(const Json& u, const std::string& path, PointSymmetricSpec& ps, std::vector<std::string>& issues) {
    if (u.is_string()) {
        ps.U = u.get<std::string>();
        return;
    }
    ObjectReader r(u, path, issues);
    std::string kind;
    r.text("kind", kind, true);
    if (kind == "inverse_square_coulomb") {
        InverseSquareCoulomb c;
        r.number("a", c.a, true);
        r.number("b", c.b, true);
        ps.U = c;
    } else if (kind == "inverse_square_harmonic") {
        InverseSquareHarmonic h;
        r.number("a", h.a, true);
        r.number("c", h.c, true);
        ps.U = h;
    } else if (r.has("kind")) {
        issues.push_back(r.at("kind") + ": expected \"inverse_square_coulomb\" or \"inverse_square_harmonic\"");
    }
    r.finish();
}

inline void parse_model(const Json& j, ModelSpec& spec, std::vector<std::string>& issues) {
    ObjectReader r(j, "model", issues);
    if (const Json* f = r.get("form", true)) {
        ObjectReader fr(*f, "model.form", issues);
        fr.number("A", spec.form.A, true);
        fr.number("B", spec.form.B, true);
        fr.number("C", spec.form.C, true);
        fr.finish();
    }
    r.text("f", spec.f, false);
    r.text("g", spec.g, false);
    r.number("lambda0_f", spec.lambda0_f, false);
    r.number("lambda0_g", spec.lambda0_g, false);
    if (const Json* p = r.get("potential", true)) {
        ObjectReader pr(*p, "model.potential", issues);
        std::string kind;
        pr.text("kind", kind, true);
        if (kind == "point_symmetric") {
            PointSymmetricSpec ps;
            pr.text("rho", ps.rho, false);
            if (const Json* u = pr.get("U", true)) parse_U(*u, "model.potential.U", ps, issues);
            spec.potential = ps;
        } else if (kind == "generic") {
            GenericPotentialSpec gp;
            pr.text("vbar", gp.vbar, true);
            spec.potential = gp;
        } else if (pr.has("kind")) {
            issues.push_back("model.potential.kind: expected \"point_symmetric\" or \"generic\"");
        }
        pr.finish();
    }
    r.finish();
}

}  // namespace detail

/// Checks `j` against the version 1 schema and validates the model it describes. Every
/// violation found is reported in one ScenarioError.
inline Scenario parse_scenario(const Json& j, const std::string& default_name = "scenario") {
    std::vector<std::string> issues;
    Scenario sc;
    sc.name = default_name;
    detail::ObjectReader r(j, "scenario", issues);
    if (!r.ok()) throw ScenarioError(issues);

    long long v = 0;
    r.integer("v", v, true);
    if (r.has("v") && v != kScenarioVersion && j["v"].is_number_integer())
        issues.push_back("scenario.v: unsupported version " + std::to_string(v) + " (expected 1)");
    r.text("name", sc.name, false);
    if (!detail::valid_name(sc.name)) issues.push_back("scenario.name: use letters, digits, '_', '-' or '.'");
    long long seed = 42;
    r.integer("seed", seed, false);
    if (seed < 0) issues.push_back("scenario.seed: must be non-negative");
    sc.seed = static_cast<std::uint64_t>(seed);

    bool model_read = false;
    if (const Json* m = r.get("model", true)) {
        const auto before = issues.size();
        detail::parse_model(*m, sc.model, issues);
        model_read = issues.size() == before;
    }
    if (const Json* s = r.get("initial", true)) {
        detail::ObjectReader ir(*s, "initial", issues);
        ir.number("t", sc.initial.t, false);
        ir.number("x", sc.initial.x, true);
        ir.number("y", sc.initial.y, true);
        ir.number("xdot", sc.initial.xdot, true);
        ir.number("ydot", sc.initial.ydot, true);
        ir.finish();
    }
    if (const Json* t = r.get("time", true)) {
        detail::ObjectReader tr(*t, "time", issues);
        tr.number("t_end", sc.t_end, true);
        long long n = 0;
        tr.integer("samples", n, true);
        if (tr.has("samples") && (n < 2 || n > 10000000)) issues.push_back("time.samples: must be in [2, 1e7]");
        sc.samples = static_cast<int>(std::clamp<long long>(n, 0, 10000000));
        if (tr.has("t_end") && sc.t_end == sc.initial.t) issues.push_back("time.t_end: must differ from initial.t");
        tr.finish();
    }
    if (const Json* c = r.get("integrator", false)) {
        detail::ObjectReader cr(*c, "integrator", issues);
        auto& ic = sc.integrator;
        cr.number("rel_tol", ic.rel_tol, false);
        cr.number("abs_tol", ic.abs_tol, false);
        cr.number("axis_guard", ic.axis_guard, false);
        if (const Json* ms = cr.get("max_step", false)) {
            if (ms->is_number() && ms->get<double>() > 0.0)
                ic.max_step = ms->get<double>();
            else
                issues.push_back("integrator.max_step: expected a positive number");
        }
        if (const Json* d = cr.get("dense_output", false)) {
            if (d->is_boolean())
                ic.dense_output = d->get<bool>();
            else
                issues.push_back("integrator.dense_output: expected a boolean");
        }
        if (!(ic.rel_tol > 0.0)) issues.push_back("integrator.rel_tol: must be positive");
        if (!(ic.abs_tol > 0.0)) issues.push_back("integrator.abs_tol: must be positive");
        if (!(ic.axis_guard >= 0.0)) issues.push_back("integrator.axis_guard: must be non-negative");
        cr.finish();
    }
    if (const Json* vj = r.get("verify", false)) {
        detail::ObjectReader vr(*vj, "verify", issues);
        std::string gauge = "exact";
        vr.text("gauge", gauge, false);
        if (gauge == "exact")
            sc.verify.gauge = GaugeChoice::Exact;
        else if (gauge == "corrupted")
            sc.verify.gauge = GaugeChoice::Corrupted;
        else if (gauge == "none")
            sc.verify.gauge = GaugeChoice::None;
        else
            issues.push_back("verify.gauge: expected \"exact\", \"corrupted\" or \"none\"");
        long long states = sc.verify.states, points = sc.verify.phase_points;
        vr.integer("states", states, false);
        vr.integer("phase_points", points, false);
        if (states < 1 || states > 1000000) issues.push_back("verify.states: must be in [1, 1e6]");
        if (points < 1 || points > 1000000) issues.push_back("verify.phase_points: must be in [1, 1e6]");
        sc.verify.states = static_cast<int>(std::clamp<long long>(states, 1, 1000000));
        sc.verify.phase_points = static_cast<int>(std::clamp<long long>(points, 1, 1000000));
        vr.finish();
    }
    r.finish();

    if (model_read) {
        try {
            (void)validate_model(sc.model);
        } catch (const ValidationError& e) {
            for (const auto& s : e.issues()) issues.push_back("model." + s);
        }
    }
    if (!issues.empty()) throw ScenarioError(issues);
    return sc;
}

/// Reads and parses a scenario file; the default name is the file stem.
inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError({"cannot open " + path.string()});
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ScenarioError({path.string() + ": " + e.what()});
    }
    return parse_scenario(j, path.stem().string());
}

inline ErmakovModel scenario_model(const Scenario& sc) { return validate_model(sc.model); }

// ---- run ---------------------------------------------------------------------------------

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline const char* kTrajectoryHeader = "t,x,y,xdot,ydot,R,theta,I,J,H";

/// Trajectory CSV; J and H stay blank for generic potentials.
inline std::string trajectory_csv(const Trajectory& tr, const ErmakovModel& m) {
    std::string out = kTrajectoryHeader;
    out += '\n';
    for (const auto& s : tr.samples) {
        const auto& c = s.state;
        const auto p = to_polar(c, m.form());
        for (double v : {s.t, c.x, c.y, c.xdot, c.ydot, p.R, p.theta, s.I}) {
            out += format_g17(v);
            out += ',';
        }
        if (s.J) out += format_g17(*s.J);
        out += ',';
        if (s.H) out += format_g17(*s.H);
        out += '\n';
    }
    return out;
}

inline OrderedJson model_summary(const Scenario& sc, const ErmakovModel& m) {
    OrderedJson o;
    o["form"] = {{"A", sc.model.form.A}, {"B", sc.model.form.B}, {"C", sc.model.form.C}};
    o["kappa"] = m.kappa();
    o["f"] = m.f().str();
    o["g"] = m.g().str();
    if (m.point_symmetric()) {
        o["potential"] = "point_symmetric";
        o["rho"] = m.point().rho.str();
        o["U"] = m.point().U.describe();
    } else {
        o["potential"] = "generic";
        o["vbar"] = std::get<GenericPotential>(m.potential()).vbar.str();
    }
    return o;
}

inline OrderedJson drift_json(const Trajectory& tr) {
    OrderedJson o = OrderedJson::object();
    for (const auto& d : tr.drift) {
        const double q0 = d.name == "I" ? tr.samples.front().I
                          : d.name == "J" ? *tr.samples.front().J
                                          : *tr.samples.front().H;
        o[d.name] = {{"initial", q0}, {"max_relative_drift", d.drift}, {"at", d.at}};
    }
    return o;
}

inline OrderedJson run_report(const Scenario& sc, const ErmakovModel& m, const Trajectory& tr) {
    OrderedJson o;
    o["v"] = kScenarioVersion;
    o["command"] = "run";
    o["scenario"] = sc.name;
    o["model"] = model_summary(sc, m);
    o["samples"] = tr.samples.size();
    o["t_begin"] = tr.samples.empty() ? sc.initial.t : tr.samples.front().t;
    o["t_end"] = tr.samples.empty() ? sc.initial.t : tr.samples.back().t;
    o["drift"] = drift_json(tr);
    o["integrator"] = {{"rel_tol", sc.integrator.rel_tol},
                       {"abs_tol", sc.integrator.abs_tol},
                       {"steps", tr.stats.steps},
                       {"accepted", tr.stats.accepted},
                       {"rejected", tr.stats.rejected},
                       {"evaluations", tr.stats.evaluations}};
    o["status"] = "ok";
    o["exit_code"] = 0;
    return o;
}

inline Trajectory run_direct(const Scenario& sc, const ErmakovModel& m) {
    const auto grid = sc.grid();
    return integrate(m, sc.initial, std::span<const double>(grid), sc.integrator);
}

// ---- verify ------------------------------------------------------------------------------

enum class ClaimStatus { Pass, Fail, Skipped };

inline const char* to_string(ClaimStatus s) {
    switch (s) {
        case ClaimStatus::Pass: return "PASS";
        case ClaimStatus::Fail: return "FAIL";
        default: return "SKIPPED";
    }
}

struct Claim {
    std::string name;
    ClaimStatus status = ClaimStatus::Skipped;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct VerifyTolerances {
    double I_drift = 1e-8;
    double J_drift = 1e-8;
    double noether = 1e-9;     // |residual| / (1 + |L|)
    double converse = 1e-10;   // relative, per polar component
    double involution = 1e-8;  // |{I, J}|
    double polar_I = 1e-12;    // relative
};

namespace detail {
inline Claim judged(std::string name, double measured, double tol, std::string detail = {}) {
    return {std::move(name), measured <= tol ? ClaimStatus::Pass : ClaimStatus::Fail, measured, tol, std::move(detail)};
}
inline Claim skipped(std::string name, std::string why) { return {std::move(name), ClaimStatus::Skipped, 0.0, 0.0, std::move(why)}; }

/// Random states around the initial point: Euclidean radius in [0.5, 2] r0, velocities of the
/// initial size, times inside the scenario window. Coupled models stay inside the initial
/// quadrant; every state has R^2 > 0.
inline std::vector<CartesianState> sample_states(const Scenario& sc, const ErmakovModel& m, std::mt19937_64& rng,
                                                 int n) {
    const auto& s0 = sc.initial;
    const double pi = std::numbers::pi;
    const double r0 = std::hypot(s0.x, s0.y) > 0.0 ? std::hypot(s0.x, s0.y) : 1.0;
    const double v = 0.5 + std::max(std::abs(s0.xdot), std::abs(s0.ydot));
    double lo = -pi, hi = pi;
    if (!m.uncoupled()) {
        const double q = std::floor(std::atan2(s0.y, s0.x) / (pi / 2)) * (pi / 2);
        lo = q + 0.05;
        hi = q + pi / 2 - 0.05;
    }
    const double t0 = std::min(s0.t, sc.t_end), t1 = std::max(s0.t, sc.t_end);
    auto U = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    std::vector<CartesianState> out;
    for (long tries = 0; static_cast<int>(out.size()) < n; ++tries) {
        if (tries > 1000L * n + 1000) throw Error("could not sample states with R^2 > 0 near the initial point");
        const double r = U(0.5 * r0, 2.0 * r0), th = U(lo, hi);
        CartesianState s{U(t0, t1), r * std::cos(th), r * std::sin(th), U(-v, v), U(-v, v)};
        if (m.form().radius_sq(s.x, s.y) > 1e-6 * r * r) out.push_back(s);
    }
    return out;
}
}  // namespace detail

/// The claim suite: invariant drift along the scenario trajectory, the Noether criterion,
/// the converse generator, involution and the polar form of I at seeded random states.
inline std::vector<Claim> verify_claims(const Scenario& sc, const ErmakovModel& m, const VerifyTolerances& tol = {}) {
    std::vector<Claim> out;
    const bool ps = m.point_symmetric();
    const std::string not_ps = "model is not point-symmetric";

    const auto tr = run_direct(sc, m);
    out.push_back(detail::judged("I-drift", tr.find_drift("I")->drift, tol.I_drift));
    if (ps)
        out.push_back(detail::judged("J-drift", tr.find_drift("J")->drift, tol.J_drift));
    else
        out.push_back(detail::skipped("J-drift", not_ps));

    std::mt19937_64 rng(sc.seed);
    const auto states = detail::sample_states(sc, m, rng, sc.verify.states);
    const auto points = detail::sample_states(sc, m, rng, sc.verify.phase_points);

    if (ps) {
        auto gen = point_symmetry(m);
        std::string gauge = "exact";
        if (sc.verify.gauge == GaugeChoice::Corrupted) {
            gen = corrupt_gauge(gen, m);
            gauge = "corrupted";
        } else if (sc.verify.gauge == GaugeChoice::None) {
            gen = without_gauge(gen);
            gauge = "none";
        }
        double worst = 0.0;
        for (const auto& s : states) {
            const double L = lagrangian(s, m);
            worst = std::max(worst, std::abs(noether_residual(gen, s, m, sc.integrator.axis_guard)) / (1.0 + std::abs(L)));
        }
        out.push_back(detail::judged("noether-residual", worst, tol.noether,
                                     "gauge " + gauge + ", " + std::to_string(states.size()) + " states"));
    } else {
        out.push_back(detail::skipped("noether-residual", not_ps));
    }

    {
        const auto fm = m.form();
        const StateFn taus[] = {[](const DualState&) { return Dual(0.0); }, [](const DualState&) { return Dual(1.0); },
                                [fm](const DualState& s) {
                                    return fm.radius_sq(s.x, s.y) * (s.x * s.ydot - s.y * s.xdot) / (s.x * s.x + s.y * s.y);
                                }};
        double worst = 0.0;
        for (const auto& tau : taus) {
            const auto gen = converse_generator(m, tau);
            for (const auto& s : states) {
                const auto got = polar_components(gen, s, m);
                const auto want = ermakov_polar_variation(tau(DualState{s.t, s.x, s.y, s.xdot, s.ydot}).v, to_polar(s, fm), m);
                worst = std::max({worst, std::abs(got.dR - want.dR) / std::max(1.0, std::abs(want.dR)),
                                  std::abs(got.dtheta - want.dtheta) / std::max(1.0, std::abs(want.dtheta))});
            }
        }
        out.push_back(detail::judged("converse-generator", worst, tol.converse, "tau in {0, 1, R^2 thetadot}"));
    }

    if (ps) {
        const auto I = phase_I(m), J = phase_J(m);
        double worst = 0.0;
        for (const auto& s : points) worst = std::max(worst, std::abs(poisson_bracket(I, J, to_phase(s, m.form()))));
        out.push_back(detail::judged("involution", worst, tol.involution, std::to_string(points.size()) + " phase points"));
    } else {
        out.push_back(detail::skipped("involution", not_ps));
    }

    {
        double worst = 0.0;
        for (const auto& s : states) {
            const double a = ermakov_I(s, m), b = ermakov_I_polar(to_polar(s, m.form()), m);
            worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
        }
        out.push_back(detail::judged("polar-I", worst, tol.polar_I));
    }
    return out;
}

inline bool all_pass(const std::vector<Claim>& claims) {
    return std::none_of(claims.begin(), claims.end(), [](const Claim& c) { return c.status == ClaimStatus::Fail; });
}

inline std::string claim_line(const Claim& c) {
    char buf[160];
    if (c.status == ClaimStatus::Skipped) {
        std::snprintf(buf, sizeof buf, "%-7s %-20s", to_string(c.status), c.name.c_str());
    } else {
        std::snprintf(buf, sizeof buf, "%-7s %-20s measured=%.3e tol=%.0e", to_string(c.status), c.name.c_str(),
                      c.measured, c.tolerance);
    }
    std::string out = buf;
    if (!c.detail.empty()) out += "  (" + c.detail + ")";
    return out;
}

inline OrderedJson verify_report(const Scenario& sc, const ErmakovModel& m, const std::vector<Claim>& claims) {
    OrderedJson o;
    o["v"] = kScenarioVersion;
    o["command"] = "verify";
    o["scenario"] = sc.name;
    o["model"] = model_summary(sc, m);
    o["seed"] = sc.seed;
    OrderedJson arr = OrderedJson::array();
    for (const auto& c : claims) {
        OrderedJson e;
        e["claim"] = c.name;
        e["status"] = to_string(c.status);
        if (c.status != ClaimStatus::Skipped) {
            e["measured"] = c.measured;
            e["tolerance"] = c.tolerance;
        }
        if (!c.detail.empty()) e["detail"] = c.detail;
        arr.push_back(e);
    }
    o["claims"] = arr;
    const bool ok = all_pass(claims);
    o["status"] = ok ? "pass" : "fail";
    o["exit_code"] = ok ? 0 : 1;
    return o;
}

// ---- compare -----------------------------------------------------------------------------

enum class MethodStatus { Ok, Skipped, Error };

inline const char* to_string(MethodStatus s) {
    switch (s) {
        case MethodStatus::Ok: return "OK";
        case MethodStatus::Skipped: return "SKIPPED";
        default: return "ERROR";
    }
}

struct MethodRun {
    std::string method;
    MethodStatus status = MethodStatus::Skipped;
    std::string reason;
    std::vector<CartesianState> states;
    double seconds = 0.0;
};

struct PairError {
    std::string a, b;
    double max_dx = 0.0, max_dy = 0.0;
    std::size_t samples = 0;
    bool pass = true;
    double max_norm() const { return std::max(max_dx, max_dy); }
};

struct CompareResult {
    std::vector<MethodRun> runs;  // sorted by method name
    std::vector<PairError> pairs;
    double tolerance = 1e-6;
    bool all_pass() const {
        return std::all_of(pairs.begin(), pairs.end(), [](const PairError& p) { return p.pass; });
    }
    bool any_error() const {
        return std::any_of(runs.begin(), runs.end(), [](const MethodRun& r) { return r.status == MethodStatus::Error; });
    }
};

inline const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> names{"direct", "quadrature", "linearize"};
    return names;
}

/// Why `method` cannot run on `m`, or nothing when it applies. A method can also turn out
/// inapplicable during the run (theta turns back, alpha vanishes); run_method reports that as
/// SKIPPED too.
inline std::optional<std::string> method_inapplicable(const std::string& method, const ErmakovModel& m) {
    if (method == "direct") return std::nullopt;
    if (!m.point_symmetric()) return "model is not point-symmetric";
    if (method == "linearize") {
        const auto cls = classify_linearisable(m);
        if (!cls.linearisable()) return "NotLinearisable: U = " + m.point().U.describe();
    }
    return std::nullopt;
}

inline MethodRun run_method(const std::string& method, const Scenario& sc, const ErmakovModel& m) {
    MethodRun r;
    r.method = method;
    if (auto why = method_inapplicable(method, m)) {
        r.reason = *why;
        return r;
    }
    const auto grid = sc.grid();
    const auto start = std::chrono::steady_clock::now();
    auto collect = [&](const Trajectory& tr) {
        for (const auto& s : tr.samples) r.states.push_back(s.state);
    };
    try {
        if (method == "direct") {
            collect(integrate(m, sc.initial, std::span<const double>(grid), sc.integrator));
        } else if (method == "quadrature") {
            collect(solve_by_quadrature(m, sc.initial, std::span<const double>(grid), sc.integrator.axis_guard).trajectory);
        } else {
            const auto sol = solve_by_linearization(m, sc.initial, std::span<const double>(grid), sc.integrator.axis_guard);
            collect(sol.trajectory);
            if (!sol.truncated.empty()) r.reason = "truncated: " + sol.truncated;
        }
        r.status = MethodStatus::Ok;
    } catch (const AngularTurning& e) {
        r.status = MethodStatus::Skipped;
        r.reason = e.what();
        r.states.clear();
    } catch (const AlphaVanishes& e) {
        r.status = MethodStatus::Skipped;
        r.reason = e.what();
        r.states.clear();
    } catch (const Error& e) {
        r.status = MethodStatus::Error;
        r.reason = e.what();
        r.states.clear();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

/// Runs each method concurrently on the scenario grid and compares every pair of successful
/// runs over their common samples.
inline CompareResult run_compare(const Scenario& sc, const ErmakovModel& m, std::vector<std::string> methods,
                                 double tolerance = 1e-6) {
    for (const auto& name : methods)
        if (std::find(known_methods().begin(), known_methods().end(), name) == known_methods().end())
            throw Error("unknown method '" + name + "'");
    std::sort(methods.begin(), methods.end());
    methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

    std::vector<std::future<MethodRun>> jobs;
    for (const auto& name : methods)
        jobs.push_back(std::async(std::launch::async, [&sc, &m, name] { return run_method(name, sc, m); }));
    CompareResult out;
    out.tolerance = tolerance;
    for (auto& j : jobs) out.runs.push_back(j.get());

    for (std::size_t i = 0; i < out.runs.size(); ++i) {
        for (std::size_t k = i + 1; k < out.runs.size(); ++k) {
            const auto& a = out.runs[i];
            const auto& b = out.runs[k];
            if (a.status != MethodStatus::Ok || b.status != MethodStatus::Ok) continue;
            PairError p{a.method, b.method};
            p.samples = std::min(a.states.size(), b.states.size());
            for (std::size_t n = 0; n < p.samples; ++n) {
                p.max_dx = std::max(p.max_dx, std::abs(a.states[n].x - b.states[n].x));
                p.max_dy = std::max(p.max_dy, std::abs(a.states[n].y - b.states[n].y));
            }
            p.pass = p.max_norm() <= tolerance;
            out.pairs.push_back(p);
        }
    }
    return out;
}

inline std::string compare_csv(const CompareResult& r) {
    std::string out = "method_a,method_b,max_abs_dx,max_abs_dy,max_norm,samples,status\n";
    for (const auto& p : r.pairs)
        out += p.a + "," + p.b + "," + format_g17(p.max_dx) + "," + format_g17(p.max_dy) + "," +
               format_g17(p.max_norm()) + "," + std::to_string(p.samples) + "," + (p.pass ? "PASS" : "FAIL") + "\n";
    return out;
}

/// Wall-clock timings live apart from the deterministic outputs.
inline std::string timings_csv(const CompareResult& r) {
    std::string out = "method,status,seconds\n";
    for (const auto& m : r.runs) out += m.method + "," + to_string(m.status) + "," + format_g17(m.seconds) + "\n";
    return out;
}

inline int compare_exit_code(const CompareResult& r) {
    if (r.any_error()) return 3;
    return r.all_pass() ? 0 : 1;
}

inline OrderedJson compare_report(const Scenario& sc, const ErmakovModel& m, const CompareResult& r) {
    OrderedJson o;
    o["v"] = kScenarioVersion;
    o["command"] = "compare";
    o["scenario"] = sc.name;
    o["model"] = model_summary(sc, m);
    OrderedJson runs = OrderedJson::array();
    for (const auto& run : r.runs) {
        OrderedJson e;
        e["method"] = run.method;
        e["status"] = to_string(run.status);
        if (run.status == MethodStatus::Ok) e["samples"] = run.states.size();
        if (!run.reason.empty()) e["reason"] = run.reason;
        runs.push_back(e);
    }
    o["methods"] = runs;
    OrderedJson pairs = OrderedJson::array();
    for (const auto& p : r.pairs)
        pairs.push_back({{"pair", p.a + "-" + p.b},
                         {"max_abs_dx", p.max_dx},
                         {"max_abs_dy", p.max_dy},
                         {"max_norm", p.max_norm()},
                         {"samples", p.samples},
                         {"status", p.pass ? "PASS" : "FAIL"}});
    o["pairs"] = pairs;
    o["tolerance"] = r.tolerance;
    const int code = compare_exit_code(r);
    o["status"] = code == 0 ? "pass" : code == 1 ? "fail" : "runtime_error";
    o["exit_code"] = code;
    return o;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    if (!f) throw Error("failed writing " + path.string());
}

}  // namespace ermakov
