#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ermakov/dual.hpp"
#include "ermakov/errors.hpp"
#include "ermakov/expr.hpp"
#include "ermakov/geometry.hpp"
#include "ermakov/quadrature.hpp"

namespace ermakov {

inline constexpr double kKappaFloor = 1e-12;
inline constexpr double kAxisFloor = 1e-12;

/// U(s) = a/s^2 - b/s
struct InverseSquareCoulomb {
    double a = 0.0;
    double b = 0.0;
};
/// U(s) = a/s^2 + c s^2/2
struct InverseSquareHarmonic {
    double a = 0.0;
    double c = 0.0;
};
struct ExprU {
    Expr u;   // over {s}
    Expr du;  // dU/ds
};

/// The radial function U of the point-symmetric family.
class USpec {
public:
    using Variant = std::variant<ExprU, InverseSquareCoulomb, InverseSquareHarmonic>;

    USpec() : USpec(InverseSquareHarmonic{0.0, 1.0}) {}
    USpec(InverseSquareCoulomb p) : v_(p) {}   // NOLINT
    USpec(InverseSquareHarmonic p) : v_(p) {}  // NOLINT
    explicit USpec(Expr u) : v_(ExprU{u, u.diff("s")}) {}

    const Variant& variant() const { return v_; }

    template <class T>
    T value(const T& s) const {
        if (auto* e = std::get_if<ExprU>(&v_)) return e->u(s);
        if (auto* p = std::get_if<InverseSquareCoulomb>(&v_)) return p->a / (s * s) - p->b / s;
        const auto& p = std::get<InverseSquareHarmonic>(v_);
        return p.a / (s * s) + 0.5 * p.c * s * s;
    }
    template <class T>
    T derivative(const T& s) const {
        if (auto* e = std::get_if<ExprU>(&v_)) return e->du(s);
        if (auto* p = std::get_if<InverseSquareCoulomb>(&v_)) return -2.0 * p->a / (s * s * s) + p->b / (s * s);
        const auto& p = std::get<InverseSquareHarmonic>(v_);
        return -2.0 * p.a / (s * s * s) + p.c * s;
    }

    std::string describe() const {
        if (auto* e = std::get_if<ExprU>(&v_)) return e->u.str();
        if (auto* p = std::get_if<InverseSquareCoulomb>(&v_))
            return "inverse_square_coulomb(a=" + detail::format_number(p->a) + ", b=" + detail::format_number(p->b) + ")";
        const auto& p = std::get<InverseSquareHarmonic>(v_);
        return "inverse_square_harmonic(a=" + detail::format_number(p.a) + ", c=" + detail::format_number(p.c) + ")";
    }

private:
    Variant v_;
};

/// Vbar(R, t) given directly.
struct GenericPotential {
    Expr vbar;     // over {R, t}
    Expr dvbar_dR;
};

/// Vbar(R, t) = -rhoddot R^2/(2 rho) + U(R/rho)/rho^2.
struct PointSymmetricPotential {
    Expr rho;  // over {t}
    Expr rho_dot;
    Expr rho_ddot;
    Expr rho_dddot;
    USpec U;
};

struct RhoJet {
    double rho, rho_dot, rho_ddot;
};

/// A validated Lagrangian Ermakov system. Immutable; copies share the antiderivative memo.
class ErmakovModel {
public:
    using Potential = std::variant<GenericPotential, PointSymmetricPotential>;

    ErmakovModel(QuadraticForm form, Expr f, Expr g, double lambda0_f, double lambda0_g, Potential potential)
        : form_(form),
          F_(std::make_shared<const Antiderivative>(std::move(f), lambda0_f)),
          G_(std::make_shared<const Antiderivative>(std::move(g), lambda0_g)),
          potential_(std::move(potential)) {
        const double k = ermakov::kappa(form_);
        if (!(std::abs(k) >= kKappaFloor) || !std::isfinite(k))
            throw ValidationError(std::vector<std::string>{"form: kappa = A*C - B^2 must be finite and nonzero (got " +
                                                           detail::format_number(k) + ")"});
    }

    const QuadraticForm& form() const { return form_; }
    double kappa() const { return ermakov::kappa(form_); }
    const Expr& f() const { return F_->integrand(); }
    const Expr& g() const { return G_->integrand(); }
    double lambda0_f() const { return F_->lower(); }
    double lambda0_g() const { return G_->lower(); }
    bool f_zero() const { return F_->is_zero(); }
    bool g_zero() const { return G_->is_zero(); }
    bool uncoupled() const { return f_zero() && g_zero(); }
    const Potential& potential() const { return potential_; }
    bool point_symmetric() const { return std::holds_alternative<PointSymmetricPotential>(potential_); }
    const PointSymmetricPotential& point() const { return std::get<PointSymmetricPotential>(potential_); }

    template <class T>
    T F(const T& u) const { return (*F_)(u); }
    template <class T>
    T G(const T& u) const { return (*G_)(u); }
    template <class T>
    T f_at(const T& u) const { return F_->integrand()(u); }
    template <class T>
    T g_at(const T& u) const { return G_->integrand()(u); }

    template <class T>
    T rho(const T& t) const {
        const T r = point().rho(t);
        if (!(value_of(r) > 0.0)) throw NonPositiveRho("rho(" + std::to_string(value_of(t)) + ") <= 0");
        return r;
    }
    RhoJet rho_jet(double t) const {
        const auto& p = point();
        return {rho(t), p.rho_dot(t), p.rho_ddot(t)};
    }

    template <class T>
    T vbar(const T& R, const T& t) const {
        if (auto* g = std::get_if<GenericPotential>(&potential_)) return g->vbar(R, t);
        const auto& p = point();
        const T r = rho(t);
        const T s = R / r;
        return -p.rho_ddot(t) * R * R / (2.0 * r) + p.U.value(s) / (r * r);
    }
    double dvbar_dR(double R, double t) const {
        if (auto* g = std::get_if<GenericPotential>(&potential_)) return g->dvbar_dR(R, t);
        const auto& p = point();
        const double r = rho(t);
        return -p.rho_ddot(t) * R / r + p.U.derivative(R / r) / (r * r * r);
    }

private:
    QuadraticForm form_;
    std::shared_ptr<const Antiderivative> F_, G_;
    Potential potential_;
};

// ---- Construction from text ------------------------------------------------------------

struct GenericPotentialSpec {
    std::string vbar;
};
struct PointSymmetricSpec {
    std::string rho = "1";
    std::variant<std::string, InverseSquareCoulomb, InverseSquareHarmonic> U = std::string("s^2/2");
};

struct ModelSpec {
    QuadraticForm form;
    std::string f = "0";
    std::string g = "0";
    double lambda0_f = 1.0;
    double lambda0_g = 1.0;
    std::variant<GenericPotentialSpec, PointSymmetricSpec> potential = PointSymmetricSpec{};
};

/// Parses and checks everything in `spec`; throws ValidationError listing all failures.
inline ErmakovModel validate_model(const ModelSpec& spec) {
    std::vector<std::string> issues;
    const auto& fm = spec.form;
    if (!std::isfinite(fm.A) || !std::isfinite(fm.B) || !std::isfinite(fm.C))
        issues.push_back("form: A, B, C must be finite");
    else if (std::abs(kappa(fm)) < kKappaFloor)
        issues.push_back("form: kappa = A*C - B^2 must be nonzero (got " + detail::format_number(kappa(fm)) + ")");
    if (!std::isfinite(spec.lambda0_f) || !std::isfinite(spec.lambda0_g))
        issues.push_back("lower limits lambda0_f, lambda0_g must be finite");

    auto parse = [&](const std::string& what, const std::string& text, std::vector<std::string> vars) {
        try {
            return Expr::parse(text, std::move(vars));
        } catch (const ParseError& e) {
            issues.push_back(what + ": " + e.what());
            return Expr::constant(0.0);
        }
    };
    Expr f = parse("f", spec.f, {"lambda"});
    Expr g = parse("g", spec.g, {"lambda"});

    ErmakovModel::Potential potential;
    if (auto* gp = std::get_if<GenericPotentialSpec>(&spec.potential)) {
        Expr v = parse("Vbar", gp->vbar, {"R", "t"});
        potential = GenericPotential{v, v.diff("R")};
    } else {
        const auto& ps = std::get<PointSymmetricSpec>(spec.potential);
        Expr rho = parse("rho", ps.rho, {"t"});
        Expr rd = rho.diff("t");
        Expr rdd = rd.diff("t");
        USpec U;
        if (auto* text = std::get_if<std::string>(&ps.U)) {
            U = USpec(parse("U", *text, {"s"}));
        } else if (auto* c = std::get_if<InverseSquareCoulomb>(&ps.U)) {
            if (!std::isfinite(c->a) || !std::isfinite(c->b)) issues.push_back("U: parameters a, b must be finite");
            U = *c;
        } else {
            const auto& h = std::get<InverseSquareHarmonic>(ps.U);
            if (!std::isfinite(h.a) || !std::isfinite(h.c)) issues.push_back("U: parameters a, c must be finite");
            U = h;
        }
        potential = PointSymmetricPotential{rho, rd, rdd, rdd.diff("t"), U};
    }
    if (!issues.empty()) throw ValidationError(issues);
    return ErmakovModel(fm, f, g, spec.lambda0_f, spec.lambda0_g, std::move(potential));
}

// ---- Frequency and potential -----------------------------------------------------------

/// sigma(theta): the angular part of omega^2.
inline double sigma(double theta, const ErmakovModel& m) {
    if (m.uncoupled()) return 0.0;
    const double s = std::sin(theta), c = std::cos(theta);
    if (std::abs(s * c) < kAxisFloor)
        throw AxisSingularity("sigma: theta = " + std::to_string(theta) + " lies on a coordinate axis");
    const auto& fm = m.form();
    const double w = detail::direction_weight(theta, fm);  // psi^-2
    double out = 0.0;
    double integrals = 0.0;
    if (!m.f_zero()) {
        const double t = s / c;
        out += (fm.A * c + fm.B * s) * m.f_at(t) * w / (s * c * c);
        integrals += m.F(t);
    }
    if (!m.g_zero()) {
        const double ct = c / s;
        out += (fm.B * c + fm.C * s) * m.g_at(ct) * w / (s * s * c);
        integrals += m.G(ct);
    }
    return out - 2.0 * m.kappa() * integrals;
}

/// omega^2 = (1/R) dVbar/dR + sigma(theta)/R^4.
inline double omega_sq(double R, double theta, double t, const ErmakovModel& m) {
    if (!(R > 0.0)) throw DegenerateDirection("omega_sq: R must be positive");
    const double R2 = R * R;
    return m.dvbar_dR(R, t) / R + sigma(theta, m) / (R2 * R2);
}

/// V = Vbar(R, t) + kappa/R^2 (F(y/x) + G(x/y)).
template <class T>
T potential(const T& x, const T& y, const T& t, const ErmakovModel& m) {
    using std::sqrt;
    const T R2 = m.form().radius_sq(x, y);
    if (!(value_of(R2) > 0.0)) throw DegenerateDirection("potential: R^2 <= 0");
    const T R = sqrt(R2);
    T v = m.vbar(R, t);
    if (!m.uncoupled()) {
        T ang(0.0);
        if (!m.f_zero()) {
            if (value_of(x) == 0.0) throw AxisSingularity("potential: x = 0 with f nonzero");
            ang = ang + m.F(y / x);
        }
        if (!m.g_zero()) {
            if (value_of(y) == 0.0) throw AxisSingularity("potential: y = 0 with g nonzero");
            ang = ang + m.G(x / y);
        }
        v = v + m.kappa() * ang / R2;
    }
    return v;
}

}  // namespace ermakov
