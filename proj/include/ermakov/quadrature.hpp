#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <queue>
#include <shared_mutex>
#include <string>
#include <vector>

#include "ermakov/dual.hpp"
#include "ermakov/errors.hpp"
#include "ermakov/expr.hpp"

namespace ermakov {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
};

struct QuadratureOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    int max_subdivisions = 2000;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod pair on [-1, 1] (QUADPACK qk15).
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error, resabs;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b, int& evals) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double resg = fc * kWg[3];
    double resk = fc * kWgk[7];
    double resabs = std::abs(resk);
    double fv1[7], fv2[7];
    for (int j = 0; j < 3; ++j) {
        const int jtw = 2 * j + 1;
        const double dx = half * kXgk[jtw];
        const double f1 = f(center - dx), f2 = f(center + dx);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += kWg[j] * (f1 + f2);
        resk += kWgk[jtw] * (f1 + f2);
        resabs += kWgk[jtw] * (std::abs(f1) + std::abs(f2));
    }
    for (int j = 0; j < 4; ++j) {
        const int jtwm1 = 2 * j;
        const double dx = half * kXgk[jtwm1];
        const double f1 = f(center - dx), f2 = f(center + dx);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += kWgk[jtwm1] * (f1 + f2);
        resabs += kWgk[jtwm1] * (std::abs(f1) + std::abs(f2));
    }
    evals += 15;
    const double reskh = resk * 0.5;
    double resasc = kWgk[7] * std::abs(fc - reskh);
    for (int j = 0; j < 7; ++j) resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
    const double ah = std::abs(half);
    double err = std::abs((resk - resg) * half);
    resasc *= ah;
    resabs *= ah;
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
    return {a, b, resk * half, err, resabs};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature of f over [a, b] (b < a allowed).
/// Converges when the summed error estimate is below max(abs_tol, rel_tol*|value|).
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
    QuadratureResult out;
    if (a == b) return out;
    std::priority_queue<detail::Panel> heap;
    auto first = detail::gk15(f, a, b, out.evaluations);
    double total = first.value, error = first.error, magnitude = first.resabs;
    heap.push(first);
    int subdivisions = 0;
    // The roundoff floor keeps tight tolerances from chasing noise below 100 eps * integral |f|.
    constexpr double eps = std::numeric_limits<double>::epsilon();
    while (error > std::max({opt.abs_tol, opt.rel_tol * std::abs(total), 100.0 * eps * magnitude})) {
        if (++subdivisions > opt.max_subdivisions)
            throw QuadratureFailure("quadrature tolerance not met on [" + std::to_string(a) + ", " +
                                    std::to_string(b) + "], error estimate " + std::to_string(error));
        const detail::Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid == worst.a || mid == worst.b)
            throw QuadratureFailure("quadrature interval collapsed near " + std::to_string(mid));
        auto left = detail::gk15(f, worst.a, mid, out.evaluations);
        auto right = detail::gk15(f, mid, worst.b, out.evaluations);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        magnitude += left.resabs + right.resabs - worst.resabs;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum from the panels to drop the cancellation noise of incremental updates.
    total = 0.0;
    error = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    out.value = total;
    out.error = error;
    return out;
}

/// Definite integral of a one-variable expression.
inline double integrate_expr(const Expr& f, double a, double b, const QuadratureOptions& opt = {}) {
    return integrate_adaptive([&](double u) { return f(u); }, a, b, opt).value;
}

/// F(u) = integral from `lower` to u of f. Values at the nodes of a fixed refinement grid
/// anchored at `lower` are memoised, so a query costs one short panel once its node is known.
/// Safe for concurrent queries.
class Antiderivative {
public:
    Antiderivative(Expr integrand, double lower) : f_(std::move(integrand)), lower_(lower) {
        up_.push_back(0.0);
        down_.push_back(0.0);
    }
    Antiderivative(const Antiderivative&) = delete;
    Antiderivative& operator=(const Antiderivative&) = delete;

    const Expr& integrand() const { return f_; }
    double lower() const { return lower_; }
    bool is_zero() const { return f_.is_zero(); }

    double operator()(double u) const {
        if (f_.is_zero() || u == lower_) return 0.0;
        if (f_.is_constant()) return f_.root()->value * (u - lower_);
        const bool up = u > lower_;
        const double dist = std::abs(u - lower_);
        const int k = node_index(dist);
        const double node = lower_ + (up ? 1.0 : -1.0) * node_offset(k);
        const double base = node_value(up, k);
        if (node == u) return base;
        return base + segment(node, u);
    }

    Dual operator()(const Dual& u) const { return {(*this)(u.v), u.d == 0.0 ? 0.0 : f_(u.v) * u.d}; }

    std::size_t memo_size() const {
        std::shared_lock lock(mutex_);
        return up_.size() + down_.size();
    }

private:
    // Uniform spacing h up to distance kLinearSpan, geometric growth beyond.
    static constexpr double kH = 1.0 / 16.0;
    static constexpr int kLinearNodes = 64;
    static constexpr double kLinearSpan = kH * kLinearNodes;
    static constexpr double kGrowth = 1.125;

    static double node_offset(int k) {
        if (k <= kLinearNodes) return k * kH;
        return kLinearSpan * std::pow(kGrowth, k - kLinearNodes);
    }
    static int node_index(double dist) {
        int k = dist <= kLinearSpan ? static_cast<int>(dist / kH)
                                    : kLinearNodes + static_cast<int>(std::log(dist / kLinearSpan) / std::log(kGrowth));
        while (k > 0 && node_offset(k) > dist) --k;
        while (node_offset(k + 1) <= dist) ++k;
        return k;
    }

    double segment(double a, double b) const {
        QuadratureOptions opt;
        opt.abs_tol = 1e-14;
        opt.rel_tol = 1e-14;
        return integrate_adaptive([&](double s) { return f_(s); }, a, b, opt).value;
    }

    double node_value(bool up, int k) const {
        {
            std::shared_lock lock(mutex_);
            const auto& v = up ? up_ : down_;
            if (static_cast<std::size_t>(k) < v.size()) return v[static_cast<std::size_t>(k)];
        }
        std::unique_lock lock(mutex_);
        auto& v = up ? up_ : down_;
        const double dir = up ? 1.0 : -1.0;
        while (v.size() <= static_cast<std::size_t>(k)) {
            const int j = static_cast<int>(v.size());
            const double a = lower_ + dir * node_offset(j - 1);
            const double b = lower_ + dir * node_offset(j);
            v.push_back(v.back() + segment(a, b));
        }
        return v[static_cast<std::size_t>(k)];
    }

    Expr f_;
    double lower_;
    mutable std::shared_mutex mutex_;
    mutable std::vector<double> up_, down_;
};

inline double antiderivative(const Expr& f, double lower, double u) {
    Antiderivative F(f, lower);
    return F(u);
}

}  // namespace ermakov
