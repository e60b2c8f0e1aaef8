#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include "ermakov/errors.hpp"

namespace ermakov {

struct OdeOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;  // 0: automatic
    long max_steps = 5'000'000;
    bool dense = false;         // compute the 7th-order interpolant of every accepted step
};

struct OdeStats {
    long steps = 0;
    long accepted = 0;
    long rejected = 0;
    long evaluations = 0;
};

namespace dop853 {

// Dormand-Prince 8(5,3) coefficients with the continuous extension of order 7.
inline constexpr double c2 = 0.526001519587677318785587544488e-01;
inline constexpr double c3 = 0.789002279381515978178381316732e-01;
inline constexpr double c4 = 0.118350341907227396726757197510e+00;
inline constexpr double c5 = 0.281649658092772603273242802490e+00;
inline constexpr double c6 = 0.333333333333333333333333333333e+00;
inline constexpr double c7 = 0.25e+00;
inline constexpr double c8 = 0.307692307692307692307692307692e+00;
inline constexpr double c9 = 0.651282051282051282051282051282e+00;
inline constexpr double c10 = 0.6e+00;
inline constexpr double c11 = 0.857142857142857142857142857142e+00;
inline constexpr double c14 = 0.1e+00;
inline constexpr double c15 = 0.2e+00;
inline constexpr double c16 = 0.777777777777777777777777777778e+00;

inline constexpr double a21 = 5.26001519587677318785587544488e-2;
inline constexpr double a31 = 1.97250569845378994544595329183e-2;
inline constexpr double a32 = 5.91751709536136983633785987549e-2;
inline constexpr double a41 = 2.95875854768068491816892993775e-2;
inline constexpr double a43 = 8.87627564304205475450678981324e-2;
inline constexpr double a51 = 2.41365134159266685502369798665e-1;
inline constexpr double a53 = -8.84549479328286085344864962717e-1;
inline constexpr double a54 = 9.24834003261792003115737966543e-1;
inline constexpr double a61 = 3.7037037037037037037037037037e-2;
inline constexpr double a64 = 1.70828608729473871279604482173e-1;
inline constexpr double a65 = 1.25467687566822425016691814123e-1;
inline constexpr double a71 = 3.7109375e-2;
inline constexpr double a74 = 1.70252211019544039314978060272e-1;
inline constexpr double a75 = 6.02165389804559606850219397283e-2;
inline constexpr double a76 = -1.7578125e-2;
inline constexpr double a81 = 3.70920001185047927108779319836e-2;
inline constexpr double a84 = 1.70383925712239993810214054705e-1;
inline constexpr double a85 = 1.07262030446373284651809199168e-1;
inline constexpr double a86 = -1.53194377486244017527936158236e-2;
inline constexpr double a87 = 8.27378916381402288758473766002e-3;
inline constexpr double a91 = 6.24110958716075717114429577812e-1;
inline constexpr double a94 = -3.36089262944694129406857109825e0;
inline constexpr double a95 = -8.68219346841726006818189891453e-1;
inline constexpr double a96 = 2.75920996994467083049415600797e1;
inline constexpr double a97 = 2.01540675504778934086186788979e1;
inline constexpr double a98 = -4.34898841810699588477366255144e1;
inline constexpr double a101 = 4.77662536438264365890433908527e-1;
inline constexpr double a104 = -2.48811461997166764192642586468e0;
inline constexpr double a105 = -5.90290826836842996371446475743e-1;
inline constexpr double a106 = 2.12300514481811942347288949897e1;
inline constexpr double a107 = 1.52792336328824235832596922938e1;
inline constexpr double a108 = -3.32882109689848629194453265587e1;
inline constexpr double a109 = -2.03312017085086261358222928593e-2;
inline constexpr double a111 = -9.3714243008598732571704021658e-1;
inline constexpr double a114 = 5.18637242884406370830023853209e0;
inline constexpr double a115 = 1.09143734899672957818500254654e0;
inline constexpr double a116 = -8.14978701074692612513997267357e0;
inline constexpr double a117 = -1.85200656599969598641566180701e1;
inline constexpr double a118 = 2.27394870993505042818970056734e1;
inline constexpr double a119 = 2.49360555267965238987089396762e0;
inline constexpr double a1110 = -3.0467644718982195003823669022e0;
inline constexpr double a121 = 2.27331014751653820792359768449e0;
inline constexpr double a124 = -1.05344954667372501984066689879e1;
inline constexpr double a125 = -2.00087205822486249909675718444e0;
inline constexpr double a126 = -1.79589318631187989172765950534e1;
inline constexpr double a127 = 2.79488845294199600508499808837e1;
inline constexpr double a128 = -2.85899827713502369474065508674e0;
inline constexpr double a129 = -8.87285693353062954433549289258e0;
inline constexpr double a1210 = 1.23605671757943030647266201528e1;
inline constexpr double a1211 = 6.43392746015763530355970484046e-1;

inline constexpr double a141 = 5.61675022830479523392909219681e-2;
inline constexpr double a147 = 2.53500210216624811088794765333e-1;
inline constexpr double a148 = -2.46239037470802489917441475441e-1;
inline constexpr double a149 = -1.24191423263816360469010140626e-1;
inline constexpr double a1410 = 1.5329179827876569731206322685e-1;
inline constexpr double a1411 = 8.20105229563468988491666602057e-3;
inline constexpr double a1412 = 7.56789766054569976138603589584e-3;
inline constexpr double a1413 = -8.298e-3;
inline constexpr double a151 = 3.18346481635021405060768473261e-2;
inline constexpr double a156 = 2.83009096723667755288322961402e-2;
inline constexpr double a157 = 5.35419883074385676223797384372e-2;
inline constexpr double a158 = -5.49237485713909884646569340306e-2;
inline constexpr double a1511 = -1.08347328697249322858509316994e-4;
inline constexpr double a1512 = 3.82571090835658412954920192323e-4;
inline constexpr double a1513 = -3.40465008687404560802977114492e-4;
inline constexpr double a1514 = 1.41312443674632500278074618366e-1;
inline constexpr double a161 = -4.28896301583791923408573538692e-1;
inline constexpr double a166 = -4.69762141536116384314449447206e0;
inline constexpr double a167 = 7.68342119606259904184240953878e0;
inline constexpr double a168 = 4.06898981839711007970213554331e0;
inline constexpr double a169 = 3.56727187455281109270669543021e-1;
inline constexpr double a1613 = -1.39902416515901462129418009734e-3;
inline constexpr double a1614 = 2.9475147891527723389556272149e0;
inline constexpr double a1615 = -9.15095847217987001081870187138e0;

inline constexpr double b1 = 5.42937341165687622380535766363e-2;
inline constexpr double b6 = 4.45031289275240888144113950566e0;
inline constexpr double b7 = 1.89151789931450038304281599044e0;
inline constexpr double b8 = -5.8012039600105847814672114227e0;
inline constexpr double b9 = 3.1116436695781989440891606237e-1;
inline constexpr double b10 = -1.52160949662516078556178806805e-1;
inline constexpr double b11 = 2.01365400804030348374776537501e-1;
inline constexpr double b12 = 4.47106157277725905176885569043e-2;

inline constexpr double bhh1 = 0.244094488188976377952755905512e+00;
inline constexpr double bhh2 = 0.733846688281611857341361741547e+00;
inline constexpr double bhh3 = 0.220588235294117647058823529412e-01;

inline constexpr double er1 = 0.1312004499419488073250102996e-01;
inline constexpr double er6 = -0.1225156446376204440720569753e+01;
inline constexpr double er7 = -0.4957589496572501915214079952e+00;
inline constexpr double er8 = 0.1664377182454986536961530415e+01;
inline constexpr double er9 = -0.3503288487499736816886487290e+00;
inline constexpr double er10 = 0.3341791187130174790297318841e+00;
inline constexpr double er11 = 0.8192320648511571246570742613e-01;
inline constexpr double er12 = -0.2235530786388629525884427845e-01;

inline constexpr double d41 = -0.84289382761090128651353491142e+01;
inline constexpr double d46 = 0.56671495351937776962531783590e+00;
inline constexpr double d47 = -0.30689499459498916912797304727e+01;
inline constexpr double d48 = 0.23846676565120698287728149680e+01;
inline constexpr double d49 = 0.21170345824450282767155149946e+01;
inline constexpr double d410 = -0.87139158377797299206789907490e+00;
inline constexpr double d411 = 0.22404374302607882758541771650e+01;
inline constexpr double d412 = 0.63157877876946881815570249290e+00;
inline constexpr double d413 = -0.88990336451333310820698117400e-01;
inline constexpr double d414 = 0.18148505520854727256656404962e+02;
inline constexpr double d415 = -0.91946323924783554000451984436e+01;
inline constexpr double d416 = -0.44360363875948939664310572000e+01;
inline constexpr double d51 = 0.10427508642579134603413151009e+02;
inline constexpr double d56 = 0.24228349177525818288430175319e+03;
inline constexpr double d57 = 0.16520045171727028198505394887e+03;
inline constexpr double d58 = -0.37454675472269020279518312152e+03;
inline constexpr double d59 = -0.22113666853125306036270938578e+02;
inline constexpr double d510 = 0.77334326684722638389603898808e+01;
inline constexpr double d511 = -0.30674084731089398182061213626e+02;
inline constexpr double d512 = -0.93321305264302278729567221706e+01;
inline constexpr double d513 = 0.15697238121770843886131091075e+02;
inline constexpr double d514 = -0.31139403219565177677282850411e+02;
inline constexpr double d515 = -0.93529243588444783865713862664e+01;
inline constexpr double d516 = 0.35816841486394083752465898540e+02;
inline constexpr double d61 = 0.19985053242002433820987653617e+02;
inline constexpr double d66 = -0.38703730874935176555105901742e+03;
inline constexpr double d67 = -0.18917813819516756882830838328e+03;
inline constexpr double d68 = 0.52780815920542364900561016686e+03;
inline constexpr double d69 = -0.11573902539959630126141871134e+02;
inline constexpr double d610 = 0.68812326946963000169666922661e+01;
inline constexpr double d611 = -0.10006050966910838403183860980e+01;
inline constexpr double d612 = 0.77771377980534432092869265740e+00;
inline constexpr double d613 = -0.27782057523535084065932004339e+01;
inline constexpr double d614 = -0.60196695231264120758267380846e+02;
inline constexpr double d615 = 0.84320405506677161018159903784e+02;
inline constexpr double d616 = 0.11992291136182789328035130030e+02;
inline constexpr double d71 = -0.25693933462703749003312586129e+02;
inline constexpr double d76 = -0.15418974869023643374053993627e+03;
inline constexpr double d77 = -0.23152937917604549567536039109e+03;
inline constexpr double d78 = 0.35763911791061412378285349910e+03;
inline constexpr double d79 = 0.93405324183624310003907691704e+02;
inline constexpr double d710 = -0.37458323136451633156875139351e+02;
inline constexpr double d711 = 0.10409964950896230045147246184e+03;
inline constexpr double d712 = 0.29840293426660503123344363579e+02;
inline constexpr double d713 = -0.43533456590011143754432175058e+02;
inline constexpr double d714 = 0.96324553959188282948394950600e+02;
inline constexpr double d715 = -0.39177261675615439165231486172e+02;
inline constexpr double d716 = -0.14972683625798562581422125276e+03;

}  // namespace dop853

/// One accepted step [t0, t0 + h]. With dense output enabled, `operator()(t)` evaluates the
/// continuous extension anywhere inside the step.
template <std::size_t N>
struct OdeStep {
    using State = std::array<double, N>;
    double t0 = 0.0, h = 0.0, tn = 0.0;
    State y0{}, y1{}, f0{}, f1{};
    std::array<State, 8> cont{};
    bool dense = false;

    double t1() const { return tn; }
    bool contains(double t) const { return h > 0.0 ? (t >= t0 && t <= tn) : (t <= t0 && t >= tn); }
    State operator()(double t) const {
        State out;
        const double s = (t - t0) / h, s1 = 1.0 - s;
        if (dense) {
            for (std::size_t i = 0; i < N; ++i) {
                const double par = cont[4][i] + s * (cont[5][i] + s1 * (cont[6][i] + s * cont[7][i]));
                out[i] = cont[0][i] + s * (cont[1][i] + s1 * (cont[2][i] + s * (cont[3][i] + s1 * par)));
            }
        } else {  // cubic Hermite from the end-point derivatives
            const double h00 = s1 * s1 * (1.0 + 2.0 * s), h01 = s * s * (3.0 - 2.0 * s);
            const double h10 = s * s1 * s1, h11 = -s * s * s1;
            for (std::size_t i = 0; i < N; ++i)
                out[i] = h00 * y0[i] + h01 * y1[i] + h * (h10 * f0[i] + h11 * f1[i]);
        }
        return out;
    }
};

/// Adaptive DOP853 integration of y' = f(t, y) from t0 towards `stops.back()` (backwards when
/// it lies before t0). Steps are shortened to land exactly on every entry of `stops`, which
/// must be monotone in the direction of integration. `observer(const OdeStep&, bool at_stop)`
/// is called after every accepted step; returning false ends the integration early.
/// A library Error thrown by f counts as a rejected step; it is rethrown if the step size
/// underflows while retrying.
template <std::size_t N, class Rhs, class Observer>
OdeStats integrate_dop853(Rhs&& f, double t0, std::array<double, N> y, std::span<const double> stops,
                          const OdeOptions& opt, Observer&& observer) {
    using namespace dop853;
    using State = std::array<double, N>;
    OdeStats stats;
    if (stops.empty()) return stats;
    const double t_end = stops.back();
    const double dir = t_end >= t0 ? 1.0 : -1.0;
    constexpr double safe = 0.9, facc1 = 1.0 / 0.333, facc2 = 1.0 / 6.0, beta = 0.0;
    constexpr double expo1 = 1.0 / 8.0 - beta * 0.2;
    constexpr auto n = static_cast<double>(N);

    auto eval = [&](double t, const State& yy) {
        ++stats.evaluations;
        return f(t, yy);
    };
    auto scale = [&](double a, double b) { return opt.abs_tol + opt.rel_tol * std::max(std::abs(a), std::abs(b)); };

    double t = t0;
    State k1 = eval(t, y);

    // Initial step guess (Hairer's hinit).
    double h = opt.initial_step;
    const double hmax = std::min(opt.max_step, std::abs(t_end - t0));
    if (h <= 0.0) {
        double dnf = 0.0, dny = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sk = scale(y[i], y[i]);
            dnf += (k1[i] / sk) * (k1[i] / sk);
            dny += (y[i] / sk) * (y[i] / sk);
        }
        h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
        h = std::min(h, hmax);
        State y1;
        for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + dir * h * k1[i];
        double der2 = 0.0;
        try {
            const State k2 = eval(t + dir * h, y1);
            for (std::size_t i = 0; i < N; ++i) {
                const double d = (k2[i] - k1[i]) / scale(y[i], y[i]);
                der2 += d * d;
            }
            der2 = std::sqrt(der2) / h;
        } catch (const Error&) {
            der2 = 0.0;
        }
        const double der12 = std::max(der2, std::sqrt(dnf));
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 1.0 / 8.0);
        h = std::min({100.0 * std::abs(h), h1, hmax});
    }
    if (!(h > 0.0)) h = std::max(std::abs(t_end - t0), 1e-6);

    std::size_t next_stop = 0;
    while (next_stop < stops.size() && (stops[next_stop] - t) * dir <= 0.0) {
        OdeStep<N> trivial;
        trivial.t0 = trivial.tn = t;
        trivial.y0 = trivial.y1 = y;
        trivial.f0 = trivial.f1 = k1;
        if (!observer(trivial, true)) return stats;
        ++next_stop;
    }

    double facold = 1e-4;
    bool last_rejected = false;
    std::array<State, 17> k;
    while (next_stop < stops.size()) {
        if (stats.steps >= opt.max_steps) throw StepUnderflow("integrator exceeded the maximum number of steps");
        const double target = stops[next_stop];
        double hstep = std::min(h, hmax);
        bool lands = false;
        if ((t + dir * hstep - target) * dir >= 0.0 || std::abs(target - t - dir * hstep) <= 1e-12 * hstep) {
            hstep = std::abs(target - t);
            lands = true;
        }
        if (hstep < 1e-14 * std::max(1.0, std::abs(t)) && !lands)
            throw StepUnderflow("step size underflow at t = " + std::to_string(t));
        const double hs = dir * hstep;
        ++stats.steps;

        State ynew, k13{};
        double err = 0.0;
        bool failed = false;
        std::string failure;
        try {
            k[1] = k1;
            auto stage = [&](double c, auto&& combine) {
                State yy;
                for (std::size_t i = 0; i < N; ++i) yy[i] = y[i] + hs * combine(i);
                return eval(t + c * hs, yy);
            };
            k[2] = stage(c2, [&](std::size_t i) { return a21 * k[1][i]; });
            k[3] = stage(c3, [&](std::size_t i) { return a31 * k[1][i] + a32 * k[2][i]; });
            k[4] = stage(c4, [&](std::size_t i) { return a41 * k[1][i] + a43 * k[3][i]; });
            k[5] = stage(c5, [&](std::size_t i) { return a51 * k[1][i] + a53 * k[3][i] + a54 * k[4][i]; });
            k[6] = stage(c6, [&](std::size_t i) { return a61 * k[1][i] + a64 * k[4][i] + a65 * k[5][i]; });
            k[7] = stage(c7, [&](std::size_t i) { return a71 * k[1][i] + a74 * k[4][i] + a75 * k[5][i] + a76 * k[6][i]; });
            k[8] = stage(c8, [&](std::size_t i) {
                return a81 * k[1][i] + a84 * k[4][i] + a85 * k[5][i] + a86 * k[6][i] + a87 * k[7][i];
            });
            k[9] = stage(c9, [&](std::size_t i) {
                return a91 * k[1][i] + a94 * k[4][i] + a95 * k[5][i] + a96 * k[6][i] + a97 * k[7][i] + a98 * k[8][i];
            });
            k[10] = stage(c10, [&](std::size_t i) {
                return a101 * k[1][i] + a104 * k[4][i] + a105 * k[5][i] + a106 * k[6][i] + a107 * k[7][i] +
                       a108 * k[8][i] + a109 * k[9][i];
            });
            k[11] = stage(c11, [&](std::size_t i) {
                return a111 * k[1][i] + a114 * k[4][i] + a115 * k[5][i] + a116 * k[6][i] + a117 * k[7][i] +
                       a118 * k[8][i] + a119 * k[9][i] + a1110 * k[10][i];
            });
            k[12] = stage(1.0, [&](std::size_t i) {
                return a121 * k[1][i] + a124 * k[4][i] + a125 * k[5][i] + a126 * k[6][i] + a127 * k[7][i] +
                       a128 * k[8][i] + a129 * k[9][i] + a1210 * k[10][i] + a1211 * k[11][i];
            });
            State incr;
            double err2 = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                incr[i] = b1 * k[1][i] + b6 * k[6][i] + b7 * k[7][i] + b8 * k[8][i] + b9 * k[9][i] +
                          b10 * k[10][i] + b11 * k[11][i] + b12 * k[12][i];
                ynew[i] = y[i] + hs * incr[i];
                const double sk = scale(y[i], ynew[i]);
                const double e3 = incr[i] - bhh1 * k[1][i] - bhh2 * k[9][i] - bhh3 * k[12][i];
                const double e5 = er1 * k[1][i] + er6 * k[6][i] + er7 * k[7][i] + er8 * k[8][i] + er9 * k[9][i] +
                                  er10 * k[10][i] + er11 * k[11][i] + er12 * k[12][i];
                err2 += (e3 / sk) * (e3 / sk);
                err += (e5 / sk) * (e5 / sk);
            }
            double deno = err + 0.01 * err2;
            if (deno <= 0.0) deno = 1.0;
            err = hstep * err * std::sqrt(1.0 / (n * deno));
            if (!std::isfinite(err)) {
                failed = true;
                failure = "non-finite error estimate";
            } else if (err <= 1.0) {
                k13 = eval(t + hs, ynew);
            }
        } catch (const Error& e) {
            failed = true;
            failure = e.what();
            if (hstep * 0.25 < 1e-14 * std::max(1.0, std::abs(t))) throw;
        }

        if (failed) {
            ++stats.rejected;
            h = hstep * 0.25;
            if (h < 1e-14 * std::max(1.0, std::abs(t)))
                throw StepUnderflow("step size underflow at t = " + std::to_string(t) + ": " + failure);
            last_rejected = true;
            continue;
        }

        const double fac11 = std::pow(err, expo1);
        double fac = fac11 / std::pow(facold, beta);
        fac = std::max(facc2, std::min(facc1, fac / safe));
        double hnew = hstep / fac;
        if (err <= 1.0) {
            facold = std::max(err, 1e-4);
            ++stats.accepted;
            OdeStep<N> step;
            step.t0 = t;
            step.h = hs;
            step.tn = lands ? target : t + hs;
            step.y0 = y;
            step.y1 = ynew;
            step.f0 = k1;
            step.f1 = k13;
            if (opt.dense) {
                step.dense = true;
                auto& rc = step.cont;
                for (std::size_t i = 0; i < N; ++i) {
                    rc[0][i] = y[i];
                    const double ydiff = ynew[i] - y[i];
                    rc[1][i] = ydiff;
                    const double bspl = hs * k[1][i] - ydiff;
                    rc[2][i] = bspl;
                    rc[3][i] = ydiff - hs * k13[i] - bspl;
                    rc[4][i] = d41 * k[1][i] + d46 * k[6][i] + d47 * k[7][i] + d48 * k[8][i] + d49 * k[9][i] +
                               d410 * k[10][i] + d411 * k[11][i] + d412 * k[12][i];
                    rc[5][i] = d51 * k[1][i] + d56 * k[6][i] + d57 * k[7][i] + d58 * k[8][i] + d59 * k[9][i] +
                               d510 * k[10][i] + d511 * k[11][i] + d512 * k[12][i];
                    rc[6][i] = d61 * k[1][i] + d66 * k[6][i] + d67 * k[7][i] + d68 * k[8][i] + d69 * k[9][i] +
                               d610 * k[10][i] + d611 * k[11][i] + d612 * k[12][i];
                    rc[7][i] = d71 * k[1][i] + d76 * k[6][i] + d77 * k[7][i] + d78 * k[8][i] + d79 * k[9][i] +
                               d710 * k[10][i] + d711 * k[11][i] + d712 * k[12][i];
                }
                k[13] = k13;
                auto stage = [&](double c, auto&& combine) {
                    State yy;
                    for (std::size_t i = 0; i < N; ++i) yy[i] = y[i] + hs * combine(i);
                    return eval(t + c * hs, yy);
                };
                k[14] = stage(c14, [&](std::size_t i) {
                    return a141 * k[1][i] + a147 * k[7][i] + a148 * k[8][i] + a149 * k[9][i] + a1410 * k[10][i] +
                           a1411 * k[11][i] + a1412 * k[12][i] + a1413 * k[13][i];
                });
                k[15] = stage(c15, [&](std::size_t i) {
                    return a151 * k[1][i] + a156 * k[6][i] + a157 * k[7][i] + a158 * k[8][i] + a1511 * k[11][i] +
                           a1512 * k[12][i] + a1513 * k[13][i] + a1514 * k[14][i];
                });
                k[16] = stage(c16, [&](std::size_t i) {
                    return a161 * k[1][i] + a166 * k[6][i] + a167 * k[7][i] + a168 * k[8][i] + a169 * k[9][i] +
                           a1613 * k[13][i] + a1614 * k[14][i] + a1615 * k[15][i];
                });
                for (std::size_t i = 0; i < N; ++i) {
                    rc[4][i] = hs * (rc[4][i] + d413 * k[13][i] + d414 * k[14][i] + d415 * k[15][i] + d416 * k[16][i]);
                    rc[5][i] = hs * (rc[5][i] + d513 * k[13][i] + d514 * k[14][i] + d515 * k[15][i] + d516 * k[16][i]);
                    rc[6][i] = hs * (rc[6][i] + d613 * k[13][i] + d614 * k[14][i] + d615 * k[15][i] + d616 * k[16][i]);
                    rc[7][i] = hs * (rc[7][i] + d713 * k[13][i] + d714 * k[14][i] + d715 * k[15][i] + d716 * k[16][i]);
                }
            }
            k1 = k13;
            y = ynew;
            t = lands ? target : t + hs;
            if (std::abs(hnew) > hmax) hnew = hmax;
            if (last_rejected) hnew = std::min(hnew, hstep);
            last_rejected = false;
            // A step clipped to a stop does not shrink the controller's proposal.
            if (!lands || hnew > h) h = hnew;
            if (lands) ++next_stop;
            if (!observer(static_cast<const OdeStep<N>&>(step), lands)) return stats;
            while (next_stop < stops.size() && (stops[next_stop] - t) * dir <= 0.0) ++next_stop;
        } else {
            ++stats.rejected;
            hnew = hstep / std::min(facc1, fac11 / safe);
            last_rejected = true;
            h = hnew;
        }
    }
    return stats;
}

}  // namespace ermakov
