#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynamics.hpp"

namespace hetero {

template <std::size_t N>
using Vec = std::array<double, N>;

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StepUnderflow : NumericalFailure {
    double x;
    std::vector<double> last_state;
    StepUnderflow(double x_, std::vector<double> s)
        : NumericalFailure("step size underflow at x = " + std::to_string(x_)),
          x(x_),
          last_state(std::move(s)) {}
};

template <std::size_t N>
struct EventSpec {
    std::string name;
    std::function<double(const Vec<N>&)> fn;
    int direction = 0;  // +1 rising, -1 falling, 0 either
    bool terminal = false;
};

template <std::size_t N>
struct EventHit {
    std::string name;
    double x;
    Vec<N> state;
};

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;  // 0 picks one automatically
    long max_steps = 20'000'000;
};

// Dormand-Prince 5(4) step with its native quartic dense output.
template <std::size_t N>
struct DenseStep {
    double x0 = 0, h = 0;
    Vec<N> r1{}, r2{}, r3{}, r4{}, r5{};
    Vec<N> eval(double x) const {
        const double t = (x - x0) / h, t1 = 1.0 - t;
        Vec<N> y;
        for (std::size_t i = 0; i < N; ++i)
            y[i] = r1[i] + t * (r2[i] + t1 * (r3[i] + t * (r4[i] + t1 * r5[i])));
        return y;
    }
};

template <std::size_t N>
struct Trajectory {
    std::vector<double> x;
    std::vector<Vec<N>> y;
    std::vector<DenseStep<N>> steps;
    std::vector<double> monitor;  // first-integral values when available
    double max_drift = 0.0;
    std::vector<EventHit<N>> events;
    long n_rhs = 0;

    const Vec<N>& back() const { return y.back(); }

    // Dense evaluation anywhere inside the covered span.
    Vec<N> eval(double xq) const {
        if (steps.empty()) return y.front();
        const bool fwd = steps.front().h > 0;
        auto it = std::lower_bound(steps.begin(), steps.end(), xq,
                                   [fwd](const DenseStep<N>& s, double v) {
                                       return fwd ? s.x0 + s.h < v : s.x0 + s.h > v;
                                   });
        if (it == steps.end()) --it;
        return it->eval(xq);
    }
};

namespace dp5 {
inline constexpr double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
inline constexpr double a21 = 1. / 5;
inline constexpr double a31 = 3. / 40, a32 = 9. / 40;
inline constexpr double a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9;
inline constexpr double a51 = 19372. / 6561, a52 = -25360. / 2187, a53 = 64448. / 6561,
                        a54 = -212. / 729;
inline constexpr double a61 = 9017. / 3168, a62 = -355. / 33, a63 = 46732. / 5247,
                        a64 = 49. / 176, a65 = -5103. / 18656;
inline constexpr double a71 = 35. / 384, a73 = 500. / 1113, a74 = 125. / 192,
                        a75 = -2187. / 6784, a76 = 11. / 84;
inline constexpr double e1 = 71. / 57600, e3 = -71. / 16695, e4 = 71. / 1920,
                        e5 = -17253. / 339200, e6 = 22. / 525, e7 = -1. / 40;
inline constexpr double d1 = -12715105075. / 11282082432, d3 = 87487479700. / 32700410799,
                        d4 = -10690763975. / 1880347072, d5 = 701980252875. / 199316789632,
                        d6 = -1453857185. / 822651844, d7 = 69997945. / 29380423;
}  // namespace dp5

struct IntegrateOptions {
    bool store = true;                       // keep samples and dense steps
    const std::vector<double>* stops = nullptr;  // abscissae every step must land on
};

// Generic adaptive integration of y' = f(x, y) from x0 to x1 (either direction).
template <std::size_t N, class Rhs>
Trajectory<N> integrate_system(Rhs&& f, Vec<N> y, double x0, double x1,
                               const IntegratorConfig& cfg, const IntegrateOptions& opt = {},
                               const std::vector<EventSpec<N>>& events = {},
                               const std::function<double(const Vec<N>&)>& monitor = {}) {
    using namespace dp5;
    Trajectory<N> tr;
    if (!(cfg.rel_tol > 0) || !(cfg.abs_tol > 0) || !(cfg.max_step > 0))
        throw std::invalid_argument("integrator tolerances and max_step must be positive");
    const double span = x1 - x0;
    tr.x.push_back(x0);
    tr.y.push_back(y);
    double w0 = 0;
    if (monitor) {
        w0 = monitor(y);
        tr.monitor.push_back(w0);
    }
    if (span == 0.0) return tr;
    const double dir = span > 0 ? 1.0 : -1.0;

    std::vector<double> stops;
    if (opt.stops) {
        for (double s : *opt.stops)
            if ((s - x0) * dir > 0 && (x1 - s) * dir > 0) stops.push_back(s);
        std::sort(stops.begin(), stops.end(), [dir](double a, double b) { return a * dir < b * dir; });
    }
    std::size_t next_stop = 0;

    auto scale = [&](const Vec<N>& a, const Vec<N>& b, std::size_t i) {
        return cfg.abs_tol + cfg.rel_tol * std::max(std::abs(a[i]), std::abs(b[i]));
    };

    Vec<N> k1 = f(x0, y), k2, k3, k4, k5, k6, k7, yt, y1;
    tr.n_rhs = 1;
    double x = x0;
    double h = cfg.initial_step;
    if (h <= 0) {
        double n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
            n0 += (y[i] / sc) * (y[i] / sc);
            n1 += (k1[i] / sc) * (k1[i] / sc);
        }
        n0 = std::sqrt(n0 / N);
        n1 = std::sqrt(n1 / N);
        h = (n0 < 1e-5 || n1 < 1e-5) ? 1e-6 : 0.01 * n0 / n1;
        // a component starting at zero under a tiny abs_tol would otherwise force a sliver step
        h = std::max(h, 1e-8 * std::max(1.0, std::abs(span)));
        h = std::min({h, std::abs(span), cfg.max_step});
    }
    std::vector<double> ev_prev(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) ev_prev[e] = events[e].fn(y);

    double err_old = 1e-4;
    long nstep = 0;
    bool done = false;
    while (!done) {
        if (++nstep > cfg.max_steps) throw StepUnderflow(x, {y.begin(), y.end()});
        h = std::min(h, cfg.max_step);
        const double h_proposed = h;
        double target = x1;
        if (next_stop < stops.size()) target = stops[next_stop];
        if (std::abs(target - x) <= 1e-12 * std::max(1.0, std::abs(x))) {
            x = target;  // rounding leftover; snap instead of taking a sliver step
            if (opt.store) tr.x.back() = x;
            if (next_stop < stops.size())
                ++next_stop;
            else
                done = true;
            continue;
        }
        bool hit = false;
        if (h >= std::abs(target - x) * (1.0 - 1e-12)) {
            h = std::abs(target - x);
            hit = true;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(x))) throw StepUnderflow(x, {y.begin(), y.end()});
        const double hs = dir * h;
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * a21 * k1[i];
        k2 = f(x + c2 * hs, yt);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        k3 = f(x + c3 * hs, yt);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        k4 = f(x + c4 * hs, yt);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        k5 = f(x + c5 * hs, yt);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                 a65 * k5[i]);
        k6 = f(x + hs, yt);
        for (std::size_t i = 0; i < N; ++i)
            y1[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] +
                                 a76 * k6[i]);
        k7 = f(x + hs, y1);
        tr.n_rhs += 6;
        double err = 0;
        bool finite = true;
        for (std::size_t i = 0; i < N; ++i) {
            const double ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                    e6 * k6[i] + e7 * k7[i]);
            const double r = ei / scale(y, y1, i);
            err += r * r;
            finite = finite && std::isfinite(y1[i]);
        }
        err = std::sqrt(err / N);
        if (!finite || !std::isfinite(err)) {
            h *= 0.25;
            if (h < 1e-14) throw NumericalFailure("non-finite state at x = " + std::to_string(x));
            continue;
        }
        if (err > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            hit = false;
            continue;
        }
        // accepted
        DenseStep<N> st;
        st.x0 = x;
        st.h = hs;
        for (std::size_t i = 0; i < N; ++i) {
            const double yd = y1[i] - y[i], bs = hs * k1[i] - yd;
            st.r1[i] = y[i];
            st.r2[i] = yd;
            st.r3[i] = bs;
            st.r4[i] = yd - hs * k7[i] - bs;
            st.r5[i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                             d7 * k7[i]);
        }
        const double xn = hit ? target : x + hs;
        // events on the dense polynomial
        bool stop_now = false;
        for (std::size_t e = 0; e < events.size(); ++e) {
            const double fn = events[e].fn(y1), fp = ev_prev[e];
            const bool rising = fp < 0 && fn >= 0, falling = fp > 0 && fn <= 0;
            const int want = events[e].direction;
            if ((rising && want >= 0) || (falling && want <= 0)) {
                double lo = x, hi = xn, flo = fp;
                for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-13; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = events[e].fn(st.eval(mid));
                    if ((fm < 0) == (flo < 0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                const double xe = 0.5 * (lo + hi);
                tr.events.push_back({events[e].name, xe, st.eval(xe)});
                if (events[e].terminal) stop_now = true;
            }
            ev_prev[e] = fn;
        }
        x = xn;
        y = y1;
        k1 = k7;
        if (opt.store) {
            tr.steps.push_back(st);
            tr.x.push_back(x);
            tr.y.push_back(y);
        }
        if (monitor) {
            const double w = monitor(y);
            tr.max_drift = std::max(tr.max_drift, std::abs(w - w0));
            if (opt.store) tr.monitor.push_back(w);
        }
        if (stop_now) {
            const auto& ev = tr.events.back();
            if (opt.store) {
                tr.x.back() = ev.x;
                tr.y.back() = ev.state;
            } else {
                tr.x.push_back(ev.x);
                tr.y.push_back(ev.state);
            }
            return tr;
        }
        if (hit) {
            if (next_stop < stops.size())
                ++next_stop;
            else
                done = true;
        }
        // PI step-size controller
        const double errc = std::max(err, 1e-10);
        double fac = 0.9 * std::pow(errc, -0.7 / 5) * std::pow(err_old, 0.4 / 5);
        fac = std::clamp(fac, 0.2, 10.0);
        err_old = std::max(err, 1e-4);
        h *= fac;
        if (hit) h = std::max(h, h_proposed);
    }
    if (!opt.store) {
        tr.x.push_back(x);
        tr.y.push_back(y);
    }
    return tr;
}

// Convenience wrapper for the amplitude system with first-integral monitoring.
inline Trajectory<6> integrate(const State& s0, double x0, double x1, const Params& p,
                               const IntegratorConfig& cfg = {},
                               const std::vector<EventSpec<6>>& events = {},
                               const IntegrateOptions& opt = {}) {
    auto rhs = [&p](double, const State& s) { return vector_field(s, p); };
    auto mon = [&p](const State& s) { return first_integral(s, p); };
    return integrate_system<6>(rhs, s0, x0, x1, cfg, opt, events, mon);
}

}  // namespace hetero
