#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "connect.hpp"
#include "params.hpp"

namespace hetero {

struct InsufficientTail : DomainError {
    using DomainError::DomainError;
};

struct DecayFit {
    double x_lo = 0, x_hi = 0;
    double slope = 0;     // d log|y| / dx
    double rate = 0;      // |slope|
    double residual = 0;  // rms of the log-linear fit
    bool envelope = false;
    int points = 0;
};

namespace detail {

inline DecayFit log_linear(const std::vector<double>& x, const std::vector<double>& ly, bool env) {
    DecayFit f;
    f.envelope = env;
    f.points = int(x.size());
    if (x.size() < 2) throw InsufficientTail("decay fit needs at least two usable points");
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += ly[i];
        sxx += x[i] * x[i];
        sxy += x[i] * ly[i];
    }
    const double den = n * sxx - sx * sx;
    if (!(den > 0)) throw InsufficientTail("decay fit window is degenerate");
    f.slope = (n * sxy - sx * sy) / den;
    const double c = (sy - f.slope * sx) / n;
    double r2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) r2 += std::pow(ly[i] - c - f.slope * x[i], 2);
    f.residual = std::sqrt(r2 / n);
    f.rate = std::abs(f.slope);
    f.x_lo = *std::min_element(x.begin(), x.end());
    f.x_hi = *std::max_element(x.begin(), x.end());
    return f;
}

}  // namespace detail

// Least squares on log|y| (plain) or on the local maxima of |y| (oscillatory envelope).
inline DecayFit fit_exponential(const std::vector<double>& x, const std::vector<double>& y,
                                bool envelope = false) {
    if (x.size() != y.size()) throw DomainError("fit_exponential: size mismatch");
    std::vector<double> xs, ls;
    if (!envelope) {
        for (std::size_t i = 0; i < x.size(); ++i)
            if (y[i] != 0.0) {
                xs.push_back(x[i]);
                ls.push_back(std::log(std::abs(y[i])));
            }
    } else {
        for (std::size_t i = 1; i + 1 < x.size(); ++i) {
            const double a = std::abs(y[i - 1]), b = std::abs(y[i]), c = std::abs(y[i + 1]);
            if (!(b >= a && b > c) || b == 0 || a == 0 || c == 0) continue;
            // parabola through the three log values locates the peak between samples
            const double la = std::log(a), lb = std::log(b), lc = std::log(c);
            const double d = la - 2 * lb + lc;
            const double t = d < 0 ? 0.5 * (la - lc) / d : 0.0;
            const double h = x[i + 1] - x[i];
            xs.push_back(x[i] + t * h);
            ls.push_back(lb - 0.25 * (la - lc) * t);
        }
    }
    return detail::log_linear(xs, ls, envelope);
}

struct DecayRates {
    DecayFit left_B, right_B, right_A, left_A;
};

namespace detail {

// Samples of y inside [lo, hi] with the deviation in the linear regime and above roundoff.
inline void tail_window(const HeteroclinicProfile& prof, double lo, double hi,
                        double (*dev)(const State&), std::vector<double>& xs,
                        std::vector<double>& ys, bool keep_sign = false) {
    double peak = 0;
    for (std::size_t i = 0; i < prof.x.size(); ++i)
        if (prof.x[i] >= lo && prof.x[i] <= hi) peak = std::max(peak, std::abs(dev(prof.s[i])));
    for (std::size_t i = 0; i < prof.x.size(); ++i) {
        if (prof.x[i] < lo || prof.x[i] > hi) continue;
        const double d = dev(prof.s[i]);
        if (keep_sign || (std::abs(d) < 0.1 && std::abs(d) > std::max(1e-9 * peak, 1e-13))) {
            xs.push_back(prof.x[i]);
            ys.push_back(d);
        }
    }
}

inline void require_efolds(const DecayFit& f, const char* what) {
    if (f.rate * (f.x_hi - f.x_lo) < 3.0)
        throw InsufficientTail(std::string(what) + ": fit window spans fewer than 3 e-folds");
}

}  // namespace detail

// Tails exclude the outermost 10% and the corner window |x| <= 2 x*+.
inline DecayRates fit_decay_rates(const HeteroclinicProfile& prof) {
    const double Lm = -prof.x.front(), Lp = prof.x.back(), xc = 2.0 * prof.x_star_plus;
    if (!(Lm > xc && Lp > xc)) throw InsufficientTail("profile tails shorter than the corner window");
    DecayRates r;
    std::vector<double> xs, ys;
    detail::tail_window(prof, -0.9 * Lm, -xc, [](const State& s) { return s[iB0]; }, xs, ys);
    r.left_B = fit_exponential(xs, ys);
    detail::require_efolds(r.left_B, "left B tail");
    xs.clear(), ys.clear();
    detail::tail_window(prof, -0.9 * Lm, -xc, [](const State& s) { return 1.0 - s[iA0]; }, xs, ys);
    r.left_A = fit_exponential(xs, ys);
    xs.clear(), ys.clear();
    detail::tail_window(prof, xc, 0.9 * Lp, [](const State& s) { return 1.0 - s[iB0]; }, xs, ys);
    r.right_B = fit_exponential(xs, ys);
    detail::require_efolds(r.right_B, "right B tail");
    xs.clear(), ys.clear();
    detail::tail_window(prof, xc, 0.9 * Lp, [](const State& s) { return s[iA0]; }, xs, ys, true);
    // envelope: keep the stretch above roundoff relative to the largest oscillation
    double peak = 0;
    for (double v : ys) peak = std::max(peak, std::abs(v));
    std::size_t cut = ys.size();
    for (std::size_t i = 0; i < ys.size(); ++i)
        if (std::abs(ys[i]) > 1e-9 * peak) cut = i + 1;
    xs.resize(cut), ys.resize(cut);
    r.right_A = fit_exponential(xs, ys, true);
    detail::require_efolds(r.right_A, "right A envelope");
    return r;
}

struct Check {
    std::string name;
    std::string anchor;  // the claim being tested
    double measured = 0, target = 0, tolerance = 0;
    bool passed = false;
};

struct VerificationReport {
    std::vector<Check> checks;
    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
    const Check* find(const std::string& n) const {
        for (const auto& c : checks)
            if (c.name == n) return &c;
        return nullptr;
    }
};

inline Check relative_check(std::string name, std::string anchor, double measured, double target,
                            double rel) {
    Check c{std::move(name), std::move(anchor), measured, target, rel, false};
    c.passed = std::abs(measured - target) <= rel * std::abs(target);
    return c;
}

inline std::vector<Check> rate_checks(const DecayRates& r, const Params& p) {
    const double e = p.epsilon, d = p.delta;
    std::vector<Check> out;
    out.push_back(relative_check("rate_left_B", "B grows like exp(eps delta x) as x -> -inf", r.left_B.rate,
                                 e * d, 0.10));
    out.push_back(relative_check("rate_right_B", "1-B decays like exp(-sqrt2 eps x)", r.right_B.rate,
                                 std::sqrt(2.0) * e, 0.10));
    out.push_back(relative_check("rate_right_A_envelope", "A envelope decays like exp(-sqrt(delta/2) x)",
                                 r.right_A.rate, std::sqrt(d / 2.0), 0.10));
    // 1-A is quadratic in B, so its rate is 2 eps delta; only "at least eps delta" is asserted.
    Check c{"rate_left_A", "1-A decays at least like exp(eps delta x)", r.left_A.rate, e * d, 0.10, false};
    c.passed = r.left_A.rate >= 0.9 * e * d;
    out.push_back(c);
    return out;
}

// Fitted constants c for the corner-layer envelopes; each passes when c <= ceiling.
inline std::vector<Check> corollary_envelopes(const HeteroclinicProfile& prof, double ceiling = 50.0) {
    const Params& p = prof.p;
    const double e = p.epsilon, d = p.delta, g1 = 1.0 + d * d;
    const double ds_left = 0.9 * d, ds_right = std::pow(d, 0.4) / 10.0;
    std::array<double, 4> cl{}, cr{};
    for (std::size_t i = 0; i < prof.x.size(); ++i) {
        const double x = prof.x[i];
        const State& s = prof.s[i];
        if (x <= 0) {
            const double B = s[iB0], w = B * std::exp(e * ds_left * x);
            if (!(w > 0)) continue;
            const double gap = std::abs(s[iA0] - std::sqrt(std::max(0.0, 1.0 - g1 * B * B)));
            cl[0] = std::max(cl[0], gap / (std::pow(e, 0.4) * w));
            for (int m = 1; m < 4; ++m) cl[m] = std::max(cl[m], std::abs(s[m]) / (std::pow(e, 0.6) * w));
        }
        if (x >= 0) {
            const double w = std::pow(e, 0.4) * std::exp(-ds_right * std::pow(e, 0.2) * x);
            for (int m = 0; m < 4; ++m) cr[m] = std::max(cr[m], std::abs(s[m]) / w);
        }
    }
    std::vector<Check> out;
    for (int m = 0; m < 4; ++m) {
        Check c{"envelope_left_m" + std::to_string(m),
                m == 0 ? "|A - A*(B)| <= c eps^(2/5) B exp(eps delta* x), x <= 0"
                       : "|A^(m)| <= c eps^(3/5) B exp(eps delta* x), x <= 0",
                cl[m], 0.0, ceiling, cl[m] <= ceiling};
        out.push_back(c);
    }
    for (int m = 0; m < 4; ++m) {
        Check c{"envelope_right_m" + std::to_string(m),
                "|A^(m)| <= c eps^(2/5) exp(-delta* eps^(1/5) x), x >= 0", cr[m], 0.0, ceiling,
                cr[m] <= ceiling};
        out.push_back(c);
    }
    // slow-manifold gap must vanish faster than exp(0.9 eps delta x)
    const double Lm = -prof.x.front(), xc = 2.0 * prof.x_star_plus;
    std::vector<double> gx, gy;
    for (std::size_t i = 0; i < prof.x.size(); ++i) {
        const double x = prof.x[i];
        if (x < -0.9 * Lm || x > -xc) continue;
        const double B = prof.s[i][iB0];
        const double gap = std::abs(prof.s[i][iA0] - std::sqrt(std::max(0.0, 1.0 - g1 * B * B)));
        if (gap > 1e-13) {
            gx.push_back(x);
            gy.push_back(gap);
        }
    }
    Check c{"slow_manifold_gap_rate", "A - A*(B) vanishes faster than exp(0.9 eps delta x)", 0.0,
            ds_left * e, 0.0, false};
    if (gx.size() >= 2) {
        c.measured = fit_exponential(gx, gy).rate;
        c.passed = c.measured >= ds_left * e;
    }
    out.push_back(c);
    return out;
}

inline std::vector<Check> monotonicity_checks(const HeteroclinicProfile& prof) {
    double minB1 = std::numeric_limits<double>::infinity(), lo = 1, hi = 0;
    for (std::size_t i = 0; i < prof.s.size(); ++i) {
        minB1 = std::min(minB1, prof.s[i][iB1]);
        if (i > 0 && i + 1 < prof.s.size()) {
            lo = std::min(lo, prof.s[i][iB0]);
            hi = std::max(hi, prof.s[i][iB0]);
        }
    }
    std::vector<Check> out;
    out.push_back({"monotone_B", "B' > 0 at every sample", minB1, 0.0, 0.0, minB1 > 0});
    out.push_back({"B_in_unit_interval", "0 < B < 1 strictly inside the domain", std::min(lo, 1 - hi), 0.0,
                   0.0, lo > 0 && hi < 1});
    return out;
}

inline Check first_integral_check(const HeteroclinicProfile& prof, double tol = 1e-8) {
    double w = 0;
    for (const auto& s : prof.s) w = std::max(w, std::abs(first_integral(s, prof.p)));
    return {"first_integral", "W = 0 along the connection", w, 0.0, tol, w < tol};
}

inline VerificationReport verify_profile(const HeteroclinicProfile& prof) {
    VerificationReport rep;
    rep.checks.push_back(first_integral_check(prof));
    for (auto& c : monotonicity_checks(prof)) rep.checks.push_back(c);
    try {
        for (auto& c : rate_checks(fit_decay_rates(prof), prof.p)) rep.checks.push_back(c);
    } catch (const InsufficientTail& e) {
        rep.checks.push_back({"decay_rates", e.what(), 0, 0, 0, false});
    }
    for (auto& c : corollary_envelopes(prof)) rep.checks.push_back(c);
    return rep;
}

// ---- scaling study ----

struct ScalingSample {
    double epsilon = 0;
    bool converged = false;
    double A0 = 0, width = 0;
    int newton_iterations = 0;
    std::string error;
};

struct ScalingFit {
    std::vector<ScalingSample> samples;
    double slope_A0 = 0, slope_width = 0;
    double intercept_A0 = 0, intercept_width = 0;
    int used = 0, excluded = 0;
};

inline ScalingFit scaling_fit(std::vector<ScalingSample> samples) {
    ScalingFit f;
    std::vector<double> le, la, lw;
    for (const auto& s : samples) {
        if (!s.converged) {
            ++f.excluded;
            continue;
        }
        le.push_back(std::log(s.epsilon));
        la.push_back(std::log(s.A0));
        lw.push_back(std::log(s.width));
    }
    f.used = int(le.size());
    f.samples = std::move(samples);
    if (f.used < 2) throw NumericalFailure("scaling fit: fewer than two converged members");
    auto ls = [&](const std::vector<double>& y, double& slope, double& icpt) {
        const double n = double(le.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < le.size(); ++i)
            sx += le[i], sy += y[i], sxx += le[i] * le[i], sxy += le[i] * y[i];
        slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        icpt = (sy - slope * sx) / n;
    };
    ls(la, f.slope_A0, f.intercept_A0);
    ls(lw, f.slope_width, f.intercept_width);
    return f;
}

inline void check_scaling_span(const std::vector<double>& eps) {
    if (eps.size() < 4) throw DomainError("scaling study needs at least 4 epsilon values");
    const auto [lo, hi] = std::minmax_element(eps.begin(), eps.end());
    if (!(*lo > 0) || std::log2(*hi / *lo) < 3.0 - 1e-9)
        throw DomainError("scaling study epsilon values must span at least 3 octaves");
}

inline ScalingSample scaling_member(double g, double eps, const HeteroclinicConfig& cfg) {
    ScalingSample s;
    s.epsilon = eps;
    try {
        const auto prof = heteroclinic_solve(derive_params(eps, g), cfg);
        s.converged = std::isfinite(prof.corner_width);
        s.A0 = prof.A_at_0;
        s.width = prof.corner_width;
        s.newton_iterations = prof.newton_iterations;
        if (!s.converged) s.error = "A has no zero on x > 0";
    } catch (const std::exception& e) {
        s.error = e.what();
    }
    return s;
}

inline ScalingFit scaling_study(double g, const std::vector<double>& eps, const HeteroclinicConfig& cfg = {}) {
    check_scaling_span(eps);
    std::vector<ScalingSample> v;
    for (double e : eps) v.push_back(scaling_member(g, e, cfg));
    return scaling_fit(std::move(v));
}

}  // namespace hetero
