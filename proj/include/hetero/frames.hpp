#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "dynamics.hpp"
#include "integrate.hpp"

namespace hetero {

struct SlowFrame {
    double B0 = 0;
    double A_star = 1;  // sqrt(1 - (1+delta^2) B0^2)
    double lambda_r = 0, lambda_i = 0;
    double sigma = 0;  // monodromy rate for the alpha passed in
    double g = 1.5, epsilon = 0.1;
    // Basis vectors in (A0~, A1, A2, A3, B0-slot, B1) order, as listed for the linear operator.
    std::array<State, 6> basis{};  // V_r+, V_r-, V_i+, V_i-, Z0, Z1
};

struct FrameDegeneracy : DomainError {
    using DomainError::DomainError;
};

inline double monodromy_sigma(double alpha, double delta) {
    return std::sqrt(alpha * delta) / std::pow(2.0, 0.25);
}

inline SlowFrame slow_frame(double B0, const Params& p, double alpha = 0.0) {
    const double g = 1.0 + p.delta * p.delta;
    const double as2 = 1.0 - g * B0 * B0;
    if (!(as2 > 0)) throw DomainError("slow frame: A*^2 = 1-(1+delta^2)B0^2 is not positive");
    const double as = std::sqrt(as2);
    const double c = p.epsilon * p.epsilon * B0 * B0 * g * g;
    if (c > as)
        throw FrameDegeneracy("slow frame: complex eigenvalue pairs lost (eps^2 B0^2 (1+delta^2)^2 > A*)");
    SlowFrame f;
    f.B0 = B0;
    f.A_star = as;
    f.lambda_r = std::sqrt(0.5 * (std::sqrt(2.0) * as + c));
    f.lambda_i = std::sqrt(0.5 * (std::sqrt(2.0) * as - c));
    f.sigma = monodromy_sigma(alpha, p.delta);
    f.g = g;
    f.epsilon = p.epsilon;
    const double lr = f.lambda_r, li = f.lambda_i, D = lr * lr - li * li;
    const double gb = g * B0 * as;
    for (int sgn : {1, -1}) {
        const int k = sgn > 0 ? 0 : 1;
        const double s = sgn;
        f.basis[k] = {-s * lr * (lr * lr - 3 * li * li) / (2 * as2), 1.0, s * lr, D,
                      B0 > 0 ? -s * lr * D / gb : 0.0, B0 > 0 ? -D * D / gb : 0.0};
        f.basis[2 + k] = {-(3 * lr * lr - li * li) / (2 * as2), 0.0, 1.0, s * 2 * lr,
                          B0 > 0 ? -D / gb : 0.0, B0 > 0 ? -s * 2 * lr * D / gb : 0.0};
    }
    f.basis[4] = {0, 0, 0, 0, 1, 0};
    f.basis[5] = {0, -g * B0, 0, 0, 0, as};
    return f;
}

// Quartic whose roots are +-lambda_r +- i lambda_i.
inline std::complex<double> slow_quartic(std::complex<double> lam, const SlowFrame& f) {
    const double g = f.g, c = f.epsilon * f.epsilon * f.B0 * f.B0 * g * g;
    return lam * lam * lam * lam - 2.0 * c * lam * lam + 2.0 * f.A_star * f.A_star;
}

struct SlowCoords {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0, z1 = 0;
    double B0 = 0;
};

inline State from_slow_coords(const SlowCoords& c, const SlowFrame& f) {
    const double lr = f.lambda_r, li = f.lambda_i, as = f.A_star, as2 = as * as, B0 = f.B0;
    const double g = f.g, e2 = f.epsilon * f.epsilon;
    State s;
    const double a0t = -B0 * lr * (lr * lr - 3 * li * li) / (2 * as2) * (c.x1 - c.y1) -
                       B0 * li * (3 * lr * lr - li * li) / (2 * as2) * (c.x2 + c.y2);
    s[iA0] = as + a0t;
    s[iA1] = B0 * (c.x1 + c.y1) - g * B0 * B0 * c.z1;
    s[iA2] = lr * B0 * (c.x1 - c.y1) + li * B0 * (c.x2 + c.y2);
    s[iA3] = (lr * lr - li * li) * B0 * (c.x1 + c.y1) + 2 * lr * li * B0 * (c.x2 - c.y2);
    s[iB0] = B0;
    s[iB1] = -e2 * g * B0 * s[iA3] / as + as * B0 * c.z1;
    return s;
}

inline SlowCoords to_slow_coords(const State& s, const SlowFrame& f) {
    if (!(f.B0 > 0)) throw DomainError("slow coordinates need B0 > 0");
    const double lr = f.lambda_r, li = f.lambda_i, as = f.A_star, as2 = as * as, B0 = f.B0;
    const double g = f.g, e2 = f.epsilon * f.epsilon;
    const double S = lr * lr + li * li, D = lr * lr - li * li;
    const double a0t = s[iA0] - as, A1 = s[iA1], A2 = s[iA2], A3 = s[iA3], B1 = s[iB1];
    const double sym = A1 / 2 + g * B0 / (2 * as) * B1 + D / (2 * as2) * A3;
    const double odd1 = S / (4 * lr) * a0t + (3 * lr * lr - li * li) / (4 * lr * S) * A2;
    const double even2 = -S / 4 * a0t - (lr * lr - 3 * li * li) / (4 * S) * A2;
    const double odd2 = -D / (4 * lr) * (A1 + g * B0 / as * B1) + (1 - D * D / as2) / (4 * lr) * A3;
    SlowCoords c;
    c.B0 = B0;
    c.x1 = (odd1 + sym) / B0;
    c.y1 = (-odd1 + sym) / B0;
    c.x2 = (even2 + odd2) / (li * B0);
    c.y2 = (even2 - odd2) / (li * B0);
    c.z1 = (e2 * B0 * g * A3 / as2 + B1 / as) / B0;
    return c;
}

// Scaled view (X, Y) = alpha^{3/2} delta (Xbar, Ybar), z1 = eps delta z1bar.
inline SlowCoords scaled_view(const SlowCoords& c, double alpha, const Params& p) {
    const double k = std::pow(alpha, 1.5) * p.delta;
    return {c.x1 / k, c.x2 / k, c.y1 / k, c.y2 / k, c.z1 / (p.epsilon * p.delta), c.B0};
}

struct RadicandNegative : DomainError {
    double radicand;
    explicit RadicandNegative(double r)
        : DomainError("z1 resolve: first-integral radicand is negative"), radicand(r) {}
};

// W is quadratic in z1 with no linear term: W(z1) = W(0) - A*^2 B0^2 z1^2.
// The positive root keeps B1 > 0 along the growing branch.
inline double z1_resolve(SlowCoords c, const SlowFrame& f, const Params& p) {
    c.z1 = 0;
    const double w0 = first_integral(from_slow_coords(c, f), p);
    const double k = f.A_star * f.B0;
    if (w0 < 0) {
        if (w0 > -1e-15 * p.epsilon * p.epsilon) return 0.0;
        throw RadicandNegative(w0);
    }
    return std::sqrt(w0) / k;
}

inline double z1bar_leading(double B0, const Params& p) {
    const double as2 = 1.0 - (1.0 + p.delta * p.delta) * B0 * B0;
    if (!(as2 > 0)) throw DomainError("z1bar: A*^2 not positive");
    return std::sqrt(1.0 + p.delta * p.delta * B0 * B0 / (2.0 * as2));
}

struct FastFrame {
    double B0 = 1;
    double delta_tilde = 0;
    std::array<State, 4> basis{};  // columns for x1, x2, y1, y2 in (A0..A3) slots
};

struct FastCoords {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    double v = 0;   // B0 - 1
    double B1 = 0;  // carried unchanged
};

inline FastFrame fast_frame(double B0, const Params& p) {
    const double q = (1.0 + p.delta * p.delta) * B0 * B0 - 1.0;
    if (!(q > 0)) throw DomainError("fast frame: requires (1+delta^2)B0^2 > 1");
    FastFrame f;
    f.B0 = B0;
    const double d = std::pow(q, 0.25), r2 = std::sqrt(2.0);
    f.delta_tilde = d;
    f.basis[0] = {1, -d / r2, 0, d * d * d / r2, 0, 0};
    f.basis[1] = {0, -d / r2, d * d, -d * d * d / r2, 0, 0};
    f.basis[2] = {1, d / r2, 0, -d * d * d / r2, 0, 0};
    f.basis[3] = {0, d / r2, d * d, d * d * d / r2, 0, 0};
    return f;
}

inline State from_fast_coords(const FastCoords& c, const FastFrame& f) {
    const double d = f.delta_tilde, r2 = std::sqrt(2.0);
    return {c.x1 + c.y1, -d / r2 * (c.x1 - c.y1 + c.x2 - c.y2), d * d * (c.x2 + c.y2),
            d * d * d / r2 * (c.x1 - c.y1 - c.x2 + c.y2), 1.0 + c.v, c.B1};
}

inline FastCoords to_fast_coords(const State& s, const FastFrame& f) {
    const double d = f.delta_tilde, r2 = std::sqrt(2.0);
    const double sum1 = s[iA0], sum2 = s[iA2] / (d * d);
    const double p = -r2 * s[iA1] / d, q = r2 * s[iA3] / (d * d * d);
    const double dif1 = 0.5 * (p + q), dif2 = 0.5 * (p - q);
    return {0.5 * (sum1 + dif1), 0.5 * (sum2 + dif2), 0.5 * (sum1 - dif1), 0.5 * (sum2 - dif2),
            s[iB0] - 1.0, s[iB1]};
}

struct MonodromyReport {
    double max_ratio = 0;  // sup ||S0(x,s)|| e^{-sigma (x-s)} over the sampled x < s
    double sigma = 0;
    int samples = 0;
};

// Planar system X' = [[lr, li], [-li, lr]] X integrated backward from s; compares against e^{sigma(x-s)}.
inline MonodromyReport monodromy_check(const std::function<double(double)>& B0_path,
                                       const Params& p, double alpha, double s, double x_min,
                                       int n_samples = 64, double rel_tol = 1e-12) {
    MonodromyReport rep;
    rep.sigma = monodromy_sigma(alpha, p.delta);
    const double ad = alpha * p.delta;
    auto rhs = [&](double x, const Vec<8>& y) {
        const SlowFrame f = slow_frame(B0_path(x), p, alpha);
        if (f.A_star < ad * (1 - 1e-12))
            throw DomainError("monodromy path leaves the domain A* >= alpha delta");
        const double lr = f.lambda_r, li = f.lambda_i;
        Vec<8> d;
        for (int c = 0; c < 2; ++c) {
            const double u = y[2 * c], w = y[2 * c + 1];
            d[2 * c] = lr * u + li * w;
            d[2 * c + 1] = -li * u + lr * w;
        }
        // columns stored as (u0,w0,u1,w1); remaining slots unused
        d[4] = d[5] = d[6] = d[7] = 0;
        return d;
    };
    std::vector<double> stops;
    for (int k = 1; k <= n_samples; ++k) stops.push_back(s + (x_min - s) * k / n_samples);
    IntegratorConfig cfg;
    cfg.rel_tol = rel_tol;
    cfg.abs_tol = 1e-300;
    IntegrateOptions opt;
    opt.stops = &stops;
    Vec<8> y0{1, 0, 0, 1, 0, 0, 0, 0};
    auto tr = integrate_system<8>(rhs, y0, s, x_min, cfg, opt);
    rep.max_ratio = 1.0;  // x = s gives the identity
    for (std::size_t k = 1; k < tr.x.size(); ++k) {
        const auto& y = tr.y[k];
        Eigen::Matrix2d S;
        S << y[0], y[2], y[1], y[3];
        const double nrm = Eigen::JacobiSVD<Eigen::Matrix2d>(S).singularValues()(0);
        rep.max_ratio = std::max(rep.max_ratio, nrm * std::exp(-rep.sigma * (tr.x[k] - s)));
        ++rep.samples;
    }
    return rep;
}

}  // namespace hetero
