#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "integrate.hpp"
#include "outer.hpp"
#include "params.hpp"

namespace hetero {

using Bdry4 = std::array<double, 4>;

inline double inner_K(double delta) {
    return std::pow(2.0 * std::sqrt(2.0) * delta * delta / std::sqrt(1.0 + delta * delta), 0.2);
}

inline Bdry4 assemble_boundary_plus(double a_plus, double x10, double x20,
                                    double radius = std::numeric_limits<double>::infinity()) {
    check_ball(x10, x20, radius, "inner boundary z=+a+");
    const double r2 = std::sqrt(2.0);
    return {std::sqrt(a_plus) * x10, -std::pow(a_plus, 0.75) / r2 * (x10 + x20), a_plus * x20,
            std::pow(a_plus, 1.25) / r2 * (x10 - x20)};
}

inline Bdry4 assemble_boundary_minus(double a_minus, double x1, double x2,
                                     double radius = std::numeric_limits<double>::infinity()) {
    check_ball(x1, x2, radius, "inner boundary z=-a-");
    return {std::sqrt(a_minus) * (1.0 + std::pow(2.0, -0.75) * (x1 - x2)),
            std::pow(a_minus, 0.75) * x1, a_minus / std::pow(2.0, 0.25) * (x1 + x2),
            std::sqrt(2.0) * std::pow(a_minus, 1.25) * x2};
}

struct InnerProblem {
    double a_minus = 1, a_plus = 1;
    double x10 = 0, x20 = 0;  // stable-side tangent parameters
    double k1 = std::numeric_limits<double>::infinity();
    double delta = 1;
    Bdry4 data() const { return assemble_boundary_plus(a_plus, x10, x20, k1); }
};

struct PicardConfig {
    int points = 2048;  // over [-a+, a+] (spacing reused by the extension)
    double tol = 1e-12;
    int max_iter = 200;
    bool enforce_contraction = true;
};

struct ContractionViolated : DomainError {
    using DomainError::DomainError;
};

struct NonConvergence : NumericalFailure {
    std::vector<double> history;
    NonConvergence(const std::string& m, std::vector<double> h)
        : NumericalFailure(m), history(std::move(h)) {}
};

struct InnerSolution {
    std::vector<double> z;  // ascending
    std::vector<double> A0, A1, A2, A3;
    std::vector<double> source;  // f = A(A^2+z) used to build the current iterate
    std::vector<double> history;  // sup-norm deltas (first piece)
    int iterations = 0;
    double max_ratio = 0;  // largest measured delta ratio (first piece)
    int extension_steps = 0;
    std::vector<double> step_condition;  // (1/80)X^5 + (1/16)X^4 per extension step
    double a_minus = 0, a_plus = 0;

    Bdry4 at(std::size_t i) const { return {A0[i], A1[i], A2[i], A3[i]}; }
    Bdry4 left() const { return at(0); }
};

namespace detail {

// Cumulative integrals C[i] = int_{z_i}^{z_last} g ds on a uniform grid, fourth order per interval.
inline void cumulative_from_right(const std::vector<double>& g, double h, std::vector<double>& C) {
    const std::size_t n = g.size();
    C.assign(n, 0.0);
    if (n < 2) return;
    auto piece = [&](std::size_t j) {  // int over [z_j, z_{j+1}]
        if (n < 4) return 0.5 * h * (g[j] + g[j + 1]);
        if (j == 0) return h / 24.0 * (9 * g[0] + 19 * g[1] - 5 * g[2] + g[3]);
        if (j + 2 >= n)
            return h / 24.0 * (g[n - 4] - 5 * g[n - 3] + 19 * g[n - 2] + 9 * g[n - 1]);
        return h / 24.0 * (-g[j - 1] + 13 * g[j] + 13 * g[j + 1] - g[j + 2]);
    };
    for (std::size_t j = n - 1; j-- > 0;) C[j] = C[j + 1] + piece(j);
}

struct PieceResult {
    std::vector<double> A0, A1, A2, A3, source, history;
    int iterations = 0;
    double max_ratio = 0;
    bool converged = false;
};

// Volterra fixed point on an ascending uniform grid, data given at the right end.
inline PieceResult volterra_piece(const std::vector<double>& z, const Bdry4& d,
                                  const PicardConfig& cfg, const std::vector<double>* guess = nullptr) {
    const std::size_t n = z.size();
    const double b = z.back(), h = (z.back() - z.front()) / double(n - 1);
    PieceResult r;
    std::vector<double> T0(n), T1(n), T2(n), T3(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = z[i] - b;
        w[i] = t;
        T0[i] = d[0] + t * (d[1] + t * (d[2] / 2 + t * d[3] / 6));
        T1[i] = d[1] + t * (d[2] + t * d[3] / 2);
        T2[i] = d[2] + t * d[3];
        T3[i] = d[3];
    }
    std::vector<double> A = guess ? *guess : T0;
    r.A0 = A;
    std::vector<double> f(n), g1(n), g2(n), g3(n), M0, M1, M2, M3;
    std::vector<double> An(n), A1(n), A2(n), A3(n);
    for (int it = 0; it < cfg.max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            f[i] = A[i] * (A[i] * A[i] + z[i]);
            g1[i] = w[i] * f[i];
            g2[i] = w[i] * g1[i];
            g3[i] = w[i] * g2[i];
        }
        cumulative_from_right(f, h, M0);
        cumulative_from_right(g1, h, M1);
        cumulative_from_right(g2, h, M2);
        cumulative_from_right(g3, h, M3);
        double delta = 0, scale = 1;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = w[i];
            An[i] = T0[i] + (t * t * t * M0[i] - 3 * t * t * M1[i] + 3 * t * M2[i] - M3[i]) / 6.0;
            // the moment expansion cancels; round-off scales with its terms
            scale = std::max(scale, (std::abs(t * t * t * M0[i]) + std::abs(3 * t * t * M1[i]) +
                                     std::abs(3 * t * M2[i]) + std::abs(M3[i])) / 6.0);
            A1[i] = T1[i] + 0.5 * (t * t * M0[i] - 2 * t * M1[i] + M2[i]);
            A2[i] = T2[i] + t * M0[i] - M1[i];
            A3[i] = T3[i] + M0[i];
            delta = std::max(delta, std::abs(An[i] - A[i]));
        }
        r.history.push_back(delta);
        r.iterations = it + 1;
        r.source = f;
        A.swap(An);
        if (!std::isfinite(delta)) break;
        if (delta < cfg.tol * scale) {
            r.converged = true;
            break;
        }
    }
    const auto& hs = r.history;
    for (std::size_t k = 1; k < hs.size(); ++k)
        if (hs[k - 1] > 1e-13 && hs[k] > 1e-13) r.max_ratio = std::max(r.max_ratio, hs[k] / hs[k - 1]);
    r.A0 = A;
    r.A1 = A1;
    r.A2 = A2;
    r.A3 = A3;
    return r;
}

}  // namespace detail

inline double contraction_constant(double a_plus) { return 2.0 * std::pow(a_plus, 5) / 3.0; }

inline InnerSolution picard_solve(const InnerProblem& prob, const PicardConfig& cfg = {}) {
    const double q = contraction_constant(prob.a_plus);
    if (cfg.enforce_contraction && !(q < 1.0))
        throw ContractionViolated("Picard contraction requires 2a+^5/3 < 1, got " + std::to_string(q));
    if (cfg.points < 4) throw DomainError("Picard grid needs at least 4 points");
    std::vector<double> z(cfg.points);
    for (int i = 0; i < cfg.points; ++i)
        z[i] = -prob.a_plus + 2.0 * prob.a_plus * i / double(cfg.points - 1);
    z.back() = prob.a_plus;
    auto r = detail::volterra_piece(z, prob.data(), cfg);
    if (!r.converged)
        throw NonConvergence("Picard iteration did not converge on [-a+, a+]", r.history);
    InnerSolution s;
    s.z = std::move(z);
    s.A0 = std::move(r.A0);
    s.A1 = std::move(r.A1);
    s.A2 = std::move(r.A2);
    s.A3 = std::move(r.A3);
    s.source = std::move(r.source);
    s.history = std::move(r.history);
    s.iterations = r.iterations;
    s.max_ratio = r.max_ratio;
    s.a_plus = prob.a_plus;
    s.a_minus = prob.a_plus;
    return s;
}

// Number of cascade steps needed to reach a- from a+ (nu ratio shrinks by 3.69 per step).
inline int cascade_steps(double a_minus, double a_plus) {
    if (a_minus <= a_plus * (1 + 1e-14)) return 0;
    const double nu_ratio = std::pow(a_minus / a_plus, 1.25);
    return int(std::ceil(std::log(nu_ratio) / std::log(3.69) - 1e-12));
}

inline double cascade_inequality(double X) { return std::pow(X, 5) / 80.0 + std::pow(X, 4) / 16.0; }

inline InnerSolution picard_extend(InnerSolution sol, double a_minus, const PicardConfig& cfg = {}) {
    const int n = cascade_steps(a_minus, sol.a_plus);
    const double h = sol.z[1] - sol.z[0];
    double a_prev = -sol.z.front();
    for (int k = 1; k <= n; ++k) {
        const double a_k = std::min(a_minus, sol.a_plus * std::pow(3.69, 0.8 * k));
        if (a_k <= a_prev) break;
        sol.step_condition.push_back(cascade_inequality(a_k / a_prev - 1.0));
        const int m = std::max(3, int(std::ceil((a_k - a_prev) / h - 1e-9)));
        std::vector<double> z(m + 1);
        for (int i = 0; i <= m; ++i) z[i] = -a_k + (a_k - a_prev) * i / double(m);
        z.back() = -a_prev;
        const Bdry4 d = sol.left();
        auto r = detail::volterra_piece(z, d, cfg);
        if (!r.converged)
            throw NonConvergence("Picard extension step " + std::to_string(k) + " did not converge",
                                 r.history);
        // prepend (the shared point keeps the earlier value)
        auto pre = [m](std::vector<double>& dst, std::vector<double>& src) {
            src.resize(m);
            dst.insert(dst.begin(), src.begin(), src.end());
        };
        pre(sol.z, z);
        pre(sol.A0, r.A0);
        pre(sol.A1, r.A1);
        pre(sol.A2, r.A2);
        pre(sol.A3, r.A3);
        pre(sol.source, r.source);
        sol.extension_steps = k;
        a_prev = a_k;
    }
    sol.a_minus = a_prev;
    return sol;
}

// sup |A'''' + A(A^2+z)| with A'''' = -source from the integral form.
inline double inner_residual(const InnerSolution& s) {
    double r = 0;
    for (std::size_t i = 0; i < s.z.size(); ++i)
        r = std::max(r, std::abs(-s.source[i] + s.A0[i] * (s.A0[i] * s.A0[i] + s.z[i])));
    return r;
}

inline std::vector<double> inner_residual_profile(const InnerSolution& s) {
    std::vector<double> r(s.z.size());
    for (std::size_t i = 0; i < s.z.size(); ++i)
        r[i] = std::abs(-s.source[i] + s.A0[i] * (s.A0[i] * s.A0[i] + s.z[i]));
    return r;
}

// Linear interpolation of the sampled inner solution (values and derivatives).
inline Bdry4 inner_eval(const InnerSolution& s, double zq) {
    if (zq <= s.z.front()) return s.at(0);
    if (zq >= s.z.back()) return s.at(s.z.size() - 1);
    const auto it = std::upper_bound(s.z.begin(), s.z.end(), zq);
    const std::size_t j = std::size_t(it - s.z.begin()) - 1;
    const double t = (zq - s.z[j]) / (s.z[j + 1] - s.z[j]);
    Bdry4 a = s.at(j), b = s.at(j + 1), out;
    for (int k = 0; k < 4; ++k) out[k] = (1 - t) * a[k] + t * b[k];
    return out;
}

struct InnerPoint {
    double z;
    Bdry4 A;
};

inline InnerPoint inner_scale(double x, const State& s, const Params& p) {
    const double K = inner_K(p.delta), e5 = std::pow(p.epsilon, 0.2);
    InnerPoint r{K * e5 * x, {}};
    double f = K * K * e5 * e5;
    for (int j = 0; j < 4; ++j) {
        r.A[j] = s[j] / f;
        f *= K * e5;
    }
    return r;
}

// Inverse of inner_scale for the A-components; B entries are left to the caller.
inline std::pair<double, Bdry4> inner_unscale(const InnerPoint& ip, const Params& p) {
    const double K = inner_K(p.delta), e5 = std::pow(p.epsilon, 0.2);
    Bdry4 A;
    double f = K * K * e5 * e5;
    for (int j = 0; j < 4; ++j) {
        A[j] = ip.A[j] * f;
        f *= K * e5;
    }
    return {ip.z / (K * e5), A};
}

// Reference solution of the inner ODE by direct integration from z = a+ (test oracle, diagnostics).
inline Bdry4 inner_shoot(const Bdry4& data, double a_plus, double z_end, double rel_tol = 1e-12) {
    auto rhs = [](double z, const Vec<4>& y) { return Vec<4>{y[1], y[2], y[3], -y[0] * (y[0] * y[0] + z)}; };
    IntegratorConfig cfg;
    cfg.rel_tol = rel_tol;
    cfg.abs_tol = rel_tol * 1e-2;
    IntegrateOptions opt;
    opt.store = false;
    auto tr = integrate_system<4>(rhs, Vec<4>{data[0], data[1], data[2], data[3]}, a_plus, z_end, cfg, opt);
    const auto& y = tr.back();
    return {y[0], y[1], y[2], y[3]};
}

}  // namespace hetero
