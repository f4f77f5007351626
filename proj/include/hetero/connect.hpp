#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "inner.hpp"
#include "integrate.hpp"
#include "outer.hpp"
#include "params.hpp"

namespace hetero {

struct MatchingUnknowns {
    double x1u = 0, x2u = 0, x10s = 0, x20s = 0;
    std::array<double, 4> as_array() const { return {x1u, x2u, x10s, x20s}; }
    static MatchingUnknowns from(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
};

// Solution of the boundary families equated directly (no ODE), rho = (a-/a+)^{1/4}.
inline MatchingUnknowns matching_closed_form(double rho) {
    const double den = 2.0 * std::pow(rho, 4) - 1.0;
    if (std::abs(den) <= 1e-9) throw DomainError("matching_closed_form: singular at 2 rho^4 = 1");
    const double q = std::pow(2.0, 0.25) * rho - 1.0, r2 = std::sqrt(2.0);
    const double r4 = std::pow(rho, 4);
    return {-2.0 * rho * q / den, std::pow(2.0, 0.75) * q / den,
            r2 * r4 * (r2 * rho * rho - 1.0) / den, -r4 * r2 * q * q / den};
}

// The stable-side x10 as printed; it agrees with the form above only at rho = 1.
inline double matching_x10_printed(double rho) {
    const double r2 = std::sqrt(2.0);
    return r2 * rho * (r2 * rho * rho * rho - 1.0) / (2.0 * std::pow(rho, 4) - 1.0);
}

struct MatchingContext {
    double a_minus = 1, a_plus = 1;
    PicardConfig picard{};
};

inline Bdry4 scale_minus(const Bdry4& v, double a_minus) {
    Bdry4 r;
    for (int j = 0; j < 4; ++j) r[j] = v[j] / std::pow(a_minus, (j + 2) / 4.0);
    return r;
}

inline InnerSolution inner_for(const MatchingUnknowns& u, const MatchingContext& c) {
    InnerProblem prob;
    prob.a_minus = c.a_minus;
    prob.a_plus = c.a_plus;
    prob.x10 = u.x10s;
    prob.x20 = u.x20s;
    auto sol = picard_solve(prob, c.picard);
    return picard_extend(std::move(sol), c.a_minus, c.picard);
}

inline Bdry4 boundary_map(const MatchingUnknowns& u, const MatchingContext& c) {
    const auto sol = inner_for(u, c);
    const Bdry4 left = sol.left();
    const Bdry4 fam = assemble_boundary_minus(c.a_minus, u.x1u, u.x2u);
    Bdry4 d;
    for (int j = 0; j < 4; ++j) d[j] = left[j] - fam[j];
    return scale_minus(d, c.a_minus);
}

// Same residual with the ODE dropped: the + family is equated to the - family directly.
inline Bdry4 boundary_equate(const MatchingUnknowns& u, const MatchingContext& c) {
    const Bdry4 P = assemble_boundary_plus(c.a_plus, u.x10s, u.x20s);
    const Bdry4 M = assemble_boundary_minus(c.a_minus, u.x1u, u.x2u);
    Bdry4 d;
    for (int j = 0; j < 4; ++j) d[j] = P[j] - M[j];
    return scale_minus(d, c.a_minus);
}

struct TransversalityReport {
    double sigma_min = 0, sigma_max = 0, condition = 0;
    bool degenerate = false;
};

inline TransversalityReport transversality_from_jacobian(const Eigen::MatrixXd& J,
                                                         double threshold = 1e-6) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& s = svd.singularValues();
    TransversalityReport r;
    r.sigma_max = s(0);
    r.sigma_min = s(s.size() - 1);
    r.condition = r.sigma_min > 0 ? r.sigma_max / r.sigma_min : std::numeric_limits<double>::infinity();
    r.degenerate = r.sigma_min < threshold;
    return r;
}

struct MatchingResult {
    MatchingUnknowns seed, u;
    Bdry4 residual{};
    double residual_norm = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;
    Eigen::Matrix4d jacobian = Eigen::Matrix4d::Zero();
    TransversalityReport transversality;
    InnerSolution inner;
    double a_minus = 0, a_plus = 0;
};

struct NewtonDivergence : NumericalFailure {
    double last_residual;
    double condition;
    NewtonDivergence(const std::string& m, double r, double c)
        : NumericalFailure(m), last_residual(r), condition(c) {}
};

inline double norm_inf(const Bdry4& r) {
    double m = 0;
    for (double v : r) m = std::max(m, std::abs(v));
    return m;
}

inline MatchingResult solve_matching(const MatchingContext& c, const MatchingUnknowns& seed,
                                     double tol = 1e-10, int max_iter = 25, double fd_step = 1e-7) {
    MatchingResult res;
    res.seed = seed;
    res.a_minus = c.a_minus;
    res.a_plus = c.a_plus;
    auto x = seed.as_array();
    Bdry4 r = boundary_map(MatchingUnknowns::from(x), c);
    res.history.push_back(norm_inf(r));
    auto jac = [&](const std::array<double, 4>& x0, const Bdry4& r0) {
        Eigen::Matrix4d J;
        for (int k = 0; k < 4; ++k) {
            auto xp = x0;
            xp[k] += fd_step;
            const Bdry4 rp = boundary_map(MatchingUnknowns::from(xp), c);
            for (int i = 0; i < 4; ++i) J(i, k) = (rp[i] - r0[i]) / fd_step;
        }
        return J;
    };
    int it = 0;
    while (norm_inf(r) >= tol && it < max_iter) {
        ++it;
        const Eigen::Matrix4d J = jac(x, r);
        const Eigen::Vector4d dx = J.fullPivLu().solve(-Eigen::Vector4d(r[0], r[1], r[2], r[3]));
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
            auto xt = x;
            for (int k = 0; k < 4; ++k) xt[k] += t * dx(k);
            try {
                const Bdry4 rt = boundary_map(MatchingUnknowns::from(xt), c);
                if (norm_inf(rt) < (1.0 - 1e-4 * t) * norm_inf(r) || norm_inf(rt) < tol) {
                    x = xt;
                    r = rt;
                    accepted = true;
                    break;
                }
            } catch (const NumericalFailure&) {
            }
        }
        res.history.push_back(norm_inf(r));
        if (!accepted) break;
    }
    res.u = MatchingUnknowns::from(x);
    res.residual = r;
    res.residual_norm = norm_inf(r);
    res.iterations = it;
    res.converged = res.residual_norm < tol;
    res.jacobian = jac(x, r);
    res.transversality = transversality_from_jacobian(res.jacobian);
    res.inner = inner_for(res.u, c);
    if (!res.converged)
        throw NewtonDivergence("matching Newton did not converge (residual " +
                                   std::to_string(res.residual_norm) + ")",
                               res.residual_norm, res.transversality.condition);
    return res;
}

// ---------------- global connection ----------------

struct HeteroclinicConfig {
    double tol = 1e-10;         // integrator tolerance scale
    double newton_tol = 1e-10;  // sup-norm of the shooting residual
    int max_newton = 25;
    double segment = 2.0;
    double tail_left = 16.0, tail_right = 12.0;  // L = tail / rate
    double a_minus_cap = 2.0;                  // inner matching uses min(a-, cap * a+)
    PicardConfig picard{};
    double sample_step = 0.05;
    std::optional<double> nu_minus, nu_plus;
    bool inner_seed = true;
    double seed_scale = 1.0;  // multiplies the closed-form seed (uniqueness studies)
};

struct HeteroclinicProfile {
    Params p;
    ScalingConfig sc;
    HeteroclinicConfig cfg;
    std::vector<double> node_x;
    std::vector<State> node_s;
    std::vector<double> x;
    std::vector<State> s;
    std::vector<double> W;
    double L_minus = 0, L_plus = 0;
    double x_star = 0, x_star_plus = 0;
    MatchingResult matching;
    int newton_iterations = 0;
    std::vector<double> newton_history;
    double unfolding = 0;  // B1 jump allowed at x = 0, converges to 0
    double sup_W = 0, continuity_defect = 0;
    double B0_at_0 = 0, A_at_0 = 0, min_B1 = 0;
    double corner_width = 0;  // first zero of A for x > 0
    double max_drift = 0;
};

inline IntegratorConfig shooting_integrator(double tol) {
    IntegratorConfig c;
    c.rel_tol = 0.1 * tol;
    c.abs_tol = 1e-3 * tol;
    return c;
}

struct FlowSens {
    State end;
    Mat6 Phi;
};

inline FlowSens flow_with_sensitivity(const State& s0, double x0, double x1, const Params& p,
                                      const IntegratorConfig& ic) {
    auto rhs = [&p](double, const Vec<42>& y) {
        State s;
        std::copy(y.begin(), y.begin() + 6, s.begin());
        const State f = vector_field(s, p);
        const Mat6 J = jacobian(s, p);
        Vec<42> d;
        std::copy(f.begin(), f.end(), d.begin());
        Eigen::Map<const Mat6> P(y.data() + 6);
        Eigen::Map<Mat6> dP(d.data() + 6);
        dP = J * P;
        return d;
    };
    Vec<42> y0{};
    std::copy(s0.begin(), s0.end(), y0.begin());
    for (int k = 0; k < 6; ++k) y0[6 + 7 * k] = 1.0;
    IntegratorConfig c = ic;
    IntegrateOptions opt;
    opt.store = false;
    // tolerances apply to the state; sensitivities ride along with a looser absolute floor
    auto tr = integrate_system<42>(rhs, y0, x0, x1, c, opt);
    FlowSens out;
    const auto& y = tr.back();
    std::copy(y.begin(), y.begin() + 6, out.end.begin());
    out.Phi = Eigen::Map<const Mat6>(y.data() + 6);
    return out;
}

inline State flow(const State& s0, double x0, double x1, const Params& p, const IntegratorConfig& ic) {
    IntegrateOptions opt;
    opt.store = false;
    auto rhs = [&p](double, const State& s) { return vector_field(s, p); };
    return integrate_system<6>(rhs, s0, x0, x1, ic, opt).back();
}

inline std::vector<double> shooting_nodes(const Params& p, const HeteroclinicConfig& cfg,
                                          double& Lm, double& Lp) {
    Lm = cfg.tail_left / (p.epsilon * p.delta);
    Lp = cfg.tail_right / (p.epsilon * std::sqrt(2.0));
    const int nl = std::max(1, int(std::ceil(Lm / cfg.segment)));
    const int nr = std::max(1, int(std::ceil(Lp / cfg.segment)));
    std::vector<double> xs;
    for (int k = 0; k < nl; ++k) xs.push_back(-Lm + Lm * k / nl);
    for (int k = 0; k < nr; ++k) xs.push_back(Lp * k / nr);
    xs.push_back(Lp);
    return xs;
}

// Seed built from the singular-limit B profile, the matched inner corner and A = 0 on the right.
inline State seed_state(double x, const Params& p, const InnerSolution* inner) {
    const double g = p.g, d = p.delta, e = p.epsilon;
    State s{};
    double B, Bp;
    if (x < 0) {
        const double k = std::sqrt(1.0 + 0.5 * d * d);
        const double x0 = std::acosh(std::sqrt(g) / k);
        B = 1.0 / (k * std::cosh(x0 - e * d * x));
        Bp = e * d * B * std::sqrt(std::max(0.0, 1.0 - k * k * B * B));
    } else {
        B = singular_right_B(x, p);
        Bp = e / std::sqrt(2.0) * (1.0 - B * B);
    }
    s[iB0] = B;
    s[iB1] = Bp;
    if (x < 0) s[iA0] = std::sqrt(std::max(0.0, 1.0 - g * B * B));
    if (inner) {
        const double K = inner_K(d), e5 = std::pow(e, 0.2);
        const double z = K * e5 * x;
        if (z >= inner->z.front() && z <= inner->z.back()) {
            InnerPoint ip{z, inner_eval(*inner, z)};
            const auto un = inner_unscale(ip, p);
            for (int j = 0; j < 4; ++j) s[j] = un.second[j];
        }
    }
    return s;
}

namespace detail {

struct ShootingLayout {
    std::vector<double> xs;
    int N = 0;   // segments
    int k0 = 0;  // node index at x = 0
    Eigen::Matrix<double, 6, 3> U, S;
    int n() const { return 6 * N + 1; }
    int col(int k) const { return 3 + 6 * (k - 1); }
};

inline std::vector<State> unpack(const ShootingLayout& L, const Eigen::VectorXd& X) {
    std::vector<State> st(L.N + 1);
    Eigen::Matrix<double, 6, 1> a = L.U * X.segment<3>(0), b = L.S * X.segment<3>(L.n() - 4);
    for (int i = 0; i < 6; ++i) {
        st[0][i] = M_minus[i] + a(i);
        st[L.N][i] = M_plus[i] + b(i);
    }
    for (int k = 1; k < L.N; ++k)
        for (int i = 0; i < 6; ++i) st[k][i] = X(L.col(k) + i);
    return st;
}

inline Eigen::VectorXd residual(const ShootingLayout& L, const Eigen::VectorXd& X, const Params& p,
                                const IntegratorConfig& ic) {
    const auto st = unpack(L, X);
    Eigen::VectorXd R(L.n());
    const double lam = X(L.n() - 1);
    for (int k = 0; k < L.N; ++k) {
        const State y = flow(st[k], L.xs[k], L.xs[k + 1], p, ic);
        for (int i = 0; i < 6; ++i) R(6 * k + i) = y[i] - st[k + 1][i];
        if (k + 1 == L.k0) R(6 * k + iB1) += lam;
    }
    R(L.n() - 1) = st[L.k0][iB0] - 1.0 / std::sqrt(p.g);
    return R;
}

}  // namespace detail

// States on an arbitrary sorted grid inside [node_x.front(), node_x.back()], integrating from the nodes
// so that every requested abscissa is a step end.
inline std::vector<State> sample_on_grid(const std::vector<double>& node_x,
                                         const std::vector<State>& node_s,
                                         const std::vector<double>& grid, const Params& p,
                                         const IntegratorConfig& ic, double* drift = nullptr) {
    std::vector<State> out(grid.size());
    std::size_t gi = 0;
    for (std::size_t k = 0; k + 1 < node_x.size() && gi < grid.size(); ++k) {
        const double a = node_x[k], b = node_x[k + 1];
        std::vector<double> stops;
        const std::size_t g0 = gi;
        while (gi < grid.size() && (grid[gi] < b || (k + 2 == node_x.size() && grid[gi] <= b))) {
            stops.push_back(grid[gi]);
            ++gi;
        }
        if (stops.empty()) continue;
        IntegrateOptions opt;
        opt.stops = &stops;
        auto tr = integrate(node_s[k], a, b, p, ic, {}, opt);
        if (drift) *drift = std::max(*drift, tr.max_drift);
        std::size_t j = 0;
        for (std::size_t t = 0; t < tr.x.size() && j < stops.size(); ++t) {
            while (j < stops.size() && stops[j] <= a) {
                out[g0 + j] = node_s[k];
                ++j;
            }
            if (j < stops.size() && tr.x[t] == stops[j]) {
                out[g0 + j] = tr.y[t];
                ++j;
            }
        }
        if (j < stops.size() && stops[j] == b) {
            out[g0 + j] = tr.back();
            ++j;
        }
        for (; j < stops.size(); ++j) out[g0 + j] = tr.eval(stops[j]);  // fallback, not expected
    }
    return out;
}

inline double shooting_defect(const std::vector<double>& node_x, const std::vector<State>& node_s,
                              const Params& p, const IntegratorConfig& ic) {
    double d = 0;
    for (std::size_t k = 0; k + 1 < node_x.size(); ++k) {
        const State y = flow(node_s[k], node_x[k], node_x[k + 1], p, ic);
        for (int i = 0; i < 6; ++i)
            d = std::max(d, std::abs(y[i] - node_s[k + 1][i]) / (1.0 + std::abs(node_s[k + 1][i])));
    }
    return d;
}

inline double first_zero_of_A(const State& s0, double L, const Params& p, const IntegratorConfig& ic) {
    EventSpec<6> ev{"A0=0", [](const State& s) { return s[iA0]; }, -1, true};
    IntegrateOptions opt;
    opt.store = false;
    auto tr = integrate(s0, 0.0, L, p, ic, {ev}, opt);
    if (tr.events.empty()) return std::numeric_limits<double>::quiet_NaN();
    return tr.events.front().x;
}

inline HeteroclinicProfile heteroclinic_solve(const Params& p, const HeteroclinicConfig& cfg = {}) {
    if (!(p.epsilon > 0))
        throw DomainError("epsilon = 0 is the singular limit; use singular_limit() instead");
    HeteroclinicProfile prof;
    prof.p = p;
    prof.cfg = cfg;
    const double num = cfg.nu_minus.value_or(default_nu_minus(p));
    const double nup = cfg.nu_plus.value_or(default_nu_plus(p));
    prof.sc = scaling_from_epsilon(p, num, nup, !p.unsupported);
    prof.x_star = prof.sc.x_star;
    prof.x_star_plus = prof.sc.x_star_plus;

    // 1. inner matching
    MatchingContext mc;
    mc.a_plus = prof.sc.a_plus;
    mc.a_minus = std::min(prof.sc.a_minus, cfg.a_minus_cap * prof.sc.a_plus);
    mc.picard = cfg.picard;
    const double rho = std::pow(mc.a_minus / mc.a_plus, 0.25);
    auto seed = matching_closed_form(rho).as_array();
    for (double& v : seed) v *= cfg.seed_scale;
    prof.matching = solve_matching(mc, MatchingUnknowns::from(seed));

    // 2. shooting layout and seed
    detail::ShootingLayout L;
    L.xs = shooting_nodes(p, cfg, prof.L_minus, prof.L_plus);
    L.N = int(L.xs.size()) - 1;
    L.k0 = int(std::find(L.xs.begin(), L.xs.end(), 0.0) - L.xs.begin());
    L.U = equilibrium_basis(Equilibrium::minus, p);
    L.S = equilibrium_basis(Equilibrium::plus, p);
    Eigen::VectorXd X = Eigen::VectorXd::Zero(L.n());
    const InnerSolution* in = cfg.inner_seed ? &prof.matching.inner : nullptr;
    for (int k = 1; k < L.N; ++k) {
        const State s = seed_state(L.xs[k], p, in);
        for (int i = 0; i < 6; ++i) X(L.col(k) + i) = s[i];
    }

    // 3. Newton on the shooting system
    const IntegratorConfig ic = shooting_integrator(cfg.tol);
    Eigen::VectorXd R;
    int it = 0;
    double rn = 0;
    for (;;) {
        const auto st = detail::unpack(L, X);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(std::size_t(L.N) * 48 + 8);
        R.resize(L.n());
        const double lam = X(L.n() - 1);
        for (int k = 0; k < L.N; ++k) {
            const FlowSens fs = flow_with_sensitivity(st[k], L.xs[k], L.xs[k + 1], p, ic);
            const int r0 = 6 * k;
            for (int i = 0; i < 6; ++i) R(r0 + i) = fs.end[i] - st[k + 1][i];
            if (k == 0) {
                const Eigen::Matrix<double, 6, 3> PU = fs.Phi * L.U;
                for (int i = 0; i < 6; ++i)
                    for (int j = 0; j < 3; ++j) trip.emplace_back(r0 + i, j, PU(i, j));
            } else {
                for (int i = 0; i < 6; ++i)
                    for (int j = 0; j < 6; ++j) trip.emplace_back(r0 + i, L.col(k) + j, fs.Phi(i, j));
            }
            if (k + 1 == L.N) {
                for (int i = 0; i < 6; ++i)
                    for (int j = 0; j < 3; ++j) trip.emplace_back(r0 + i, L.n() - 4 + j, -L.S(i, j));
            } else {
                for (int i = 0; i < 6; ++i) trip.emplace_back(r0 + i, L.col(k + 1) + i, -1.0);
            }
            if (k + 1 == L.k0) {
                R(r0 + iB1) += lam;
                trip.emplace_back(r0 + iB1, L.n() - 1, 1.0);
            }
        }
        R(L.n() - 1) = st[L.k0][iB0] - 1.0 / std::sqrt(p.g);
        trip.emplace_back(L.n() - 1, L.col(L.k0) + iB0, 1.0);
        rn = R.lpNorm<Eigen::Infinity>();
        prof.newton_history.push_back(rn);
        if (rn < cfg.newton_tol) break;
        if (it >= cfg.max_newton)
            throw NewtonDivergence("shooting Newton hit the iteration cap (residual " +
                                       std::to_string(rn) + ")",
                                   rn, prof.matching.transversality.condition);
        Eigen::SparseMatrix<double> J(L.n(), L.n());
        J.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success)
            throw NewtonDivergence("singular shooting Jacobian", rn,
                                   std::numeric_limits<double>::infinity());
        const Eigen::VectorXd dX = lu.solve(-R);
        ++it;
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
            const Eigen::VectorXd Xt = X + t * dX;
            try {
                const double rt = detail::residual(L, Xt, p, ic).lpNorm<Eigen::Infinity>();
                if (rt < (1.0 - 1e-4 * t) * rn || rt < cfg.newton_tol) {
                    X = Xt;
                    accepted = true;
                    break;
                }
            } catch (const NumericalFailure&) {
            }
        }
        if (!accepted)
            throw NewtonDivergence("shooting Newton line search failed (residual " +
                                       std::to_string(rn) + ")",
                                   rn, prof.matching.transversality.condition);
    }
    prof.newton_iterations = it;
    prof.unfolding = X(L.n() - 1);
    prof.node_x = L.xs;
    prof.node_s = detail::unpack(L, X);
    prof.continuity_defect = rn;

    // 4. dense samples and diagnostics
    const int nl = int(std::floor(prof.L_minus / cfg.sample_step + 1e-9));
    const int nr = int(std::floor(prof.L_plus / cfg.sample_step + 1e-9));
    for (int k = -nl; k <= nr; ++k) prof.x.push_back(k * cfg.sample_step);
    if (prof.x.front() > -prof.L_minus) prof.x.insert(prof.x.begin(), -prof.L_minus);
    if (prof.x.back() < prof.L_plus) prof.x.push_back(prof.L_plus);
    prof.s = sample_on_grid(prof.node_x, prof.node_s, prof.x, p, ic, &prof.max_drift);
    prof.min_B1 = std::numeric_limits<double>::infinity();
    for (const auto& s : prof.s) {
        const double w = first_integral(s, p);
        prof.W.push_back(w);
        prof.sup_W = std::max(prof.sup_W, std::abs(w));
        prof.min_B1 = std::min(prof.min_B1, s[iB1]);
    }
    const State& s0 = prof.node_s[L.k0];
    prof.B0_at_0 = s0[iB0];
    prof.A_at_0 = s0[iA0];
    prof.corner_width = first_zero_of_A(s0, prof.L_plus, p, ic);
    return prof;
}

inline TransversalityReport transversality(const HeteroclinicProfile& prof) {
    return prof.matching.transversality;
}

}  // namespace hetero
