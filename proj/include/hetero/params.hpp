#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hetero {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Thrown when (nu-, nu+) break one of the named admissibility inequalities.
struct AdmissibilityError : std::domain_error {
    std::string inequality;
    AdmissibilityError(std::string which, const std::string& msg)
        : std::domain_error(msg), inequality(std::move(which)) {}
};

struct Params {
    double epsilon = 0.1;
    double g = 1.5;
    double delta = std::sqrt(0.5);
    bool unsupported = false;  // set when the delta range was overridden
};

struct ParamOptions {
    double epsilon_ceiling = 0.25;
    bool allow_unsupported = false;
};

inline Params derive_params(double epsilon, double g, const ParamOptions& opt = {}) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw DomainError("epsilon must be positive");
    if (!(g > 1.0) || !std::isfinite(g))
        throw DomainError("g must exceed 1 so that delta = sqrt(g-1) is real");
    Params p{epsilon, g, std::sqrt(g - 1.0), false};
    const bool in_range = g > 10.0 / 9.0 && g <= 2.0;
    const bool eps_ok = epsilon <= opt.epsilon_ceiling;
    if (!in_range || !eps_ok) {
        if (!opt.allow_unsupported) {
            if (!in_range)
                throw DomainError("g = " + std::to_string(g) +
                                  " outside admissible range (10/9, 2]");
            throw DomainError("epsilon = " + std::to_string(epsilon) + " above ceiling " +
                              std::to_string(opt.epsilon_ceiling));
        }
        p.unsupported = true;
    }
    return p;
}

struct ScalingConfig {
    double nu_minus = 0, nu_plus = 0;
    double alpha_minus = 0, alpha_plus = 0;
    double a_minus = 0, a_plus = 0;
    double x_star = 0, x_star_plus = 0;
    double k0 = 0.1, k1 = 0.05;
    double kappa = 0;  // eps * delta_star, delta_star = 0.9 delta
};

namespace detail {
inline double a_of_nu(double delta, double nu) {
    return std::pow((1.0 + delta * delta) * delta / (8.0 * nu * nu), 0.4);
}
}  // namespace detail

// Bounds on nu/sqrt(delta).
inline double nu_minus_bound(double delta) { return 1.0 / ((1.0 + delta * delta) * 84.33); }
inline double nu_plus_upper(double /*delta*/) { return std::sqrt(2.0) / 3.0; }
inline double nu_plus_lower(double delta) {
    return std::sqrt(1.0 + delta * delta) / (2.0 * std::pow(6.0, 0.25));
}

// Defaults sit at 90% of the admissible range. For nu+ the window is two-sided,
// so 90% is measured from the lower edge.
inline double default_nu_minus(const Params& p) {
    return 0.9 * nu_minus_bound(p.delta) * std::sqrt(p.delta);
}
inline double default_nu_plus(const Params& p) {
    const double lo = nu_plus_lower(p.delta), hi = nu_plus_upper(p.delta);
    return (lo + 0.9 * (hi - lo)) * std::sqrt(p.delta);
}

inline ScalingConfig scaling_from_epsilon(const Params& p, double nu_minus, double nu_plus,
                                          bool enforce = true) {
    if (!(nu_minus > 0) || !(nu_plus > 0)) throw DomainError("nu+- must be positive");
    const double d = p.delta, sd = std::sqrt(d);
    if (enforce) {
        if (nu_minus / sd > nu_minus_bound(d))
            throw AdmissibilityError("restrict nu-",
                                     "nu-/sqrt(delta) exceeds (1+delta^2)^-1/84.33");
        if (nu_plus / sd > nu_plus_upper(d))
            throw AdmissibilityError("estim nu+", "nu+/sqrt(delta) exceeds sqrt(2)/3");
        if (!(nu_plus / sd > nu_plus_lower(d)))
            throw AdmissibilityError("cond nu delta",
                                     "nu+/sqrt(delta) not above sqrt(1+delta^2)/(2*6^(1/4))");
    }
    ScalingConfig s;
    s.nu_minus = nu_minus;
    s.nu_plus = nu_plus;
    s.alpha_minus = std::pow(p.epsilon / nu_minus, 0.4);
    s.alpha_plus = std::pow(p.epsilon / nu_plus, 0.4);
    s.a_minus = detail::a_of_nu(d, nu_minus);
    s.a_plus = detail::a_of_nu(d, nu_plus);
    if (enforce && !(2.0 * std::pow(s.a_plus, 5) / 3.0 < 1.0))
        throw AdmissibilityError("2a+^5/3<1", "Picard contraction constant 2a+^5/3 >= 1");
    const double c = std::sqrt(1.0 + d * d) / (2.0 * std::sqrt(2.0) * p.epsilon);
    s.x_star = c * s.alpha_minus * s.alpha_minus;
    s.x_star_plus = c * s.alpha_plus * s.alpha_plus;
    s.kappa = 0.9 * p.epsilon * d;
    return s;
}

inline ScalingConfig default_scaling(const Params& p) {
    return scaling_from_epsilon(p, default_nu_minus(p), default_nu_plus(p), !p.unsupported);
}

// Lower bounds on the inner half-widths.
inline double a_plus_min(double delta) {
    return 1.05 * std::pow((1.0 + delta * delta) / 2.0, 0.4);
}
inline double a_minus_min(double delta) {
    return 34.74 * std::pow((1.0 + delta * delta) / 2.0, 1.2);
}

struct Regime {
    const char* label;
    double g_min;
    double delta_min;  // recomputed
    double prandtl;
};

inline std::array<Regime, 3> physical_regimes() {
    std::array<Regime, 3> r{{{"rigid-rigid", 1.227, 0, 0.5308},
                             {"rigid-free", 1.332, 0, 0.6222},
                             {"free-free", 1.423, 0, 0.8078}}};
    for (auto& e : r) e.delta_min = std::sqrt(e.g_min - 1.0);
    return r;
}

}  // namespace hetero
