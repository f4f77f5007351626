#pragma once

#include <cmath>
#include <complex>

#include "dynamics.hpp"
#include "frames.hpp"
#include "params.hpp"

namespace hetero {

// ---- reduced outer profiles ----

inline double b0_left_profile(double x, double B00, double x_star, const Params& p) {
    const double d2 = p.delta * p.delta;
    if (!(B00 > 0) || !(B00 < 1.0 / std::sqrt(1.0 + d2)))
        throw DomainError("b0_left_profile: B00 outside (0, 1/sqrt(1+delta^2))");
    const double k = std::sqrt(1.0 + 0.5 * d2);
    const double x0 = std::acosh(1.0 / (B00 * k));
    const double c = std::cosh(x0 - p.epsilon * p.delta * (x + x_star));
    return 1.0 / (k * c);
}

inline double b0_left_x0(double B00, const Params& p) {
    return std::acosh(1.0 / (B00 * std::sqrt(1.0 + 0.5 * p.delta * p.delta)));
}

// Leading-order v = B0 - 1 on the right, written exactly as the reduction states it.
inline double v_right_profile(double x, const Params& p) {
    const double s = std::sqrt(1.0 + p.delta * p.delta);
    const double t = std::tanh(p.epsilon * std::sqrt(2.0) * x);
    return (1.0 - s) * (1.0 - t) / (s + t);
}

struct VEnvelope {
    double lower, upper;
};

// A priori bounds for v on (-x*, inf) given v(-x*) < 0; rates 3/4 and 5/4 of eps/sqrt(2).
inline VEnvelope v_envelope(double x, double v_at_left, double x_star, const Params& p) {
    const double b = 1.0 + v_at_left;
    auto f = [&](double k) {
        const double t = std::tanh(k * p.epsilon * (x + x_star) / std::sqrt(2.0));
        return v_at_left * (1.0 - t) / (1.0 + b * t);
    };
    return {f(0.75), f(1.25)};
}

// Exact solution of v' = -(eps/sqrt 2) v (2+v) through v(-x*) (the k = 1 member of the envelope family).
inline double v_reduced_solution(double x, double v_at_left, double x_star, const Params& p) {
    const double b = 1.0 + v_at_left;
    const double t = std::tanh(p.epsilon * (x + x_star) / std::sqrt(2.0));
    return v_at_left * (1.0 - t) / (1.0 + b * t);
}

// ---- sections ----

inline double section_H0(const Params& p, const ScalingConfig& sc) {
    const double ad = sc.alpha_minus * p.delta;
    if (!(ad < 1.0)) throw DomainError("section H0 does not exist: alpha- * delta >= 1");
    return std::sqrt((1.0 - ad * ad) / (1.0 + p.delta * p.delta));
}

inline double section_H1(const Params& p, const ScalingConfig& sc) {
    const double ad = sc.alpha_plus * p.delta;
    const double b = std::sqrt((1.0 + ad * ad) / (1.0 + p.delta * p.delta));
    if (!(b <= 1.0)) throw DomainError("section H1 lies beyond B0 = 1: alpha+ * delta > 1");
    return b;
}

struct BallViolation : DomainError {
    using DomainError::DomainError;
};

inline void check_ball(double a, double b, double radius, const char* what) {
    if (std::hypot(a, b) > radius * (1.0 + 1e-12))
        throw BallViolation(std::string(what) + ": tangent parameters outside the ball of radius " +
                            std::to_string(radius));
}

// Sets B1 >= 0 so that W = 0; W is -B1^2 plus terms free of B1.
inline State project_B1(State s, const Params& p) {
    s[iB1] = 0.0;
    const double w = first_integral(s, p);
    if (w < 0) {
        if (w > -1e-15) {
            s[iB1] = 0;
            return s;
        }
        throw RadicandNegative(w);
    }
    s[iB1] = std::sqrt(w);
    return s;
}

struct UnstableSeed {
    double xb1 = 0, xb2 = 0;
    double h = 1.0;  // overall scale applied to the tangent parameters
    State state{};
};

inline UnstableSeed unstable_seed(const Params& p, const ScalingConfig& sc, double xb1,
                                  double xb2, double h = 1.0) {
    const double radius = sc.k0 * std::sqrt(p.delta * (1.0 + p.delta * p.delta));
    check_ball(xb1, xb2, radius, "unstable seed");
    const double B00 = section_H0(p, sc);
    const double da = p.delta * sc.alpha_minus;
    const double u1 = h * xb1, u2 = h * xb2;
    State s;
    s[iA0] = da + da / std::pow(2.0, 0.75) * (u1 - u2);
    s[iA1] = std::pow(da, 1.5) * u1 - sc.alpha_minus * sc.alpha_minus * p.delta * B00 / std::sqrt(2.0);
    s[iA2] = da * da / std::pow(2.0, 0.25) * (u1 + u2);
    s[iA3] = std::sqrt(2.0) * std::pow(da, 2.5) * u2;
    s[iB0] = B00;
    s[iB1] = 0;
    return {xb1, xb2, h, project_B1(s, p)};
}

struct StableSeed {
    double xb10 = 0, xb20 = 0;
    State state{};
};

inline StableSeed stable_seed(const Params& p, const ScalingConfig& sc, double xb10, double xb20) {
    check_ball(xb10, xb20, sc.k1, "stable seed");
    const double B01 = section_H1(p, sc);
    const double da = p.delta * sc.alpha_plus, r2 = std::sqrt(2.0);
    State s;
    s[iA0] = da * xb10;
    s[iA1] = -std::pow(da, 1.5) / r2 * (xb10 + xb20);
    s[iA2] = da * da * xb20;
    s[iA3] = std::pow(da, 2.5) / r2 * (xb10 - xb20);
    s[iB0] = B01;
    s[iB1] = 0;
    return {xb10, xb20, project_B1(s, p)};
}

// ---- linearisation at the equilibria ----

enum class Equilibrium { minus, plus };

// Real basis (unit vectors) of the unstable eigenspace at M- or the stable eigenspace at M+.
// Columns: real part, imaginary part of the fast A-mode, then the slow B-mode.
inline Eigen::Matrix<double, 6, 3> equilibrium_basis(Equilibrium which, const Params& p) {
    std::complex<double> lam;
    double mu;
    if (which == Equilibrium::minus) {
        const double r = std::pow(2.0, -0.25);
        lam = {r, r};
        mu = p.epsilon * p.delta;
    } else {
        const double r = std::sqrt(p.delta / 2.0);
        lam = {-r, r};
        mu = -p.epsilon * std::sqrt(2.0);
    }
    Eigen::Matrix<double, 6, 3> E = Eigen::Matrix<double, 6, 3>::Zero();
    std::complex<double> pw = 1.0;
    for (int k = 0; k < 4; ++k) {
        E(k, 0) = pw.real();
        E(k, 1) = pw.imag();
        pw *= lam;
    }
    E(4, 2) = 1.0;
    E(5, 2) = mu;
    for (int c = 0; c < 3; ++c) E.col(c).normalize();
    return E;
}

inline State equilibrium_state(Equilibrium which) {
    return which == Equilibrium::minus ? M_minus : M_plus;
}

// Equilibrium plus h times a unit combination of the basis, pulled back onto W = 0 by Newton along grad W.
inline State eigen_seed_at_equilibrium(Equilibrium which, const std::array<double, 3>& coeff,
                                       double h, const Params& p) {
    State s = equilibrium_state(which);
    if (h == 0.0) return s;
    const auto E = equilibrium_basis(which, p);
    Eigen::Matrix<double, 6, 1> v = E * Eigen::Vector3d(coeff[0], coeff[1], coeff[2]);
    if (v.norm() == 0) return s;
    v.normalize();
    for (int k = 0; k < 6; ++k) s[k] += h * v(k);
    for (int it = 0; it < 20; ++it) {
        const double w = first_integral(s, p);
        const State gr = grad_first_integral(s, p);
        double n2 = 0;
        for (double gk : gr) n2 += gk * gk;
        if (std::abs(w) < 1e-16 || n2 == 0) break;
        for (int k = 0; k < 6; ++k) s[k] -= w / n2 * gr[k];
    }
    return s;
}

}  // namespace hetero
