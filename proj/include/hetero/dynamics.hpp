#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <string_view>
#include <vector>

#include "params.hpp"

namespace hetero {

template <class T>
using StateT = std::array<T, 6>;
using State = StateT<double>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

enum Idx { iA0 = 0, iA1, iA2, iA3, iB0, iB1 };

inline constexpr State M_minus{1, 0, 0, 0, 0, 0};
inline constexpr State M_plus{0, 0, 0, 0, 1, 0};

template <class T>
StateT<T> vector_field(const StateT<T>& s, const Params& p) {
    const T& a = s[0];
    const T& b = s[4];
    const double e2 = p.epsilon * p.epsilon;
    return {s[1], s[2], s[3], a * (T(1) - a * a - p.g * b * b), s[5],
            e2 * b * (T(-1) + p.g * a * a + b * b)};
}

inline Mat6 jacobian(const State& s, const Params& p) {
    const double a = s[0], b = s[4], e2 = p.epsilon * p.epsilon;
    Mat6 J = Mat6::Zero();
    J(0, 1) = J(1, 2) = J(2, 3) = J(4, 5) = 1.0;
    J(3, 0) = 1.0 - 3.0 * a * a - p.g * b * b;
    J(3, 4) = -2.0 * p.g * a * b;
    J(5, 0) = 2.0 * e2 * p.g * a * b;
    J(5, 4) = e2 * (-1.0 + p.g * a * a + 3.0 * b * b);
    return J;
}

template <class T>
T first_integral(const StateT<T>& s, const Params& p) {
    const double e2 = p.epsilon * p.epsilon, d2 = p.delta * p.delta;
    const T q = s[0] * s[0] + s[4] * s[4] - T(1);
    return 2.0 * e2 * s[1] * s[3] - e2 * s[2] * s[2] - s[5] * s[5] + 0.5 * e2 * q * q +
           e2 * d2 * s[0] * s[0] * s[4] * s[4];
}

inline State grad_first_integral(const State& s, const Params& p) {
    const double e2 = p.epsilon * p.epsilon, d2 = p.delta * p.delta;
    const double q = s[0] * s[0] + s[4] * s[4] - 1.0;
    return {2 * e2 * (q * s[0] + d2 * s[0] * s[4] * s[4]),
            2 * e2 * s[3],
            -2 * e2 * s[2],
            2 * e2 * s[1],
            2 * e2 * (q * s[4] + d2 * s[0] * s[0] * s[4]),
            -2 * s[5]};
}

enum class Symmetry { negA, negB, negAB, reversibility };

inline Symmetry symmetry_from_name(std::string_view n) {
    if (n == "negA") return Symmetry::negA;
    if (n == "negB") return Symmetry::negB;
    if (n == "negAB") return Symmetry::negAB;
    if (n == "reversibility" || n == "R") return Symmetry::reversibility;
    throw DomainError("unknown symmetry map '" + std::string(n) + "'");
}

template <class T>
StateT<T> symmetry_apply(StateT<T> s, Symmetry m) {
    switch (m) {
        case Symmetry::negA:
            for (int k = 0; k < 4; ++k) s[k] = -s[k];
            break;
        case Symmetry::negB:
            s[4] = -s[4];
            s[5] = -s[5];
            break;
        case Symmetry::negAB:
            for (auto& v : s) v = -v;
            break;
        case Symmetry::reversibility:
            s[1] = -s[1];
            s[3] = -s[3];
            s[5] = -s[5];
            break;
    }
    return s;
}

// Closed-form spectra of the linearisation at the two equilibria.
inline std::array<std::complex<double>, 6> eigenvalues_M_minus(const Params& p) {
    const double r = std::pow(2.0, -0.25), ed = p.epsilon * p.delta;
    return {{{r, r}, {r, -r}, {-r, r}, {-r, -r}, {ed, 0}, {-ed, 0}}};
}
inline std::array<std::complex<double>, 6> eigenvalues_M_plus(const Params& p) {
    const double r = std::sqrt(p.delta / 2.0), es = p.epsilon * std::sqrt(2.0);
    return {{{r, r}, {r, -r}, {-r, r}, {-r, -r}, {es, 0}, {-es, 0}}};
}

struct SingularLimitProfile {
    std::vector<double> left_B, left_A;  // ellipse arc, B from 0 to 1/sqrt(g)
    std::vector<double> right_x, right_B;
};

inline double singular_right_B(double x, const Params& p) {
    return std::tanh(p.epsilon / std::sqrt(2.0) * x + std::atanh(1.0 / std::sqrt(p.g)));
}

inline SingularLimitProfile singular_limit(const Params& p, const std::vector<double>& grid,
                                           int n_arc = 201) {
    SingularLimitProfile out;
    const double bmax = 1.0 / std::sqrt(p.g);
    for (int i = 0; i < n_arc; ++i) {
        const double b = bmax * i / (n_arc - 1);
        out.left_B.push_back(b);
        out.left_A.push_back(std::sqrt(std::max(0.0, 1.0 - p.g * b * b)));
    }
    for (double x : grid) {
        if (x < 0) continue;
        out.right_x.push_back(x);
        out.right_B.push_back(singular_right_B(x, p));
    }
    return out;
}

}  // namespace hetero
