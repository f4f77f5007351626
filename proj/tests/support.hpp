#pragma once

#include <random>

#include "hetero/hetero.hpp"

namespace hetero::testing {

// Solved once per test binary.
inline const HeteroclinicProfile& reference_profile() {
    static const HeteroclinicProfile prof = heteroclinic_solve(derive_params(0.1, 1.5));
    return prof;
}

inline std::mt19937_64& rng() {
    static std::mt19937_64 r(20240611);
    return r;
}

inline State random_state(double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    State s;
    for (auto& v : s) v = u(rng());
    return s;
}

inline double max_abs_diff(const State& a, const State& b) {
    double d = 0;
    for (int i = 0; i < 6; ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace hetero::testing
