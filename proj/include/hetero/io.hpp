#pragma once

// Serialization helpers shared by the command-line tool and the tests.
// Requires nlohmann/json (vendor/json.hpp).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "connect.hpp"
#include "inner.hpp"
#include "linop.hpp"
#include "verify.hpp"

namespace hetero::io {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string fmt17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {
inline void dump(const json& j, std::ostringstream& os, int indent, int level) {
    const std::string pad(std::size_t(indent * (level + 1)), ' '), end(std::size_t(indent * level), ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ",\n";
                first = false;
                os << pad << json(it.key()).dump() << ": ";
                dump(it.value(), os, indent, level + 1);
            }
            os << "\n" << end << "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            const bool nested = j.front().is_structured();
            os << (nested ? "[\n" + pad : "[");
            bool first = true;
            for (const auto& v : j) {
                if (!first) os << (nested ? ",\n" + pad : ", ");
                first = false;
                dump(v, os, indent, level + 1);
            }
            os << (nested ? "\n" + end + "]" : "]");
            return;
        }
        case json::value_t::number_float: {
            const double v = j.get<double>();
            os << (std::isfinite(v) ? fmt17(v) : "null");
            return;
        }
        default:
            os << j.dump();
    }
}
}  // namespace detail

// JSON text with every float written to 17 significant digits.
inline std::string dump17(const json& j, int indent = 2) {
    std::ostringstream os;
    detail::dump(j, os, indent, 0);
    os << "\n";
    return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

inline json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// ---- run configuration ----

struct RunConfig {
    double epsilon = 0.1;
    double g = 1.5;
    std::optional<double> nu_minus, nu_plus;
    double epsilon_ceiling = 0.25;
    bool allow_unsupported = false;
    HeteroclinicConfig solver{};
    std::vector<double> sweep_epsilons{0.2, 0.1, 0.05, 0.025};
    json sweep_overrides = json::object();  // member index -> config patch
    int workers = 0;                        // 0: hardware concurrency
    double spectrum_h = 0.02;
    // inner subcommand
    double inner_a_plus = 1.0;
    std::optional<double> inner_a_minus;
    double inner_x10 = 0, inner_x20 = 0;
};

namespace detail {
template <class T>
void take(const json& j, const char* key, T& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}
template <class T>
void take_opt(const json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    T v{};
    take(j, key, v);
    out = v;
}
}  // namespace detail

inline void apply_json(RunConfig& c, const json& j) {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    static const char* known[] = {"epsilon", "g", "nu_minus", "nu_plus", "epsilon_ceiling",
                                  "allow_unsupported", "tol", "newton_tol", "max_newton", "segment",
                                  "tail_left", "tail_right", "a_minus_cap", "picard_points",
                                  "picard_tol", "picard_max_iter", "sample_step", "seed_scale",
                                  "inner_seed", "sweep", "workers", "spectrum", "inner"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) ==
            std::end(known))
            throw ConfigError("unknown config key '" + it.key() + "'");
    using detail::take;
    take(j, "epsilon", c.epsilon);
    take(j, "g", c.g);
    detail::take_opt(j, "nu_minus", c.nu_minus);
    detail::take_opt(j, "nu_plus", c.nu_plus);
    take(j, "epsilon_ceiling", c.epsilon_ceiling);
    take(j, "allow_unsupported", c.allow_unsupported);
    auto& s = c.solver;
    take(j, "tol", s.tol);
    take(j, "newton_tol", s.newton_tol);
    take(j, "max_newton", s.max_newton);
    take(j, "segment", s.segment);
    take(j, "tail_left", s.tail_left);
    take(j, "tail_right", s.tail_right);
    take(j, "a_minus_cap", s.a_minus_cap);
    take(j, "picard_points", s.picard.points);
    take(j, "picard_tol", s.picard.tol);
    take(j, "picard_max_iter", s.picard.max_iter);
    take(j, "sample_step", s.sample_step);
    take(j, "seed_scale", s.seed_scale);
    take(j, "inner_seed", s.inner_seed);
    take(j, "workers", c.workers);
    if (j.contains("sweep")) {
        const json& w = j.at("sweep");
        take(w, "epsilons", c.sweep_epsilons);
        if (w.contains("overrides")) c.sweep_overrides = w.at("overrides");
    }
    if (j.contains("spectrum")) take(j.at("spectrum"), "h", c.spectrum_h);
    if (j.contains("inner")) {
        const json& w = j.at("inner");
        take(w, "a_plus", c.inner_a_plus);
        detail::take_opt(w, "a_minus", c.inner_a_minus);
        take(w, "x10", c.inner_x10);
        take(w, "x20", c.inner_x20);
    }
    if (!(s.tol > 0) || !(s.newton_tol > 0) || !(s.sample_step > 0) || !(s.segment > 0))
        throw ConfigError("tolerances, segment and sample_step must be positive");
    if (s.max_newton < 0 || s.picard.points < 4) throw ConfigError("max_newton >= 0 and picard_points >= 4 required");
}

inline json to_json(const RunConfig& c) {
    const auto& s = c.solver;
    json j = {{"epsilon", c.epsilon},
              {"g", c.g},
              {"nu_minus", c.nu_minus ? json(*c.nu_minus) : json(nullptr)},
              {"nu_plus", c.nu_plus ? json(*c.nu_plus) : json(nullptr)},
              {"epsilon_ceiling", c.epsilon_ceiling},
              {"allow_unsupported", c.allow_unsupported},
              {"tol", s.tol},
              {"newton_tol", s.newton_tol},
              {"max_newton", s.max_newton},
              {"segment", s.segment},
              {"tail_left", s.tail_left},
              {"tail_right", s.tail_right},
              {"a_minus_cap", s.a_minus_cap},
              {"picard_points", s.picard.points},
              {"picard_tol", s.picard.tol},
              {"picard_max_iter", s.picard.max_iter},
              {"sample_step", s.sample_step},
              {"seed_scale", s.seed_scale},
              {"inner_seed", s.inner_seed},
              {"workers", c.workers},
              {"sweep", {{"epsilons", c.sweep_epsilons}, {"overrides", c.sweep_overrides}}},
              {"spectrum", {{"h", c.spectrum_h}}},
              {"inner",
               {{"a_plus", c.inner_a_plus},
                {"a_minus", c.inner_a_minus ? json(*c.inner_a_minus) : json(nullptr)},
                {"x10", c.inner_x10},
                {"x20", c.inner_x20}}}};
    return j;
}

inline Params params_of(const RunConfig& c) {
    ParamOptions o;
    o.epsilon_ceiling = c.epsilon_ceiling;
    o.allow_unsupported = c.allow_unsupported;
    return derive_params(c.epsilon, c.g, o);
}

inline HeteroclinicConfig solver_of(const RunConfig& c) {
    HeteroclinicConfig s = c.solver;
    s.nu_minus = c.nu_minus;
    s.nu_plus = c.nu_plus;
    return s;
}

// ---- CSV ----

inline std::string profile_csv(const std::vector<double>& x, const std::vector<State>& s, const Params& p) {
    std::ostringstream os;
    os << "x,A0,A1,A2,A3,B0,B1,W\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
        os << fmt17(x[i]);
        for (double v : s[i]) os << ',' << fmt17(v);
        os << ',' << fmt17(first_integral(s[i], p)) << '\n';
    }
    return os.str();
}

inline std::string inner_csv(const InnerSolution& sol) {
    std::ostringstream os;
    os << "z,A,A',A'',A''',residual\n";
    const auto r = inner_residual_profile(sol);
    for (std::size_t i = 0; i < sol.z.size(); ++i)
        os << fmt17(sol.z[i]) << ',' << fmt17(sol.A0[i]) << ',' << fmt17(sol.A1[i]) << ','
           << fmt17(sol.A2[i]) << ',' << fmt17(sol.A3[i]) << ',' << fmt17(r[i]) << '\n';
    return os.str();
}

struct ProfileTable {
    std::vector<double> x;
    std::vector<State> s;
};

inline ProfileTable read_profile_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read profile " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("x,A0,A1,A2,A3,B0,B1", 0) != 0)
        throw ConfigError(path + ": missing profile header");
    ProfileTable t;
    int row = 1;
    while (std::getline(f, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ss, cell, ',')) {
            try {
                v.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError(path + ": bad number on row " + std::to_string(row));
            }
        }
        if (v.size() < 7) throw ConfigError(path + ": short row " + std::to_string(row));
        t.x.push_back(v[0]);
        t.s.push_back({v[1], v[2], v[3], v[4], v[5], v[6]});
    }
    if (t.x.size() < 5) throw ConfigError(path + ": too few samples");
    for (std::size_t i = 1; i < t.x.size(); ++i)
        if (!(t.x[i] > t.x[i - 1])) throw ConfigError(path + ": abscissae not increasing");
    return t;
}

// A profile rebuilt from samples; every sample doubles as a shooting node.
inline HeteroclinicProfile profile_from_table(const ProfileTable& t, const Params& p,
                                              const ScalingConfig& sc) {
    HeteroclinicProfile prof;
    prof.p = p;
    prof.sc = sc;
    prof.x_star = sc.x_star;
    prof.x_star_plus = sc.x_star_plus;
    prof.x = t.x;
    prof.s = t.s;
    prof.node_x = t.x;
    prof.node_s = t.s;
    prof.L_minus = -t.x.front();
    prof.L_plus = t.x.back();
    prof.min_B1 = std::numeric_limits<double>::infinity();
    for (const auto& s : t.s) {
        const double w = first_integral(s, p);
        prof.W.push_back(w);
        prof.sup_W = std::max(prof.sup_W, std::abs(w));
        prof.min_B1 = std::min(prof.min_B1, s[iB1]);
    }
    return prof;
}

// ---- reports ----

inline json to_json(const DecayFit& f) {
    return {{"x_lo", f.x_lo}, {"x_hi", f.x_hi}, {"rate", f.rate}, {"slope", f.slope},
            {"residual", f.residual}, {"envelope", f.envelope}, {"points", f.points}};
}

inline json to_json(const VerificationReport& r) {
    json a = json::array();
    for (const auto& c : r.checks)
        a.push_back({{"name", c.name}, {"claim", c.anchor}, {"measured", c.measured},
                     {"target", c.target}, {"tolerance", c.tolerance}, {"passed", c.passed}});
    return {{"all_passed", r.all_passed()}, {"checks", a}};
}

inline json to_json(const MatchingResult& m) {
    return {{"unknowns",
             {{"x1u", m.u.x1u}, {"x2u", m.u.x2u}, {"x10s", m.u.x10s}, {"x20s", m.u.x20s}}},
            {"seed",
             {{"x1u", m.seed.x1u}, {"x2u", m.seed.x2u}, {"x10s", m.seed.x10s}, {"x20s", m.seed.x20s}}},
            {"residual", m.residual},
            {"residual_norm", m.residual_norm},
            {"iterations", m.iterations},
            {"history", m.history},
            {"a_minus", m.a_minus},
            {"a_plus", m.a_plus},
            {"sigma_min", m.transversality.sigma_min},
            {"condition", m.transversality.condition},
            {"degenerate", m.transversality.degenerate}};
}

inline json solve_report(const HeteroclinicProfile& prof, const VerificationReport& ver) {
    json rates = json::object();
    try {
        const auto r = fit_decay_rates(prof);
        rates = {{"left_B", to_json(r.left_B)}, {"right_B", to_json(r.right_B)},
                 {"right_A", to_json(r.right_A)}, {"left_A", to_json(r.left_A)}};
    } catch (const std::exception& e) {
        rates = {{"error", e.what()}};
    }
    return {{"epsilon", prof.p.epsilon},
            {"g", prof.p.g},
            {"delta", prof.p.delta},
            {"unsupported_regime", prof.p.unsupported},
            {"nu_minus", prof.sc.nu_minus},
            {"nu_plus", prof.sc.nu_plus},
            {"a_minus", prof.sc.a_minus},
            {"a_plus", prof.sc.a_plus},
            {"x_star", prof.x_star},
            {"x_star_plus", prof.x_star_plus},
            {"L_minus", prof.L_minus},
            {"L_plus", prof.L_plus},
            {"matching", to_json(prof.matching)},
            {"newton_iterations", prof.newton_iterations},
            {"newton_history", prof.newton_history},
            {"unfolding", prof.unfolding},
            {"continuity_defect", prof.continuity_defect},
            {"sup_W", prof.sup_W},
            {"min_B1", prof.min_B1},
            {"A_at_0", prof.A_at_0},
            {"B0_at_0", prof.B0_at_0},
            {"corner_width", prof.corner_width},
            {"max_drift", prof.max_drift},
            {"tail_rates", rates},
            {"verification", to_json(ver)}};
}

}  // namespace hetero::io
