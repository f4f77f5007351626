// hetero: solve, sweep and diagnose the orthogonal domain-wall connection.
//
// Exit codes: 0 success, 1 configuration or input error, 2 numerical failure.

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "hetero/hetero.hpp"
#include "hetero/io.hpp"

#ifndef HETERO_VERSION
#define HETERO_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace hetero;
using io::json;

namespace {

enum Exit { ok = 0, input_error = 1, numerical_error = 2 };

struct Options {
    std::string config, out = "out", profile;
    std::optional<double> epsilon, g, nu_minus, nu_plus, tol, grid;
    bool quiet = false;
};

struct Run {
    std::string command;
    io::RunConfig cfg;
    fs::path out;
    std::string started;
    std::vector<std::string> files;
    json summary = json::object();
    bool quiet = false;

    void log(const std::string& s) const {
        if (!quiet) std::cerr << s << "\n";
    }
    void write(const std::string& name, const std::string& text) {
        io::write_text((out / name).string(), text);
        files.push_back(name);
    }
};

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void prepare_out(const fs::path& out) {
    if (fs::is_directory(out)) return;
    const fs::path parent = fs::absolute(out).parent_path();
    if (!fs::is_directory(parent))
        throw io::ConfigError("output directory parent " + parent.string() + " does not exist");
    std::error_code ec;
    fs::create_directory(out, ec);
    if (ec) throw io::ConfigError("cannot create " + out.string() + ": " + ec.message());
}

// defaults < sidecar report (profile commands) < config file < flags
Run resolve(const std::string& command, const Options& o, const json* sidecar = nullptr) {
    Run r;
    r.command = command;
    r.quiet = o.quiet;
    r.started = utc_now();
    if (sidecar) {
        json j;
        for (const char* k : {"epsilon", "g", "nu_minus", "nu_plus"})
            if (sidecar->contains(k)) j[k] = sidecar->at(k);
        if (sidecar->value("unsupported_regime", false)) j["allow_unsupported"] = true;
        io::apply_json(r.cfg, j);
    }
    if (!o.config.empty()) io::apply_json(r.cfg, io::read_json(o.config));
    if (o.epsilon) r.cfg.epsilon = *o.epsilon;
    if (o.g) r.cfg.g = *o.g;
    if (o.nu_minus) r.cfg.nu_minus = *o.nu_minus;
    if (o.nu_plus) r.cfg.nu_plus = *o.nu_plus;
    if (o.tol) {
        if (!(*o.tol > 0)) throw io::ConfigError("--tol must be positive");
        r.cfg.solver.tol = r.cfg.solver.newton_tol = *o.tol;
    }
    if (o.grid) {
        if (!(*o.grid > 0)) throw io::ConfigError("--grid must be positive");
        if (command == "inner")
            r.cfg.solver.picard.points = int(*o.grid);
        else if (command == "spectrum")
            r.cfg.spectrum_h = *o.grid;
        else
            r.cfg.solver.sample_step = *o.grid;
    }
    r.out = o.out;
    prepare_out(r.out);
    return r;
}

void write_manifest(Run& r) {
    json m = {{"tool", "hetero"},
              {"version", HETERO_VERSION},
              {"command", r.command},
              {"config", io::to_json(r.cfg)},
              {"started", r.started},
              {"finished", utc_now()},
              {"outputs", r.files},
              {"summary", r.summary}};
    r.files.push_back("manifest.json");
    m["outputs"] = r.files;
    io::write_text((r.out / "manifest.json").string(), io::dump17(m));
}

ScalingConfig scaling_for(const Params& p, const io::RunConfig& c) {
    return scaling_from_epsilon(p, c.nu_minus.value_or(default_nu_minus(p)),
                                c.nu_plus.value_or(default_nu_plus(p)), !p.unsupported);
}

int cmd_solve(const Options& o) {
    Run r = resolve("solve", o);
    const Params p = io::params_of(r.cfg);
    r.log("solving at epsilon = " + io::fmt17(p.epsilon) + ", g = " + io::fmt17(p.g));
    const auto prof = heteroclinic_solve(p, io::solver_of(r.cfg));
    const auto ver = verify_profile(prof);
    r.write("profile.csv", io::profile_csv(prof.x, prof.s, p));
    r.write("report.json", io::dump17(io::solve_report(prof, ver)));
    r.summary = {{"newton_iterations", prof.newton_iterations}, {"sup_W", prof.sup_W},
                 {"A_at_0", prof.A_at_0}, {"B0_at_0", prof.B0_at_0},
                 {"corner_width", prof.corner_width}, {"min_B1", prof.min_B1},
                 {"verification_passed", ver.all_passed()}};
    write_manifest(r);
    r.log("converged in " + std::to_string(prof.newton_iterations) + " Newton steps, sup|W| = " +
          io::fmt17(prof.sup_W));
    return ok;
}

int cmd_sweep(const Options& o) {
    Run r = resolve("sweep", o);
    const auto eps = r.cfg.sweep_epsilons;
    check_scaling_span(eps);
    for (double e : eps) io::params_of([&] { auto c = r.cfg; c.epsilon = e; return c; }());

    std::vector<io::RunConfig> member(eps.size(), r.cfg);
    for (std::size_t i = 0; i < eps.size(); ++i) {
        member[i].epsilon = eps[i];
        const std::string key = std::to_string(i);
        if (r.cfg.sweep_overrides.contains(key)) io::apply_json(member[i], r.cfg.sweep_overrides.at(key));
    }

    std::vector<ScalingSample> samples(eps.size());
    std::vector<std::string> dirs(eps.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mu;
    auto worker = [&] {
        for (std::size_t i; (i = next++) < eps.size();) {
            char name[64];
            std::snprintf(name, sizeof name, "eps_%.6g", eps[i]);
            dirs[i] = name;
            const fs::path dir = r.out / name;
            fs::create_directories(dir);
            ScalingSample& s = samples[i];
            s.epsilon = eps[i];
            try {
                const Params p = io::params_of(member[i]);
                const auto prof = heteroclinic_solve(p, io::solver_of(member[i]));
                s.converged = std::isfinite(prof.corner_width);
                s.A0 = prof.A_at_0;
                s.width = prof.corner_width;
                s.newton_iterations = prof.newton_iterations;
                if (!s.converged) s.error = "A has no zero on x > 0";
                io::write_text((dir / "profile.csv").string(), io::profile_csv(prof.x, prof.s, p));
                io::write_text((dir / "report.json").string(),
                               io::dump17(io::solve_report(prof, verify_profile(prof))));
            } catch (const std::exception& e) {
                s.error = e.what();
                io::write_text((dir / "report.json").string(),
                               io::dump17({{"epsilon", eps[i]}, {"converged", false}, {"error", s.error}}));
            }
            std::lock_guard lk(log_mu);
            r.log("epsilon " + io::fmt17(eps[i]) + (s.converged ? ": converged" : ": FAILED " + s.error));
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t nw = std::min<std::size_t>(eps.size(), r.cfg.workers > 0 ? std::size_t(r.cfg.workers) : hw);
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < nw; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    json members = json::array();
    int failed = 0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const auto& s = samples[i];
        failed += !s.converged;
        members.push_back({{"epsilon", s.epsilon}, {"converged", s.converged}, {"A_at_0", s.A0},
                           {"corner_width", s.width}, {"newton_iterations", s.newton_iterations},
                           {"error", s.error}, {"directory", dirs[i]}});
        r.files.push_back(dirs[i] + "/report.json");
        if (s.converged) r.files.push_back(dirs[i] + "/profile.csv");
    }
    json sc = {{"g", r.cfg.g}, {"members", members}, {"failed", failed}};
    bool fit_ok = false;
    try {
        const auto fit = scaling_fit(samples);
        sc["slope_A0"] = fit.slope_A0;
        sc["slope_width"] = fit.slope_width;
        sc["intercept_A0"] = fit.intercept_A0;
        sc["intercept_width"] = fit.intercept_width;
        sc["used"] = fit.used;
        sc["expected_slope_A0"] = 0.4;
        sc["expected_slope_width"] = -0.2;
        fit_ok = true;
    } catch (const std::exception& e) {
        sc["fit_error"] = e.what();
    }
    r.write("scaling.json", io::dump17(sc));
    r.summary = {{"members", eps.size()}, {"failed", failed}};
    if (fit_ok) {
        r.summary["slope_A0"] = sc["slope_A0"];
        r.summary["slope_width"] = sc["slope_width"];
    }
    write_manifest(r);
    if (2 * failed > int(eps.size())) {
        std::cerr << "sweep: " << failed << " of " << eps.size() << " members failed\n";
        return numerical_error;
    }
    return ok;
}

int cmd_inner(const Options& o) {
    Run r = resolve("inner", o);
    InnerProblem prob;
    prob.a_plus = r.cfg.inner_a_plus;
    prob.x10 = r.cfg.inner_x10;
    prob.x20 = r.cfg.inner_x20;
    auto sol = picard_solve(prob, r.cfg.solver.picard);
    if (r.cfg.inner_a_minus && *r.cfg.inner_a_minus > prob.a_plus)
        sol = picard_extend(std::move(sol), *r.cfg.inner_a_minus, r.cfg.solver.picard);
    const double res = inner_residual(sol);
    r.write("inner.csv", io::inner_csv(sol));
    json rep = {{"a_plus", sol.a_plus},
                {"a_minus", sol.a_minus},
                {"x10", prob.x10},
                {"x20", prob.x20},
                {"points", sol.z.size()},
                {"iterations", sol.iterations},
                {"contraction_constant", contraction_constant(prob.a_plus)},
                {"max_ratio", sol.max_ratio},
                {"history", sol.history},
                {"extension_steps", sol.extension_steps},
                {"step_condition", sol.step_condition},
                {"residual", res}};
    r.write("report.json", io::dump17(rep));
    r.summary = {{"iterations", sol.iterations}, {"residual", res}};
    write_manifest(r);
    r.log("inner solution: " + std::to_string(sol.iterations) + " Picard iterations, residual " + io::fmt17(res));
    return ok;
}

// Profile plus its parameters, read from profile.csv and the report.json beside it.
struct Loaded {
    Run run;
    HeteroclinicProfile prof;
};

Loaded load_profile(const std::string& command, const Options& o) {
    if (o.profile.empty()) throw io::ConfigError(command + ": profile path required");
    const fs::path side = fs::path(o.profile).parent_path() / "report.json";
    json sidecar;
    const bool has_side = fs::exists(side);
    if (has_side) sidecar = io::read_json(side.string());
    Loaded l{resolve(command, o, has_side ? &sidecar : nullptr), {}};
    const Params p = io::params_of(l.run.cfg);
    const auto table = io::read_profile_csv(o.profile);
    l.prof = io::profile_from_table(table, p, scaling_for(p, l.run.cfg));
    return l;
}

int cmd_spectrum(const Options& o) {
    auto [r, prof] = load_profile("spectrum", o);
    GridSpec gs;
    gs.h = r.cfg.spectrum_h;
    const auto grid = resample(prof, gs);
    const auto M = assemble_Mg(grid, prof.p);
    const auto k = kernel_diagnostics(M, grid);
    const auto L = assemble_Lg(grid, prof.p);
    const auto lg = lg_diagnostics(L, grid, prof.p);
    auto edge = [&](Side s, OperatorKind op) {
        const auto e = asymptotic_spectrum(prof.p.g, s, op);
        return json{{"block_A", e.block_A}, {"block_C", e.block_C}, {"stated", e.stated},
                    {"union_edge", e.union_edge}};
    };
    json rep = {{"grid_h", grid.h},
                {"points", grid.size()},
                {"M_g",
                 {{"sigma", k.sigma},
                  {"separation", k.separation},
                  {"kernel_angle", k.kernel_angle},
                  {"kernel_angle_ok", k.kernel_angle < 1e-3},
                  {"orthogonality_defect", k.orthogonality_defect},
                  {"orthogonality_defect_profile", k.orthogonality_defect_profile},
                  {"kernel_residual", k.kernel_residual},
                  {"iterations", k.iterations}}},
                {"L_g",
                 {{"sigma_flat", lg.sigma_flat},
                  {"sigma_weighted", lg.sigma_weighted},
                  {"eta", lg.eta},
                  {"floor", lg.floor},
                  {"residual_B", lg.residual_B},
                  {"trivial_kernel", lg.trivial_kernel}}},
                {"essential_spectrum",
                 {{"M_minus", edge(Side::minus, OperatorKind::M)},
                  {"M_plus", edge(Side::plus, OperatorKind::M)},
                  {"L_minus", edge(Side::minus, OperatorKind::L)},
                  {"L_plus", edge(Side::plus, OperatorKind::L)}}}};
    r.write("spectrum.json", io::dump17(rep));
    r.summary = {{"kernel_angle", k.kernel_angle}, {"sigma_1", k.sigma[0]}, {"separation", k.separation}};
    write_manifest(r);
    r.log("kernel angle " + io::fmt17(k.kernel_angle) + " rad, separation " + io::fmt17(k.separation));
    return ok;
}

int cmd_verify(const Options& o) {
    auto [r, prof] = load_profile("verify", o);
    const auto ver = verify_profile(prof);
    r.write("report.json", io::dump17(io::to_json(ver)));
    int failed = 0;
    for (const auto& c : ver.checks)
        if (!c.passed) {
            ++failed;
            std::cerr << "FAIL " << c.name << ": measured " << io::fmt17(c.measured) << ", target "
                      << io::fmt17(c.target) << "\n";
        }
    r.summary = {{"checks", ver.checks.size()}, {"failed", failed}};
    write_manifest(r);
    r.log(std::to_string(ver.checks.size() - failed) + "/" + std::to_string(ver.checks.size()) + " checks passed");
    return failed ? numerical_error : ok;
}

void add_common(CLI::App* sub, Options& o, bool takes_profile) {
    sub->add_option("--config", o.config, "JSON configuration file");
    sub->add_option("--out", o.out, "output directory (created if its parent exists)");
    sub->add_option("--epsilon", o.epsilon, "scale separation epsilon");
    sub->add_option("--g", o.g, "coupling constant g");
    sub->add_option("--nu-minus", o.nu_minus, "inner scaling parameter nu-");
    sub->add_option("--nu-plus", o.nu_plus, "inner scaling parameter nu+");
    sub->add_option("--tol", o.tol, "integrator and Newton tolerance");
    sub->add_option("--grid", o.grid,
                    "solve/sweep: sample step; inner: Picard points; spectrum: operator grid step");
    sub->add_flag("--quiet", o.quiet, "suppress progress messages");
    if (takes_profile) sub->add_option("profile", o.profile, "profile.csv to analyse")->required();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Orthogonal domain-wall heteroclinic solver"};
    app.set_version_flag("--version", HETERO_VERSION);
    app.require_subcommand(1);
    Options o;
    std::map<std::string, int (*)(const Options&)> handlers{{"solve", cmd_solve},
                                                            {"sweep", cmd_sweep},
                                                            {"inner", cmd_inner},
                                                            {"spectrum", cmd_spectrum},
                                                            {"verify", cmd_verify}};
    add_common(app.add_subcommand("solve", "compute the connection at one (epsilon, g)"), o, false);
    add_common(app.add_subcommand("sweep", "solve over an epsilon list and fit the corner scaling"), o, false);
    add_common(app.add_subcommand("inner", "solve the inner corner-layer problem"), o, false);
    add_common(app.add_subcommand("spectrum", "kernel and spectral diagnostics of a profile"), o, true);
    add_common(app.add_subcommand("verify", "check a profile against the predicted asymptotics"), o, true);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : input_error;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        return handlers.at(cmd)(o);
    } catch (const io::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return input_error;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return numerical_error;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return input_error;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return numerical_error;
    }
}
