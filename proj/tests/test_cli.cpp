#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "hetero/io.hpp"

namespace fs = std::filesystem;
using hetero::io::json;

namespace {

const fs::path& scratch() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "hetero_test_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = std::string(HETERO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

json load(const fs::path& p) {
    std::ifstream f(p);
    return json::parse(f);
}

// one solve shared by the profile-consuming tests
const fs::path& solved() {
    static const fs::path dir = [] {
        const fs::path d = scratch() / "solve";
        EXPECT_EQ(run("solve --quiet --out " + d.string()), 0);
        return d;
    }();
    return dir;
}

}  // namespace

TEST(Cli, SolveWritesArtifacts) {
    const auto& d = solved();
    for (const char* f : {"profile.csv", "report.json", "manifest.json"}) EXPECT_TRUE(fs::exists(d / f)) << f;
    const json rep = load(d / "report.json");
    EXPECT_EQ(rep.at("epsilon").get<double>(), 0.1);
    EXPECT_TRUE(rep.at("verification").at("all_passed").get<bool>());
    const json man = load(d / "manifest.json");
    EXPECT_EQ(man.at("command"), "solve");
    EXPECT_EQ(man.at("outputs").size(), 3u);
    // 17 significant digits on disk
    std::ifstream f(d / "report.json");
    const std::string text((std::istreambuf_iterator<char>(f)), {});
    EXPECT_NE(text.find("\"epsilon\": 0.10000000000000001"), std::string::npos);
}

TEST(Cli, InputErrorsExitOne) {
    EXPECT_EQ(run("solve --quiet --g 3 --out " + (scratch() / "g3").string()), 1);
    EXPECT_EQ(run("solve --quiet --out /nonexistent_parent_dir/x"), 1);
    EXPECT_EQ(run("solve --quiet --bogus-flag"), 1);
    EXPECT_EQ(run("solve --quiet --config " + (scratch() / "nope.json").string()), 1);
    hetero::io::write_text((scratch() / "unknown.json").string(), R"({"epsilonn": 0.1})");
    EXPECT_EQ(run("solve --quiet --config " + (scratch() / "unknown.json").string()), 1);
}

TEST(Cli, ManifestReproducesRun) {
    const json man = load(solved() / "manifest.json");
    hetero::io::write_text((scratch() / "replay.json").string(), man.at("config").dump());
    const fs::path d = scratch() / "replay";
    ASSERT_EQ(run("solve --quiet --config " + (scratch() / "replay.json").string() + " --out " + d.string()), 0);
    EXPECT_EQ(load(d / "manifest.json").at("summary"), man.at("summary"));
    EXPECT_EQ(load(d / "report.json").at("A_at_0"), load(solved() / "report.json").at("A_at_0"));
}

TEST(Cli, SweepFitsScaling) {
    const fs::path d = scratch() / "sweep";
    ASSERT_EQ(run("sweep --quiet --out " + d.string()), 0);
    const json sc = load(d / "scaling.json");
    EXPECT_EQ(sc.at("failed"), 0);
    EXPECT_NEAR(sc.at("slope_A0").get<double>(), 0.4, 0.05);
    EXPECT_NEAR(sc.at("slope_width").get<double>(), -0.2, 0.05);
    EXPECT_EQ(sc.at("members").size(), 4u);
    for (const auto& m : sc.at("members")) EXPECT_TRUE(fs::exists(d / m.at("directory").get<std::string>() / "profile.csv"));
}

TEST(Cli, SweepNeedsFourValues) {
    hetero::io::write_text((scratch() / "one.json").string(), R"({"sweep": {"epsilons": [0.1]}})");
    EXPECT_EQ(run("sweep --quiet --config " + (scratch() / "one.json").string() + " --out " + (scratch() / "one").string()), 1);
}

TEST(Cli, SweepIsolatesAFailingMember) {
    hetero::io::write_text((scratch() / "fault.json").string(), R"({"sweep": {"overrides": {"1": {"max_newton": 1}}}})");
    const fs::path d = scratch() / "fault";
    ASSERT_EQ(run("sweep --quiet --config " + (scratch() / "fault.json").string() + " --out " + d.string()), 0);
    const json sc = load(d / "scaling.json");
    EXPECT_EQ(sc.at("failed"), 1);
    EXPECT_FALSE(sc.at("members")[1].at("converged").get<bool>());
    EXPECT_FALSE(sc.at("members")[1].at("error").get<std::string>().empty());
    EXPECT_EQ(sc.at("used"), 3);
    // a majority of failures is a numerical failure
    hetero::io::write_text((scratch() / "faults.json").string(),
                           R"({"sweep": {"overrides": {"0": {"max_newton": 1}, "1": {"max_newton": 1}, "2": {"max_newton": 1}}}})");
    EXPECT_EQ(run("sweep --quiet --config " + (scratch() / "faults.json").string() + " --out " + (scratch() / "faults").string()), 2);
}

TEST(Cli, InnerZeroData) {
    const fs::path d = scratch() / "inner";
    ASSERT_EQ(run("inner --quiet --out " + d.string()), 0);
    EXPECT_TRUE(fs::exists(d / "inner.csv"));
    const json rep = load(d / "report.json");
    EXPECT_EQ(rep.at("residual").get<double>(), 0.0);
}

TEST(Cli, SpectrumOnSolvedProfile) {
    const fs::path d = scratch() / "spectrum";
    ASSERT_EQ(run("spectrum --quiet --out " + d.string() + " " + (solved() / "profile.csv").string()), 0);
    const json rep = load(d / "spectrum.json");
    EXPECT_LT(rep.at("M_g").at("kernel_angle").get<double>(), 1e-3);
    EXPECT_TRUE(rep.at("L_g").at("trivial_kernel").get<bool>());
    EXPECT_EQ(rep.at("grid_h").get<double>(), 0.02);
}

TEST(Cli, VerifyPassesAndCatchesTampering) {
    ASSERT_EQ(run("verify --quiet --out " + (scratch() / "verify").string() + " " + (solved() / "profile.csv").string()), 0);
    EXPECT_TRUE(load(scratch() / "verify" / "report.json").at("all_passed").get<bool>());

    // decreasing B over a stretch near the corner
    std::ifstream in(solved() / "profile.csv");
    std::ofstream out(solved() / "tampered.csv");
    std::string line;
    std::getline(in, line);
    out << line << "\n";
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        if (std::stod(cells[0]) > 5 && std::stod(cells[0]) < 6) cells[6] = "-0.001";
        for (std::size_t k = 0; k < cells.size(); ++k) out << (k ? "," : "") << cells[k];
        out << "\n";
    }
    out.close();
    const fs::path d = scratch() / "verify_tampered";
    EXPECT_EQ(run("verify --quiet --out " + d.string() + " " + (solved() / "tampered.csv").string()), 2);
    const json rep = load(d / "report.json");
    EXPECT_FALSE(rep.at("all_passed").get<bool>());
    bool seen = false;
    for (const auto& c : rep.at("checks"))
        if (c.at("name") == "monotone_B") {
            seen = true;
            EXPECT_FALSE(c.at("passed").get<bool>());
        }
    EXPECT_TRUE(seen);
}
