#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "anisoflow/scenario.hpp"

using namespace anisoflow;
namespace fs = std::filesystem;

namespace {

KeyValues parse(const std::string& text) {
    std::istringstream in(text);
    return parse_key_values(in, "test");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("anisoflow_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(Config, ParsesCommentsAndWhitespace) {
    const KeyValues kv = parse("# header\n  J = 64 # trailing\n\ndt=5e-5\n");
    ASSERT_EQ(kv.size(), 2u);
    EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"J", "64"}));
    EXPECT_EQ(kv[1].second, "5e-5");
    EXPECT_THROW(parse("J 64\n"), ConfigError);
}

TEST(Config, ScenarioDefaults) {
    const ScenarioConfig c = resolve_config(parse(""), {{"scenario", "kfold-mikula"}});
    EXPECT_EQ(c.J, 256u);
    EXPECT_DOUBLE_EQ(c.dt, 1e-4);
    EXPECT_DOUBLE_EQ(c.T, 0.35);
    EXPECT_EQ(c.density, "kfold");
    const ScenarioConfig f = resolve_config(parse("scenario=kfold-forced\n"), {});
    EXPECT_DOUBLE_EQ(f.f0, 1.15);
    EXPECT_DOUBLE_EQ(f.T, 4.0);
    EXPECT_EQ(resolve_config({}, {{"scenario", "geodesic-offset"}}).density, "metric");
}

TEST(Config, FlagsOverrideFile) {
    const ScenarioConfig c = resolve_config(parse("scenario=kfold-mikula\ndt=1e-4\n"), {{"dt", "5e-5"}});
    EXPECT_DOUBLE_EQ(c.dt, 5e-5);
    EXPECT_DOUBLE_EQ(c.scheme.dt, 5e-5);
}

TEST(Config, RejectsUnknownKeysBadValuesAndMissingScenario) {
    EXPECT_THROW(resolve_config(parse("scenario=kfold-mikula\ntsep=1\n"), {}), ConfigError);
    EXPECT_THROW(resolve_config(parse("scenario=kfold-mikula\nJ=abc\n"), {}), ConfigError);
    EXPECT_THROW(resolve_config(parse("scenario=kfold-mikula\ndt=-1\n"), {}), ConfigError);
    EXPECT_THROW(resolve_config(parse("J=16\n"), {}), ConfigError);
    EXPECT_THROW(resolve_config(parse("scenario=nope\n"), {}), ConfigError);
}

TEST(Config, TextRoundTrips) {
    const ScenarioConfig c = resolve_config(parse("scenario=geodesic-centered\nc_phi=0.25\nsolver=picard\n"),
                                            {{"J", "64"}, {"damping", "false"}});
    const ScenarioConfig back = resolve_config(parse(config_text(c)), {});
    EXPECT_EQ(config_text(back), config_text(c));
}

TEST(Config, InvalidDensityParametersAreConfigErrors) {
    const ScenarioConfig c = resolve_config(parse("scenario=kfold-mikula\ndelta=0.03\n"), {});
    EXPECT_THROW(build_scenario(c), ConfigError);
}

TEST(Setup, ScenarioGeometry) {
    const ScenarioSetup centered = build_scenario(resolve_config({}, {{"scenario", "geodesic-centered"}}));
    ASSERT_TRUE(centered.surface);
    EXPECT_NEAR(centered.initial.nodes[0].x(), 3.0, 1e-15);
    EXPECT_NEAR(centered.initial.nodes[0].y(), std::sqrt(3.0) / 3.0, 1e-15);
    const ScenarioSetup offset = build_scenario(resolve_config({}, {{"scenario", "geodesic-offset"}}));
    EXPECT_NEAR(offset.initial.nodes[0].y(), 0.5, 1e-15);
    const ScenarioSetup forced = build_scenario(resolve_config({}, {{"scenario", "kfold-forced"}}));
    EXPECT_TRUE(forced.forcing.active());
    EXPECT_FALSE(forced.surface);
    EXPECT_EQ(forced.initial.size(), 256u);
}

TEST(Run, FramesDiagnosticsAndSummary) {
    const fs::path out = scratch("frames");
    const ScenarioConfig c = resolve_config(
        {}, {{"scenario", "isotropic-circle"}, {"J", "4"}, {"dt", "1e-3"}, {"T", "0.035"}, {"frames_every", "5"},
             {"out", out.string()}});
    std::ostringstream log;
    const RunOutcome r = run_scenario(c, log);
    EXPECT_EQ(r.exit_code, exit_ok) << log.str();
    EXPECT_EQ(r.steps, 35u);
    EXPECT_EQ(r.frames_written, 8u);
    EXPECT_EQ(line_count(out / "frames" / "frame_000000.csv"), 5u);
    EXPECT_EQ(slurp(out / "frames" / "frame_000000.csv").substr(0, 8), "j,x1,x2\n");
    EXPECT_TRUE(fs::exists(out / "frames" / "frame_000035.csv"));
    EXPECT_EQ(line_count(out / "diagnostics.csv"), 37u);
    EXPECT_EQ(slurp(out / "diagnostics.csv").substr(0, 63),
              "t,energy,ratio,min_edge,newton_iters,stability_slack,dt_over_h\n");
    EXPECT_TRUE(fs::exists(out / "summary.txt"));
    EXPECT_TRUE(fs::exists(out / "config.txt"));
}

TEST(Run, StrideArithmeticOverPaperLength) {
    const fs::path out = scratch("stride");
    const ScenarioConfig c = resolve_config(
        {}, {{"scenario", "kfold-mikula"}, {"J", "32"}, {"frames_every", "500"}, {"out", out.string()}});
    std::ostringstream log;
    const RunOutcome r = run_scenario(c, log);
    EXPECT_EQ(r.exit_code, exit_ok) << log.str();
    EXPECT_EQ(r.steps, 3500u);
    EXPECT_EQ(r.frames_written, 8u);
}

TEST(Run, GeodesicWritesLiftedFrames) {
    const fs::path out = scratch("lifted");
    const ScenarioConfig c = resolve_config(
        {}, {{"scenario", "geodesic-centered"}, {"J", "16"}, {"T", "0.002"}, {"frames_every", "10"},
             {"out", out.string()}});
    std::ostringstream log;
    EXPECT_EQ(run_scenario(c, log).exit_code, exit_ok) << log.str();
    EXPECT_EQ(slurp(out / "frames" / "lifted_000000.csv").substr(0, 11), "j,x1,x2,x3\n");
    EXPECT_EQ(line_count(out / "frames" / "lifted_000020.csv"), 17u);
}

TEST(Run, IdenticalRunsAreByteIdenticalAndPersistedConfigReproduces) {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const KeyValues flags = {{"scenario", "kfold-mikula"}, {"J", "32"}, {"T", "0.01"}, {"out", a.string()}};
    std::ostringstream log;
    ASSERT_EQ(run_scenario(resolve_config({}, flags), log).exit_code, exit_ok);
    std::ifstream persisted(a / "config.txt");
    const ScenarioConfig again = resolve_config(parse_key_values(persisted, "config.txt"), {{"out", b.string()}});
    ASSERT_EQ(run_scenario(again, log).exit_code, exit_ok);
    EXPECT_EQ(slurp(a / "diagnostics.csv"), slurp(b / "diagnostics.csv"));
    EXPECT_EQ(slurp(a / "frames" / "frame_000100.csv"), slurp(b / "frames" / "frame_000100.csv"));
}

TEST(Run, UnforcedDiagnosticsAreMonotoneAndStable) {
    const fs::path out = scratch("monotone");
    std::ostringstream log;
    ASSERT_EQ(run_scenario(resolve_config({}, {{"scenario", "kfold-mikula"}, {"J", "64"}, {"T", "0.05"},
                                               {"out", out.string()}}),
                           log)
                  .exit_code,
              exit_ok);
    std::ifstream in(out / "diagnostics.csv");
    std::string line;
    std::getline(in, line);
    double prev = 1e300;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
        EXPECT_LE(v[1], prev);
        EXPECT_GE(v[5], -1e-9 * (1 + std::abs(v[1])));
        prev = v[1];
    }
}

TEST(Run, SolverFailureExitsTwoAndKeepsLastGoodFrame) {
    const fs::path out = scratch("failure");
    const ScenarioConfig c = resolve_config(
        {}, {{"scenario", "kfold-mikula"}, {"J", "64"}, {"dt", "1e-2"}, {"T", "0.05"}, {"newton_max_iter", "1"},
             {"out", out.string()}});
    std::ostringstream log;
    const RunOutcome r = run_scenario(c, log);
    EXPECT_EQ(r.exit_code, exit_solver_failure);
    EXPECT_TRUE(fs::exists(out / "frames" / "last_good.csv"));
    EXPECT_NE(slurp(out / "summary.txt").find("status=failed"), std::string::npos);
}

TEST(Run, UnwritableDirectoryIsConfigError) {
    const fs::path blocker = scratch("blocker");
    std::ofstream(blocker) << "file, not a directory";
    const ScenarioConfig c = resolve_config({}, {{"scenario", "isotropic-circle"}, {"out", (blocker / "x").string()}});
    std::ostringstream log;
    EXPECT_EQ(run_scenario(c, log).exit_code, exit_config_error);
}
