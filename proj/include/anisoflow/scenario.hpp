#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "anisoflow/curve.hpp"
#include "anisoflow/energy_density.hpp"
#include "anisoflow/scheme.hpp"
#include "anisoflow/surface.hpp"

namespace anisoflow {

/// Ordered key=value pairs as read from a file or the command line.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Fully resolved run configuration.
struct ScenarioConfig {
    std::string scenario;
    /// isotropic | kfold | elliptic | metric
    std::string density;
    int k = 6;
    double delta = 0.028;
    /// Constant normal forcing; zero disables it.
    double f0 = 0.0;
    double c_phi = 0.0;
    std::size_t J = 256;
    double dt = 1e-4;
    double T = 0.0;
    std::size_t frames_every = 500;
    std::string out = "out";
    SchemeParams scheme;
};

/// Names accepted by `scenario=`.
const std::vector<std::string>& scenario_names();

/// Parses line-based `key=value` text; `#` starts a comment, blank lines are
/// skipped. Throws ConfigError naming the source and line on malformed input.
KeyValues parse_key_values(std::istream& in, const std::string& source);

/// Defaults for the scenario, then `file`, then `flags`. The scenario name
/// is taken from flags first, then the file. Throws ConfigError on unknown
/// keys, unparseable values or a missing/unknown scenario.
ScenarioConfig resolve_config(const KeyValues& file, const KeyValues& flags);

/// Config as key=value text that resolves back to the same config.
std::string config_text(const ScenarioConfig& config);

/// Everything needed to run a config.
struct ScenarioSetup {
    PolygonalCurve initial;
    DensityBundle bundle;
    Forcing forcing;
    SchemeParams params;
    /// Set when frames are also lifted onto a graph surface.
    std::shared_ptr<const GraphSurface> surface;
};

ScenarioSetup build_scenario(const ScenarioConfig& config);

enum ExitCode : int { exit_ok = 0, exit_config_error = 1, exit_solver_failure = 2 };

struct RunOutcome {
    int exit_code = exit_ok;
    std::string message;
    std::size_t steps = 0;
    double final_time = 0.0;
    StopReason stop = StopReason::completed;
    std::size_t frames_written = 0;
};

/// Runs the config and writes into config.out:
///   frames/frame_NNNNNN.csv    "j,x1,x2" every frames_every steps, t = 0 and the last step included
///   frames/lifted_NNNNNN.csv   "j,x1,x2,x3" for graph-surface scenarios
///   diagnostics.csv            one row per step, t = 0 included
///   summary.txt, config.txt
/// On solver failure the last accepted curve goes to frames/last_good.csv.
/// Never throws; failures are reported through the exit code and message.
RunOutcome run_scenario(const ScenarioConfig& config, std::ostream& log);

}  // namespace anisoflow
