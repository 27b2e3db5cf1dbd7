#include "anisoflow/scenario.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "anisoflow/geodesic.hpp"

namespace anisoflow {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
    throw ConfigError("invalid value '" + value + "' for key '" + key + "': expected " + expected);
}

double parse_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out)) bad_value(key, value, "a finite number");
    return out;
}

long long parse_int(const std::string& key, const std::string& value) {
    long long out = 0;
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) bad_value(key, value, "an integer");
    return out;
}

std::size_t parse_count(const std::string& key, const std::string& value, long long min) {
    const long long v = parse_int(key, value);
    if (v < min) bad_value(key, value, "an integer >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    bad_value(key, value, "true or false");
}

ScenarioConfig defaults_for(const std::string& name) {
    ScenarioConfig c;
    c.scenario = name;
    if (name == "kfold-mikula") {
        c.density = "kfold";
        c.T = 0.35;
        c.frames_every = 500;
    } else if (name == "kfold-forced") {
        c.density = "kfold";
        c.f0 = 1.15;
        c.T = 4.0;
        c.frames_every = 5000;
    } else if (name == "geodesic-centered" || name == "geodesic-offset") {
        c.density = "metric";
        c.T = 4.0;
        c.frames_every = 10000;
    } else if (name == "isotropic-circle") {
        c.density = "isotropic";
        c.T = 0.1;
        c.frames_every = 100;
    } else if (name == "elliptic-eoc") {
        c.density = "elliptic";
        c.delta = 0.5;
        c.T = 0.1;
        c.frames_every = 100;
    } else {
        std::string names;
        for (const std::string& n : scenario_names()) names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("unknown scenario '" + name + "' (known: " + names + ")");
    }
    return c;
}

void apply(ScenarioConfig& c, const std::string& key, const std::string& value) {
    if (key == "scenario") {
        if (value != c.scenario) throw ConfigError("scenario given twice with different values");
    } else if (key == "density") {
        if (value != "isotropic" && value != "kfold" && value != "elliptic" && value != "metric") {
            bad_value(key, value, "isotropic, kfold, elliptic or metric");
        }
        c.density = value;
    } else if (key == "k") {
        c.k = static_cast<int>(parse_count(key, value, 2));
    } else if (key == "delta") {
        c.delta = parse_double(key, value);
    } else if (key == "f0") {
        c.f0 = parse_double(key, value);
    } else if (key == "c_phi") {
        c.c_phi = parse_double(key, value);
        if (c.c_phi < 0.0) bad_value(key, value, "a number >= 0");
    } else if (key == "J") {
        c.J = parse_count(key, value, 3);
    } else if (key == "dt") {
        c.dt = parse_double(key, value);
        if (!(c.dt > 0.0)) bad_value(key, value, "a number > 0");
    } else if (key == "T") {
        c.T = parse_double(key, value);
        if (c.T < 0.0) bad_value(key, value, "a number >= 0");
    } else if (key == "frames_every") {
        c.frames_every = parse_count(key, value, 1);
    } else if (key == "out") {
        if (value.empty()) bad_value(key, value, "a directory");
        c.out = value;
    } else if (key == "solver") {
        if (value == "newton") c.scheme.solver = SolverKind::newton;
        else if (value == "picard") c.scheme.solver = SolverKind::picard;
        else bad_value(key, value, "newton or picard");
    } else if (key == "newton_tol") {
        c.scheme.newton_tol = parse_double(key, value);
        if (!(c.scheme.newton_tol > 0.0)) bad_value(key, value, "a number > 0");
    } else if (key == "newton_max_iter") {
        c.scheme.newton_max_iter = static_cast<int>(parse_count(key, value, 1));
    } else if (key == "damping") {
        c.scheme.damping = parse_bool(key, value);
    } else if (key == "jacobian") {
        if (value == "analytic") c.scheme.jacobian = JacobianKind::analytic_if_available;
        else if (value == "fd") c.scheme.jacobian = JacobianKind::fd_colored;
        else bad_value(key, value, "analytic or fd");
    } else if (key == "linear_solver") {
        if (value == "cyclic") c.scheme.linear_solver = LinearSolverKind::cyclic;
        else if (value == "dense") c.scheme.linear_solver = LinearSolverKind::dense;
        else bad_value(key, value, "cyclic or dense");
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

std::string find_scenario(const KeyValues& kv) {
    std::string out;
    for (const auto& [key, value] : kv) {
        if (key == "scenario") out = value;
    }
    return out;
}

// Frames and diagnostics writer; all files are opened up front so an
// unwritable directory is reported before any step runs.
class OutputWriter {
public:
    OutputWriter(const ScenarioConfig& config, const GraphSurface* surface) : config_(config), surface_(surface) {
        root_ = config.out;
        std::error_code ec;
        fs::create_directories(root_ / "frames", ec);
        if (ec) throw ConfigError("cannot create output directory '" + root_.string() + "': " + ec.message());
        diagnostics_ = open(root_ / "diagnostics.csv");
        std::fputs("t,energy,ratio,min_edge,newton_iters,stability_slack,dt_over_h\n", diagnostics_);
    }
    ~OutputWriter() {
        if (diagnostics_) std::fclose(diagnostics_);
    }
    OutputWriter(const OutputWriter&) = delete;
    OutputWriter& operator=(const OutputWriter&) = delete;

    void record(const StepRecord& rec, const PolygonalCurve& curve) {
        std::fprintf(diagnostics_, "%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g\n", rec.t, rec.report.energy_after,
                     rec.ratio, rec.min_edge, rec.report.iterations, rec.report.stability_slack,
                     rec.report.dt_over_h);
        last_step_ = rec.step;
        last_good_ = curve;
        if (rec.step % config_.frames_every == 0) write_frame(rec.step, curve);
    }

    // Final state of a run whose last step is off the stride.
    void finish() {
        if (last_good_ && last_step_ != last_frame_) write_frame(last_step_, *last_good_);
        std::fflush(diagnostics_);
    }

    void write_last_good() {
        std::fflush(diagnostics_);
        if (last_good_) write_curve(root_ / "frames" / "last_good.csv", *last_good_, false);
    }

    std::size_t frames() const { return frames_; }
    std::size_t last_step() const { return last_step_; }
    const fs::path& root() const { return root_; }

private:
    static std::FILE* open(const fs::path& path) {
        std::FILE* f = std::fopen(path.c_str(), "w");
        if (!f) throw ConfigError("cannot write '" + path.string() + "'");
        return f;
    }

    void write_frame(std::size_t step, const PolygonalCurve& curve) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%06zu.csv", step);
        write_curve(root_ / "frames" / name, curve, false);
        if (surface_) {
            std::snprintf(name, sizeof name, "lifted_%06zu.csv", step);
            write_curve(root_ / "frames" / name, curve, true);
        }
        last_frame_ = step;
        ++frames_;
    }

    void write_curve(const fs::path& path, const PolygonalCurve& curve, bool lifted) const {
        std::FILE* f = open(path);
        if (lifted) {
            std::fputs("j,x1,x2,x3\n", f);
            const auto points = lift(curve, *surface_);
            for (std::size_t j = 0; j < points.size(); ++j) {
                std::fprintf(f, "%zu,%.17g,%.17g,%.17g\n", j, points[j].x(), points[j].y(), points[j].z());
            }
        } else {
            std::fputs("j,x1,x2\n", f);
            for (std::size_t j = 0; j < curve.size(); ++j) {
                std::fprintf(f, "%zu,%.17g,%.17g\n", j, curve.nodes[j].x(), curve.nodes[j].y());
            }
        }
        std::fclose(f);
    }

    const ScenarioConfig& config_;
    const GraphSurface* surface_;
    fs::path root_;
    std::FILE* diagnostics_ = nullptr;
    std::optional<PolygonalCurve> last_good_;
    std::size_t last_step_ = 0;
    std::size_t last_frame_ = static_cast<std::size_t>(-1);
    std::size_t frames_ = 0;
};

void write_text(const fs::path& path, const std::string& text) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    std::fputs(text.c_str(), f);
    std::fclose(f);
}

const char* stop_name(StopReason s) { return s == StopReason::completed ? "completed" : "extinction"; }

}  // namespace

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {"kfold-mikula",    "kfold-forced",     "geodesic-centered",
                                                   "geodesic-offset", "isotropic-circle", "elliptic-eoc"};
    return names;
}

KeyValues parse_key_values(std::istream& in, const std::string& source) {
    KeyValues out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(number) + ": expected key=value, got '" + line + "'");
        }
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(number) + ": empty key");
        out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
    }
    return out;
}

ScenarioConfig resolve_config(const KeyValues& file, const KeyValues& flags) {
    std::string name = find_scenario(flags);
    if (name.empty()) name = find_scenario(file);
    if (name.empty()) throw ConfigError("no scenario given");
    ScenarioConfig c = defaults_for(name);
    for (const KeyValues* layer : {&file, &flags}) {
        for (const auto& [key, value] : *layer) {
            if (key == "scenario") continue;
            apply(c, key, value);
        }
    }
    c.scheme.dt = c.dt;
    c.scheme.T = c.T;
    return c;
}

std::string config_text(const ScenarioConfig& c) {
    std::ostringstream s;
    s << "scenario=" << c.scenario << "\n"
      << "density=" << c.density << "\n"
      << "k=" << c.k << "\n"
      << "delta=" << fmt_double(c.delta) << "\n"
      << "f0=" << fmt_double(c.f0) << "\n"
      << "c_phi=" << fmt_double(c.c_phi) << "\n"
      << "J=" << c.J << "\n"
      << "dt=" << fmt_double(c.dt) << "\n"
      << "T=" << fmt_double(c.T) << "\n"
      << "frames_every=" << c.frames_every << "\n"
      << "out=" << c.out << "\n"
      << "solver=" << (c.scheme.solver == SolverKind::newton ? "newton" : "picard") << "\n"
      << "newton_tol=" << fmt_double(c.scheme.newton_tol) << "\n"
      << "newton_max_iter=" << c.scheme.newton_max_iter << "\n"
      << "damping=" << (c.scheme.damping ? "true" : "false") << "\n"
      << "jacobian=" << (c.scheme.jacobian == JacobianKind::analytic_if_available ? "analytic" : "fd") << "\n"
      << "linear_solver=" << (c.scheme.linear_solver == LinearSolverKind::cyclic ? "cyclic" : "dense") << "\n";
    return s.str();
}

ScenarioSetup build_scenario(const ScenarioConfig& c) {
    std::shared_ptr<const GraphSurface> surface;
    AnisotropyDensity density = AnisotropyDensity::isotropic();
    if (c.density == "kfold") {
        density = AnisotropyDensity::kfold(c.k, c.delta);
    } else if (c.density == "elliptic") {
        density = AnisotropyDensity::elliptic(c.delta);
    } else if (c.density == "metric") {
        surface = std::make_shared<const MountainSurface>();
        density = AnisotropyDensity::metric_induced(surface);
    }
    DensityBundle bundle = c.density == "metric" ? DensityBundle(density, GraphShiftSplit{c.c_phi})
                                                 : DensityBundle(density);

    std::function<Vec2(double)> initial;
    if (c.scenario == "kfold-mikula" || c.scenario == "kfold-forced") {
        initial = mikula_curve;
    } else if (c.scenario == "geodesic-centered") {
        initial = circle(MountainSurface().centroid(), 2.0);
    } else if (c.scenario == "geodesic-offset") {
        initial = circle(Vec2(0.0, 0.5), 2.0);
    } else {
        initial = circle(Vec2::Zero(), 1.0);
    }

    SchemeParams params = c.scheme;
    params.dt = c.dt;
    params.T = c.T;
    params.validate();
    return {sample_initial(initial, PeriodicGrid(c.J)), std::move(bundle),
            c.f0 != 0.0 ? Forcing::constant(c.f0) : Forcing::none(), params, std::move(surface)};
}

RunOutcome run_scenario(const ScenarioConfig& config, std::ostream& log) {
    RunOutcome outcome;
    std::optional<ScenarioSetup> setup;
    std::unique_ptr<OutputWriter> writer;
    try {
        setup.emplace(build_scenario(config));
        writer = std::make_unique<OutputWriter>(config, setup->surface.get());
        write_text(writer->root() / "config.txt", config_text(config));
    } catch (const ConfigError& e) {
        outcome.exit_code = exit_config_error;
        outcome.message = e.what();
        log << "config error: " << e.what() << "\n";
        return outcome;
    }

    const StepObserver observe = [&](const StepRecord& rec, const PolygonalCurve& curve) {
        writer->record(rec, curve);
    };
    std::ostringstream summary;
    summary << "scenario=" << config.scenario << "\n";
    try {
        const TrajectorySummary result =
            run(setup->initial, setup->bundle, setup->forcing, setup->params, {&observe, 1});
        writer->finish();
        outcome.steps = result.steps;
        outcome.final_time = result.final_time;
        outcome.stop = result.stop;
        const StepRecord& last = result.records.back();
        summary << "status=" << stop_name(result.stop) << "\n"
                << "steps=" << result.steps << "\n"
                << "final_time=" << fmt_double(result.final_time) << "\n"
                << "energy_initial=" << fmt_double(result.records.front().report.energy_after) << "\n"
                << "energy_final=" << fmt_double(last.report.energy_after) << "\n"
                << "ratio_initial=" << fmt_double(result.records.front().ratio) << "\n"
                << "ratio_final=" << fmt_double(last.ratio) << "\n"
                << "length_final=" << fmt_double(last.length) << "\n"
                << "stability_violations=" << result.stability_violations << "\n"
                << "slow_steps=" << result.slow_steps << "\n";
        outcome.message = std::string(stop_name(result.stop)) + " after " + std::to_string(result.steps) + " steps";
    } catch (const ConfigError& e) {
        outcome.exit_code = exit_config_error;
        outcome.message = e.what();
        log << "config error: " << e.what() << "\n";
        return outcome;
    } catch (const Error& e) {
        writer->write_last_good();
        outcome.exit_code = exit_solver_failure;
        outcome.steps = writer->last_step();
        outcome.message = e.what();
        if (const auto* nc = dynamic_cast<const NonconvergenceError*>(&e)) {
            outcome.message = "step " + std::to_string(nc->step()) + ": " + e.what();
        }
        summary << "status=failed\n"
                << "last_good_step=" << writer->last_step() << "\n"
                << "error=" << outcome.message << "\n";
        log << "solver failure: " << outcome.message << "\n";
    }
    outcome.frames_written = writer->frames();
    summary << "frames=" << writer->frames() << "\n";
    try {
        write_text(writer->root() / "summary.txt", summary.str());
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        if (outcome.exit_code == exit_ok) outcome.exit_code = exit_config_error;
    }
    return outcome;
}

}  // namespace anisoflow
