// Command-line front end: run scenarios, property checks and EOC tables.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "anisoflow/scenario.hpp"
#include "anisoflow/verify.hpp"

using namespace anisoflow;

namespace {

struct RunArgs {
    std::string scenario;
    std::string config;
    std::vector<std::string> set;
    std::string J, dt, T, frames_every, out;
};

int do_run(const RunArgs& args) {
    try {
        KeyValues file;
        if (!args.config.empty()) {
            std::ifstream in(args.config);
            if (!in) throw ConfigError("cannot read config file '" + args.config + "'");
            file = parse_key_values(in, args.config);
        }
        KeyValues flags;
        for (const std::string& kv : args.set) {
            std::istringstream line(kv);
            const KeyValues parsed = parse_key_values(line, "--set");
            flags.insert(flags.end(), parsed.begin(), parsed.end());
        }
        const auto flag = [&](const char* key, const std::string& value) {
            if (!value.empty()) flags.emplace_back(key, value);
        };
        flag("scenario", args.scenario);
        flag("J", args.J);
        flag("dt", args.dt);
        flag("T", args.T);
        flag("frames_every", args.frames_every);
        flag("out", args.out);
        const ScenarioConfig config = resolve_config(file, flags);
        const RunOutcome outcome = run_scenario(config, std::cerr);
        std::printf("%s: %s (%zu frames in %s)\n", config.scenario.c_str(), outcome.message.c_str(),
                    outcome.frames_written, config.out.c_str());
        return outcome.exit_code;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config_error;
    }
}

int do_verify(std::uint64_t seed, std::size_t samples) {
    bool ok = true;
    for (const PropertyCheck& c : run_property_suite(seed, samples)) {
        std::printf("%s  %-62s max_err=%.3e tol=%.0e\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.max_error,
                    c.tolerance);
        ok = ok && c.passed;
    }
    return ok ? exit_ok : exit_solver_failure;
}

struct EocArgs {
    std::string density = "elliptic";
    double delta = 0.5;
    int k = 6;
    std::vector<std::size_t> J = {32, 64, 128};
    double T = 0.1;
    double dt_coefficient = 1.0;
    std::size_t reference = 1024;
};

void print_record(const char* name, const EocRecord& r) {
    std::printf("%s\n%8s %14s %8s\n", name, "J", "error", "eoc");
    const std::vector<double> rates = r.eoc();
    for (std::size_t i = 0; i < r.elements().size(); ++i) {
        if (i == 0) std::printf("%8zu %14.6e %8s\n", r.elements()[i], r.errors()[i], "-");
        else std::printf("%8zu %14.6e %8.3f\n", r.elements()[i], r.errors()[i], rates[i - 1]);
    }
}

int do_eoc(const EocArgs& args) {
    try {
        AnisotropyDensity density = AnisotropyDensity::isotropic();
        if (args.density == "elliptic") density = AnisotropyDensity::elliptic(args.delta);
        else if (args.density == "kfold") density = AnisotropyDensity::kfold(args.k, args.delta);
        else if (args.density != "isotropic") throw ConfigError("eoc supports isotropic, elliptic and kfold");
        EocScenario scenario{DensityBundle(density), circle(Vec2::Zero(), 1.0), args.T, args.dt_coefficient, {},
                             args.reference};
        if (args.density == "isotropic") {
            // Unit circle: radius sqrt(1 - 2t), parameterisation unchanged.
            scenario.exact = ExactSolution{
                [](double rho, double t) { return exact_circle_radius(t, 1.0) * circle(Vec2::Zero(), 1.0)(rho); },
                [](double rho, double t) {
                    const double th = 2.0 * std::numbers::pi * rho;
                    return Vec2(2.0 * std::numbers::pi * exact_circle_radius(t, 1.0) * Vec2(-std::sin(th), std::cos(th)));
                }};
        }
        const EocResult result = eoc_study(scenario, args.J, SchemeParams{});
        print_record("H1-type error max_m (|x - x_h|_h^2 + |x_rho - x_h,rho|_h^2)^(1/2)", result.h1);
        print_record("L2 part", result.l2);
        print_record("derivative part", result.semi);
        return exit_ok;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config_error;
    } catch (const Error& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return exit_solver_failure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parametric finite element solver for anisotropic curve shortening flow"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Run a scenario and write frames and diagnostics");
    run->add_option("--scenario", run_args.scenario, "Scenario name");
    run->add_option("--config", run_args.config, "key=value config file");
    run->add_option("--J", run_args.J, "Number of elements");
    run->add_option("--dt", run_args.dt, "Time step");
    run->add_option("--T", run_args.T, "Final time");
    run->add_option("--frames-every", run_args.frames_every, "Step stride between frame files");
    run->add_option("--out", run_args.out, "Output directory");
    run->add_option("--set", run_args.set, "Extra key=value overrides (repeatable)");

    std::uint64_t seed = 7;
    std::size_t samples = 1000;
    CLI::App* verify = app.add_subcommand("verify", "Run the randomised calculus property checks");
    verify->add_option("--seed", seed, "Random seed");
    verify->add_option("--samples", samples, "Samples per check");

    EocArgs eoc_args;
    CLI::App* eoc = app.add_subcommand("eoc", "Experimental orders of convergence on the unit circle");
    eoc->add_option("--density", eoc_args.density, "isotropic, elliptic or kfold");
    eoc->add_option("--delta", eoc_args.delta, "Anisotropy strength");
    eoc->add_option("--k", eoc_args.k, "k-fold symmetry order");
    eoc->add_option("--J", eoc_args.J, "Element counts, each double the previous")->delimiter(',');
    eoc->add_option("--T", eoc_args.T, "Final time");
    eoc->add_option("--dt-coefficient", eoc_args.dt_coefficient, "dt = coefficient * h^2");
    eoc->add_option("--reference-J", eoc_args.reference, "Reference mesh for densities without exact solution");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config_error;
    }

    if (run->parsed()) return do_run(run_args);
    if (verify->parsed()) return do_verify(seed, samples);
    return do_eoc(eoc_args);
}
