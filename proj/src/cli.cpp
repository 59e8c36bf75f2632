// SPDX-License-Identifier: Apache-2.0
#include "hamdrift/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hamdrift/experiments.hpp"

namespace hamdrift {

namespace {

// Key-value config reader that also accepts the metadata block of our CSV output.
class MetadataConfig : public CLI::ConfigBase {
public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::vector<std::string> lines;
        for (std::string line; std::getline(input, line);) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(std::move(line));
        }
        const bool csv = !lines.empty() && lines.front().rfind("# version = ", 0) == 0;
        std::ostringstream kept;
        for (std::string line : lines) {
            if (csv) {
                if (line.rfind("# ", 0) != 0) continue;
                line.erase(0, 2);
            }
            const std::string key = line.substr(0, line.find('='));
            const auto trimmed = [](std::string s) {
                s.erase(0, s.find_first_not_of(" \t"));
                s.erase(s.find_last_not_of(" \t") + 1);
                return s;
            };
            const std::string k = trimmed(key);
            if (k == "version") continue;
            if (k == "experiment" && line.find('=') != std::string::npos) {
                experiment = trimmed(line.substr(line.find('=') + 1));
                continue;
            }
            kept << line << '\n';
        }
        std::istringstream rest(kept.str());
        return CLI::ConfigBase::from_config(rest);
    }

    mutable std::string experiment;
};

struct RawFlags {
    std::string experiment;
    std::string problem = "oscillator";
    std::vector<std::string> schemes{"DP"};
    std::vector<std::string> h;
    double t_end = 1.0;
    int steps = 0;
    std::int64_t samples = 1000;
    std::uint64_t seed = 0;
    int levels = 4;
    double epsilon = 0.5;
    std::string output;
    std::string reference_scheme = "STM";
    std::string h_ref = "2^-12";
    std::string mode = "exact";
    double sigma = 0.0, alpha = 0.0, scale = 1.0;
    std::vector<double> q0, p0, dw;
    std::string solver = "fixed-point";
    double tol = 1e-12;
    int max_iter = 100;
    std::string functional = "energy";
    int threads = 0;
    int output_every = 1;
};

ExperimentConfig to_config(const RawFlags& f, const CLI::App& app) {
    const auto given = [&](const char* name) { return app.count(name) > 0; };
    const auto to_vector = [](const std::vector<double>& v) {
        return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    };

    ExperimentConfig cfg;
    cfg.experiment = parse_experiment(f.experiment);
    try {
        cfg.problem = parse_problem(f.problem);
        cfg.schemes.clear();
        for (const auto& s : f.schemes) cfg.schemes.push_back(parse_scheme(s));
        cfg.reference_scheme = parse_scheme(f.reference_scheme);
        cfg.solver.method = parse_solver_method(f.solver);
        cfg.functional = Functional::parse(f.functional);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    for (const auto& h : f.h) cfg.h_list.push_back(parse_step(h));
    cfg.h_ref = parse_step(f.h_ref);
    cfg.mode = parse_weak_mode(f.mode);
    cfg.t_end = f.t_end;
    if (given("--steps")) cfg.steps = f.steps;
    cfg.samples = f.samples;
    cfg.seed = f.seed;
    cfg.levels = f.levels;
    cfg.epsilon = f.epsilon;
    cfg.output = f.output;
    cfg.solver.tol = f.tol;
    cfg.solver.max_iter = f.max_iter;
    cfg.threads = f.threads;
    cfg.output_every = f.output_every;
    if (given("--sigma")) cfg.overrides.sigma = f.sigma;
    if (given("--alpha")) cfg.overrides.alpha = f.alpha;
    if (given("--scale")) cfg.overrides.scale = f.scale;
    if (given("--q0")) cfg.overrides.q0 = to_vector(f.q0);
    if (given("--p0")) cfg.overrides.p0 = to_vector(f.p0);
    if (given("--dw")) cfg.dw = to_vector(f.dw);
    return with_defaults(std::move(cfg), given("--t-end"));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Drift-preserving integration of stochastic Hamiltonian systems", "hamdrift"};
    app.set_help_flag("--help", "Print this help message and exit");
    auto config_reader = std::make_shared<MetadataConfig>();
    app.config_formatter(config_reader);
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.set_config("--config", "", "Read flags from a key = value file or a previous CSV output");

    RawFlags f;
    app.add_option("experiment", f.experiment, "trace | strong | weak | mlmc | step");
    app.add_option("--problem", f.problem, "oscillator | pendulum | double-well | henon-heiles");
    app.add_option("--scheme", f.schemes, "Comma-separated list of DP, EM, BEM, STM, SYMP, SPLIT")
        ->delimiter(',');
    app.add_option("--h", f.h, "Step size(s), e.g. 0.0625, 2^-4, 5/2^4")->delimiter(',');
    app.add_option("--t-end", f.t_end, "Final time T");
    app.add_option("--steps", f.steps, "Number of steps (trace; alternative to --h)");
    app.add_option("--samples", f.samples, "Monte Carlo samples (mlmc: pilot size)");
    app.add_option("--seed", f.seed, "Random seed");
    app.add_option("--levels", f.levels, "MLMC top level L");
    app.add_option("--epsilon", f.epsilon, "MLMC schedule exponent");
    app.add_option("--output", f.output, "CSV output path (default: standard output)");
    app.add_option("--reference-scheme", f.reference_scheme, "Reference scheme for strong/weak mc");
    app.add_option("--h-ref", f.h_ref, "Reference step size");
    app.add_option("--mode", f.mode, "weak: exact | mc");
    app.add_option("--sigma", f.sigma, "Noise level on every diagonal entry of Sigma");
    app.add_option("--alpha", f.alpha, "Henon-Heiles coupling");
    app.add_option("--scale", f.scale, "Pendulum nonlinearity factor");
    app.add_option("--q0", f.q0, "Initial position")->delimiter(',');
    app.add_option("--p0", f.p0, "Initial momentum")->delimiter(',');
    app.add_option("--dw", f.dw, "step: explicit Wiener increment")->delimiter(',');
    app.add_option("--solver", f.solver, "fixed-point | newton");
    app.add_option("--tol", f.tol, "Implicit solver tolerance");
    app.add_option("--max-iter", f.max_iter, "Implicit solver iteration limit");
    app.add_option("--functional", f.functional, "energy | q<j> | p<j> | q<j>^2 | p<j>^2");
    app.add_option("--threads", f.threads, "Worker threads (0: all cores)");
    app.add_option("--output-every", f.output_every, "trace: row stride in steps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalidConfig;
    }
    if (f.experiment.empty()) f.experiment = config_reader->experiment;
    if (f.experiment.empty()) {
        err << "hamdrift: missing experiment (trace, strong, weak, mlmc or step)\n";
        return kExitInvalidConfig;
    }

    try {
        const ExperimentConfig cfg = to_config(f, app);
        const Table table = run_experiment(cfg);
        if (cfg.output.empty()) {
            write_csv(table, out);
        } else {
            std::ofstream file(cfg.output, std::ios::binary);
            if (!file) throw Error(fmt::format("cannot open '{}' for writing", cfg.output));
            write_csv(table, file);
            if (!file) throw Error(fmt::format("failed writing '{}'", cfg.output));
        }
        return kExitOk;
    } catch (const SolverDiverged& e) {
        err << "hamdrift: solver diverged: " << e.what() << '\n';
        return kExitSolverDiverged;
    } catch (const ConfigError& e) {
        err << "hamdrift: invalid configuration: " << e.what() << '\n';
        return kExitInvalidConfig;
    } catch (const IncompatibleScheme& e) {
        err << "hamdrift: invalid configuration: " << e.what() << '\n';
        return kExitInvalidConfig;
    } catch (const DimensionMismatch& e) {
        err << "hamdrift: invalid configuration: " << e.what() << '\n';
        return kExitInvalidConfig;
    } catch (const std::exception& e) {
        err << "hamdrift: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace hamdrift
