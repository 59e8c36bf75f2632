// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "hamdrift/estimators.hpp"
#include "hamdrift/integrators.hpp"
#include "hamdrift/problems.hpp"

namespace hamdrift {

/// Rejected experiment configuration (bad flag values, inconsistent grids).
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class Experiment { Trace, Strong, Weak, Mlmc, Step };
enum class WeakMode { Exact, MonteCarlo };

std::string_view to_string(Experiment e);
Experiment parse_experiment(std::string_view name);
std::string_view to_string(WeakMode m);
WeakMode parse_weak_mode(std::string_view name);

/// Parses "0.0625", "2^-4", "5/2^4" or "1e-3" into a positive step size.
double parse_step(std::string_view text);

struct ExperimentConfig {
    Experiment experiment = Experiment::Trace;
    ProblemId problem = ProblemId::Oscillator;
    ProblemOverrides overrides;
    std::vector<SchemeId> schemes{SchemeId::DP};
    double t_end = 1.0;
    std::optional<int> steps;
    std::vector<double> h_list;
    std::int64_t samples = 1000;
    std::uint64_t seed = 0;
    int levels = 4;
    double epsilon = 0.5;
    std::string output;  // empty: standard output
    SchemeId reference_scheme = SchemeId::STM;
    double h_ref = 0x1p-12;
    WeakMode mode = WeakMode::Exact;
    SolverConfig solver;
    Functional functional;
    int threads = 0;  // does not affect results
    int output_every = 1;
    std::optional<Vector> dw;  // step: explicit noise increment

    /// Throws ConfigError on any inconsistency; IncompatibleScheme for STM off the oscillator.
    void validate() const;
};

/// Fills t_end and h_list with the experiment's defaults where they were left unset.
ExperimentConfig with_defaults(ExperimentConfig cfg, bool t_end_set);

using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

struct Table {
    std::vector<std::pair<std::string, std::string>> metadata;  // "# key = value" lines
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    /// Index of a named column; throws Error when absent.
    std::size_t column(std::string_view name) const;
    double number(std::size_t row, std::string_view name) const;
};

/// The "# key = value" block that reproduces cfg when read back as a config file.
std::vector<std::pair<std::string, std::string>> config_metadata(const ExperimentConfig& cfg);

Table run_trace(const ExperimentConfig& cfg);
Table run_strong(const ExperimentConfig& cfg);
Table run_weak(const ExperimentConfig& cfg);
Table run_mlmc(const ExperimentConfig& cfg);
Table run_step(const ExperimentConfig& cfg);
Table run_experiment(const ExperimentConfig& cfg);

/// RFC 4180 CSV preceded by the metadata block; doubles are written in shortest round-trip form.
void write_csv(const Table& table, std::ostream& out);
std::string to_csv(const Table& table);

}  // namespace hamdrift
