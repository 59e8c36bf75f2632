// SPDX-License-Identifier: Apache-2.0
#include "hamdrift/estimators.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "hamdrift/detail/parallel.hpp"
#include "hamdrift/detail/sample_context.hpp"

namespace hamdrift {

double Functional::operator()(const HamiltonianProblem& problem, const PhaseState& state) const {
    if (kind != Kind::Energy && (index < 0 || index >= state.dim())) {
        throw DimensionMismatch(fmt::format("functional {} needs coordinate {} of a {}-dimensional "
                                            "state",
                                            name(), index + 1, state.dim()));
    }
    switch (kind) {
        case Kind::Energy: return hamdrift::energy(problem, state);
        case Kind::Q: return state.q()(index);
        case Kind::P: return state.p()(index);
        case Kind::Q2: return state.q()(index) * state.q()(index);
        case Kind::P2: return state.p()(index) * state.p()(index);
    }
    return 0.0;
}

std::string Functional::name() const {
    switch (kind) {
        case Kind::Energy: return "energy";
        case Kind::Q: return fmt::format("q{}", index + 1);
        case Kind::P: return fmt::format("p{}", index + 1);
        case Kind::Q2: return fmt::format("q{}^2", index + 1);
        case Kind::P2: return fmt::format("p{}^2", index + 1);
    }
    return "?";
}

Functional Functional::parse(std::string_view text) {
    if (text == "energy" || text == "H") return energy();
    const auto bad = [&] {
        return Error(fmt::format(
            "unknown functional '{}' (expected energy, q<j>, p<j>, q<j>^2 or p<j>^2)", text));
    };
    if (text.empty() || (text.front() != 'q' && text.front() != 'p')) throw bad();
    const bool is_q = text.front() == 'q';
    std::string_view rest = text.substr(1);
    bool squared = false;
    if (rest.size() >= 2 && rest.substr(rest.size() - 2) == "^2") {
        squared = true;
        rest.remove_suffix(2);
    }
    int coord = 1;
    if (!rest.empty()) {
        const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), coord);
        if (ec != std::errc{} || ptr != rest.data() + rest.size() || coord < 1) throw bad();
    }
    const Kind kind = is_q ? (squared ? Kind::Q2 : Kind::Q) : (squared ? Kind::P2 : Kind::P);
    return {kind, coord - 1};
}

SampleMoments sample_moments(const std::vector<double>& values) {
    SampleMoments m;
    if (values.empty()) return m;
    double sum = 0.0;
    for (double v : values) sum += v;
    m.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        // corrected two-pass: exact zero for identical samples
        double ss = 0.0, s = 0.0;
        for (double v : values) {
            ss += (v - m.mean) * (v - m.mean);
            s += v - m.mean;
        }
        const auto n = static_cast<double>(values.size());
        m.variance = std::max(0.0, (ss - s * s / n) / (n - 1.0));
    }
    return m;
}

namespace {

void check_samples(std::int64_t samples) {
    if (samples < 1) throw Error(fmt::format("sample count must be >= 1, got {}", samples));
}

}  // namespace

EstimatorReport mc_estimate(const HamiltonianProblem& problem, SchemeId scheme,
                            const TimeGrid& grid, const McConfig& cfg,
                            const SolverConfig& solver) {
    check_samples(cfg.samples);
    check_compatible(scheme, problem);
    const bool area = needs_area(scheme);
    std::vector<double> values(cfg.samples);
    detail::parallel_for(cfg.samples, cfg.threads, [&](std::int64_t i) {
        values[i] = detail::with_sample_context(i, [&] {
            const BrownianPath path =
                sample_path(cfg.seed, static_cast<std::uint64_t>(i), grid, problem.dim_w, area);
            const Trajectory traj =
                integrate(problem, scheme, grid, path, solver, {.final_only = true});
            return cfg.functional(problem, traj.final_state());
        });
    });

    const SampleMoments mom = sample_moments(values);
    EstimatorReport report;
    report.estimate = mom.mean;
    report.degenerate = cfg.samples == 1;
    report.std_error = std::sqrt(mom.variance / static_cast<double>(cfg.samples));
    report.total_work = static_cast<double>(cfg.samples) * grid.n_steps();
    report.per_level.push_back({0, cfg.samples, mom.mean, mom.variance, report.total_work});
    return report;
}

TimeSeriesReport mc_time_series(const HamiltonianProblem& problem, SchemeId scheme,
                                const TimeGrid& grid, const McConfig& cfg,
                                const SolverConfig& solver, int stride) {
    check_samples(cfg.samples);
    check_compatible(scheme, problem);
    if (stride < 1) throw Error("mc_time_series: stride must be >= 1");

    TimeSeriesReport report;
    for (int n = 0; n <= grid.n_steps(); n += stride) report.step_index.push_back(n);
    if (report.step_index.back() != grid.n_steps()) report.step_index.push_back(grid.n_steps());
    const auto n_out = report.step_index.size();

    const bool area = needs_area(scheme);
    // values[i * n_out + k]: functional of sample i at output time k
    std::vector<double> values(static_cast<std::size_t>(cfg.samples) * n_out);
    detail::parallel_for(cfg.samples, cfg.threads, [&](std::int64_t i) {
        detail::with_sample_context(i, [&] {
            const BrownianPath path =
                sample_path(cfg.seed, static_cast<std::uint64_t>(i), grid, problem.dim_w, area);
            const Trajectory traj = integrate(problem, scheme, grid, path, solver);
            for (std::size_t k = 0; k < n_out; ++k) {
                const int n = report.step_index[k];
                const PhaseState& s = n == 0 ? traj.initial : traj.steps[n - 1].state;
                values[static_cast<std::size_t>(i) * n_out + k] = cfg.functional(problem, s);
            }
            return 0;
        });
    });

    std::vector<double> column(cfg.samples);
    for (std::size_t k = 0; k < n_out; ++k) {
        for (std::int64_t i = 0; i < cfg.samples; ++i) {
            column[i] = values[static_cast<std::size_t>(i) * n_out + k];
        }
        const SampleMoments mom = sample_moments(column);
        report.times.push_back(grid.t(report.step_index[k]));
        report.mean.push_back(mom.mean);
        report.std_error.push_back(std::sqrt(mom.variance / static_cast<double>(cfg.samples)));
    }
    report.samples = cfg.samples;
    report.total_work = static_cast<double>(cfg.samples) * grid.n_steps();
    return report;
}

std::vector<std::int64_t> mlmc_sample_sizes(int levels, double epsilon) {
    if (levels < 1) throw Error(fmt::format("MLMC needs at least one level, got L = {}", levels));
    if (!(epsilon > 0.0)) throw Error(fmt::format("MLMC epsilon must be positive, got {}", epsilon));
    const auto ceil_exact = [](double v) {
        // keep integral values integral despite pow() round-off
        const double r = std::round(v);
        return static_cast<std::int64_t>(std::abs(v - r) <= 1e-9 * std::max(1.0, r) ? r
                                                                                   : std::ceil(v));
    };
    std::vector<std::int64_t> sizes;
    sizes.push_back(ceil_exact(std::ldexp(1.0, 2 * levels)));
    for (int l = 1; l <= levels; ++l) {
        const double base = std::ldexp(1.0, 2 * levels - l);
        sizes.push_back(ceil_exact(base * std::pow(static_cast<double>(l), 2.0 * (1.0 + epsilon))));
    }
    return sizes;
}

double mlmc_level_work(int level, std::int64_t samples) {
    const double m = static_cast<double>(samples);
    if (level == 0) return m;
    return m * (std::ldexp(1.0, level) + std::ldexp(1.0, level - 1));
}

CoupledSample mlmc_coupled_sample(const HamiltonianProblem& problem, SchemeId scheme,
                                  const MlmcConfig& cfg, int level, std::uint64_t index,
                                  const SolverConfig& solver) {
    const bool area = needs_area(scheme);
    const TimeGrid fine_grid(cfg.t_end, 1 << level);
    const BrownianPath fine =
        sample_path(cfg.seed, level_stream(level, index), fine_grid, problem.dim_w, area);
    const IntegrateOptions opts{.final_only = true};
    CoupledSample out;
    out.fine = cfg.functional(problem, integrate(problem, scheme, fine_grid, fine, solver, opts)
                                           .final_state());
    if (level > 0) {
        const BrownianPath coarse = coarsen(fine);
        const TimeGrid coarse_grid(cfg.t_end, 1 << (level - 1));
        out.coarse = cfg.functional(
            problem, integrate(problem, scheme, coarse_grid, coarse, solver, opts).final_state());
    }
    return out;
}

EstimatorReport mlmc_estimate(const HamiltonianProblem& problem, SchemeId scheme,
                              const MlmcConfig& cfg, const SolverConfig& solver) {
    check_compatible(scheme, problem);
    if (!(cfg.t_end > 0.0)) throw Error("MLMC needs a positive final time");
    if (cfg.levels > 30) throw Error("MLMC levels above 30 are not supported");
    const std::vector<std::int64_t> sizes = mlmc_sample_sizes(cfg.levels, cfg.epsilon);

    EstimatorReport report;
    double variance_of_estimate = 0.0;
    for (int level = 0; level <= cfg.levels; ++level) {
        const std::int64_t m = sizes[level];
        std::vector<double> values(m);
        detail::parallel_for(m, cfg.threads, [&](std::int64_t i) {
            values[i] = detail::with_sample_context(i, [&] {
                const CoupledSample s = mlmc_coupled_sample(
                    problem, scheme, cfg, level, static_cast<std::uint64_t>(i), solver);
                return level == 0 ? s.fine : s.fine - s.coarse;
            });
        });
        const SampleMoments mom = sample_moments(values);
        const double work = mlmc_level_work(level, m);
        report.per_level.push_back({level, m, mom.mean, mom.variance, work});
        report.estimate += mom.mean;
        report.total_work += work;
        variance_of_estimate += mom.variance / static_cast<double>(m);
        if (m == 1) report.degenerate = true;
    }
    report.std_error = std::sqrt(variance_of_estimate);
    return report;
}

}  // namespace hamdrift
