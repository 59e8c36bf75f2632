// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hamdrift/core.hpp"
#include "hamdrift/integrators.hpp"

namespace hamdrift {

/// Scalar quantity of interest evaluated on a phase state.
struct Functional {
    enum class Kind { Energy, Q, P, Q2, P2 };

    Kind kind = Kind::Energy;
    int index = 0;  // zero-based coordinate for the component kinds

    double operator()(const HamiltonianProblem& problem, const PhaseState& state) const;
    /// "energy", "q1", "p2", "q1^2", ... (coordinates are one-based in names)
    std::string name() const;
    static Functional parse(std::string_view text);

    static Functional energy() { return {}; }
    static Functional q(int i) { return {Kind::Q, i}; }
    static Functional p(int i) { return {Kind::P, i}; }
    static Functional q2(int i) { return {Kind::Q2, i}; }
    static Functional p2(int i) { return {Kind::P2, i}; }
};

struct McConfig {
    std::int64_t samples = 1000;
    std::uint64_t seed = 0;
    Functional functional;
    int threads = 0;  // 0: hardware concurrency
};

struct LevelSummary {
    int level = 0;
    std::int64_t samples = 0;
    double mean = 0.0;
    double variance = 0.0;
    double work = 0.0;
};

struct EstimatorReport {
    double estimate = 0.0;
    double std_error = 0.0;
    // set when some level has a single sample, whose variance is reported as 0
    bool degenerate = false;
    std::vector<LevelSummary> per_level;
    double total_work = 0.0;  // one-step-map invocations
};

/// Mean and unbiased variance with fixed-order summation.
struct SampleMoments {
    double mean = 0.0;
    double variance = 0.0;
};
SampleMoments sample_moments(const std::vector<double>& values);

EstimatorReport mc_estimate(const HamiltonianProblem& problem, SchemeId scheme,
                            const TimeGrid& grid, const McConfig& cfg,
                            const SolverConfig& solver = {});

/// Per-time Monte Carlo mean and standard error of the functional along the
/// trajectory, at t_0, t_stride, t_2stride, ... (t_N is always included).
struct TimeSeriesReport {
    std::vector<int> step_index;
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> std_error;
    std::int64_t samples = 0;
    double total_work = 0.0;
};

TimeSeriesReport mc_time_series(const HamiltonianProblem& problem, SchemeId scheme,
                                const TimeGrid& grid, const McConfig& cfg,
                                const SolverConfig& solver = {}, int stride = 1);

/// M_0 = ceil(2^{2L}), M_l = ceil(2^{2(L - l/2)} l^{2(1+eps)}) for l = 1..L.
std::vector<std::int64_t> mlmc_sample_sizes(int levels, double epsilon);

struct MlmcConfig {
    int levels = 4;
    double epsilon = 0.5;
    std::uint64_t seed = 0;
    Functional functional;
    double t_end = 1.0;
    int threads = 0;
};

/// Work of a level: M_0 steps at level 0, M_l (2^l + 2^{l-1}) above.
double mlmc_level_work(int level, std::int64_t samples);

/**
 * Telescoping estimator over the dyadic grids h_l = T 2^{-l}. Each level-l
 * sample drives the fine (2^l steps) and coarse (2^{l-1} steps) solutions
 * with one Brownian path, the coarse increments being pairwise sums of the
 * fine ones.
 */
EstimatorReport mlmc_estimate(const HamiltonianProblem& problem, SchemeId scheme,
                              const MlmcConfig& cfg, const SolverConfig& solver = {});

/// The coupled pair (fine, coarse) of functionals for one level-l sample.
struct CoupledSample {
    double fine = 0.0;
    double coarse = 0.0;
};
CoupledSample mlmc_coupled_sample(const HamiltonianProblem& problem, SchemeId scheme,
                                  const MlmcConfig& cfg, int level, std::uint64_t index,
                                  const SolverConfig& solver = {});

}  // namespace hamdrift
