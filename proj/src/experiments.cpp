// SPDX-License-Identifier: Apache-2.0
#include "hamdrift/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "hamdrift/detail/parallel.hpp"
#include "hamdrift/detail/sample_context.hpp"
#include "hamdrift/verification.hpp"

#ifndef HAMDRIFT_VERSION
#define HAMDRIFT_VERSION "0.1.0"
#endif

namespace hamdrift {

std::string_view to_string(Experiment e) {
    switch (e) {
        case Experiment::Trace: return "trace";
        case Experiment::Strong: return "strong";
        case Experiment::Weak: return "weak";
        case Experiment::Mlmc: return "mlmc";
        case Experiment::Step: return "step";
    }
    return "?";
}

Experiment parse_experiment(std::string_view name) {
    for (Experiment e : {Experiment::Trace, Experiment::Strong, Experiment::Weak, Experiment::Mlmc,
                         Experiment::Step}) {
        if (name == to_string(e)) return e;
    }
    throw ConfigError(
        fmt::format("unknown experiment '{}' (expected trace, strong, weak, mlmc or step)", name));
}

std::string_view to_string(WeakMode m) { return m == WeakMode::Exact ? "exact" : "mc"; }

WeakMode parse_weak_mode(std::string_view name) {
    if (name == "exact") return WeakMode::Exact;
    if (name == "mc") return WeakMode::MonteCarlo;
    throw ConfigError(fmt::format("unknown mode '{}' (expected exact or mc)", name));
}

namespace {

double parse_plain(std::string_view text, std::string_view whole) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError(fmt::format("cannot parse step size '{}'", whole));
    }
    return v;
}

// "a" or "a^b"
double parse_power(std::string_view text, std::string_view whole) {
    const auto caret = text.find('^');
    if (caret == std::string_view::npos) return parse_plain(text, whole);
    return std::pow(parse_plain(text.substr(0, caret), whole),
                    parse_plain(text.substr(caret + 1), whole));
}

}  // namespace

double parse_step(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (text.empty()) throw ConfigError("empty step size");
    const auto slash = text.find('/');
    double v = 0.0;
    if (slash == std::string_view::npos) {
        v = parse_power(text, text);
    } else {
        v = parse_power(text.substr(0, slash), text) / parse_power(text.substr(slash + 1), text);
    }
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(fmt::format("step size '{}' must be positive and finite", text));
    }
    return v;
}

namespace {

std::vector<double> dyadic_steps(int from, int to) {
    std::vector<double> hs;
    for (int k = from; k <= to; ++k) hs.push_back(std::ldexp(1.0, -k));
    return hs;
}

bool strictly_decreasing(const std::vector<double>& hs) {
    return std::adjacent_find(hs.begin(), hs.end(), std::less_equal<>{}) == hs.end();
}

// log2(h / h_ref) when it is a non-negative integer, otherwise nullopt
std::optional<int> dyadic_factor(double h, double h_ref) {
    const double ratio = h / h_ref;
    const double k = std::round(ratio);
    if (k < 1.0 || std::abs(ratio - k) > 1e-9 * k) return std::nullopt;
    int e = 0;
    const double m = std::frexp(k, &e);
    if (m != 0.5) return std::nullopt;
    return e - 1;
}

HamiltonianProblem build_problem(const ExperimentConfig& cfg) {
    try {
        return make_problem(cfg.problem, cfg.overrides);
    } catch (const IncompatibleScheme&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

TimeGrid grid_for(const ExperimentConfig& cfg, double h) {
    try {
        return TimeGrid::from_step(cfg.t_end, h);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

TimeGrid trace_grid(const ExperimentConfig& cfg) {
    if (cfg.steps) return TimeGrid(cfg.t_end, *cfg.steps);
    return grid_for(cfg, cfg.h_list.front());
}

}  // namespace

ExperimentConfig with_defaults(ExperimentConfig cfg, bool t_end_set) {
    switch (cfg.experiment) {
        case Experiment::Trace:
            if (!t_end_set) cfg.t_end = 5.0;
            if (cfg.h_list.empty() && !cfg.steps) cfg.steps = 16;
            break;
        case Experiment::Strong:
            if (cfg.h_list.empty()) cfg.h_list = dyadic_steps(4, 8);
            break;
        case Experiment::Weak:
            if (cfg.h_list.empty()) cfg.h_list = dyadic_steps(4, 10);
            break;
        case Experiment::Mlmc:
            break;
        case Experiment::Step:
            if (cfg.h_list.empty()) cfg.h_list = {0.5};
            break;
    }
    return cfg;
}

void ExperimentConfig::validate() const {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw ConfigError(fmt::format("t-end must be positive, got {}", t_end));
    }
    if (samples < 1) throw ConfigError(fmt::format("samples must be >= 1, got {}", samples));
    if (output_every < 1) throw ConfigError("output-every must be >= 1");
    if (schemes.empty()) throw ConfigError("at least one scheme is required");
    if (steps && *steps < 1) throw ConfigError("steps must be >= 1");
    for (double h : h_list) {
        if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError(fmt::format("invalid step {}", h));
    }
    try {
        solver.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }

    const HamiltonianProblem problem = build_problem(*this);
    for (SchemeId s : schemes) check_compatible(s, problem);

    const auto need_h_list = [&](std::string_view what) {
        if (h_list.empty()) throw ConfigError(fmt::format("{} needs at least one step size", what));
        if (!strictly_decreasing(h_list)) {
            throw ConfigError("the step-size list must be strictly decreasing");
        }
        for (double h : h_list) grid_for(*this, h);
    };

    switch (experiment) {
        case Experiment::Trace:
            if (!steps && h_list.size() != 1) {
                throw ConfigError("trace needs a single step size or a step count");
            }
            if (steps && !h_list.empty()) throw ConfigError("give either steps or h, not both");
            break;
        case Experiment::Strong:
            need_h_list("strong");
            check_compatible(reference_scheme, problem);
            if (!(h_ref > 0.0)) throw ConfigError("h-ref must be positive");
            grid_for(*this, h_ref);
            for (double h : h_list) {
                if (!dyadic_factor(h, h_ref)) {
                    throw ConfigError(fmt::format(
                        "step {} is not h-ref = {} times a power of two", h, h_ref));
                }
            }
            break;
        case Experiment::Weak:
            need_h_list("weak");
            if (mode == WeakMode::Exact) {
                if (!problem.unit_oscillator) {
                    throw ConfigError("exact mode needs the oscillator; use --mode mc");
                }
                for (SchemeId s : schemes) {
                    if (s == SchemeId::SPLIT) {
                        throw ConfigError("exact mode does not support SPLIT; use --mode mc");
                    }
                }
            } else {
                check_compatible(reference_scheme, problem);
                grid_for(*this, h_ref);
                for (double h : h_list) {
                    if (!dyadic_factor(h, h_ref)) {
                        throw ConfigError(fmt::format(
                            "step {} is not h-ref = {} times a power of two", h, h_ref));
                    }
                }
            }
            break;
        case Experiment::Mlmc:
            if (levels < 1 || levels > 30) throw ConfigError("levels must lie in 1..30");
            if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
            break;
        case Experiment::Step:
            if (h_list.size() != 1) throw ConfigError("step needs exactly one step size");
            if (dw && dw->size() != problem.dim_w) {
                throw ConfigError(fmt::format("dw has {} entries, the problem has {} noise dimensions",
                                              dw->size(), problem.dim_w));
            }
            break;
    }
}

std::size_t Table::column(std::string_view name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error(fmt::format("table has no column '{}'", name));
    return static_cast<std::size_t>(it - columns.begin());
}

double Table::number(std::size_t row, std::string_view name) const {
    const Cell& c = rows.at(row).at(column(name));
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
    throw Error(fmt::format("cell ({}, {}) is not numeric", row, name));
}

namespace {

std::string num(double v) { return fmt::format("{}", v); }

std::string join_numbers(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + num(v[i]);
    return out;
}

std::string join_vector(const Vector& v) {
    return join_numbers(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

std::vector<std::pair<std::string, std::string>> config_metadata(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> md;
    md.emplace_back("version", HAMDRIFT_VERSION);
    md.emplace_back("experiment", std::string(to_string(cfg.experiment)));
    md.emplace_back("problem", std::string(to_string(cfg.problem)));
    std::string schemes;
    for (std::size_t i = 0; i < cfg.schemes.size(); ++i) {
        schemes += (i ? "," : "") + std::string(to_string(cfg.schemes[i]));
    }
    md.emplace_back("scheme", schemes);
    md.emplace_back("t-end", num(cfg.t_end));
    if (cfg.steps) md.emplace_back("steps", std::to_string(*cfg.steps));
    if (!cfg.h_list.empty()) md.emplace_back("h", join_numbers(cfg.h_list));
    md.emplace_back("samples", std::to_string(cfg.samples));
    md.emplace_back("seed", std::to_string(cfg.seed));
    md.emplace_back("levels", std::to_string(cfg.levels));
    md.emplace_back("epsilon", num(cfg.epsilon));
    md.emplace_back("reference-scheme", std::string(to_string(cfg.reference_scheme)));
    md.emplace_back("h-ref", num(cfg.h_ref));
    md.emplace_back("mode", std::string(to_string(cfg.mode)));
    if (cfg.overrides.sigma) md.emplace_back("sigma", num(*cfg.overrides.sigma));
    if (cfg.overrides.alpha) md.emplace_back("alpha", num(*cfg.overrides.alpha));
    if (cfg.overrides.scale) md.emplace_back("scale", num(*cfg.overrides.scale));
    if (cfg.overrides.q0) md.emplace_back("q0", join_vector(*cfg.overrides.q0));
    if (cfg.overrides.p0) md.emplace_back("p0", join_vector(*cfg.overrides.p0));
    if (cfg.dw) md.emplace_back("dw", join_vector(*cfg.dw));
    md.emplace_back("solver", std::string(to_string(cfg.solver.method)));
    md.emplace_back("tol", num(cfg.solver.tol));
    md.emplace_back("max-iter", std::to_string(cfg.solver.max_iter));
    md.emplace_back("functional", cfg.functional.name());
    md.emplace_back("output-every", std::to_string(cfg.output_every));
    return md;
}

namespace {

Table start_table(const ExperimentConfig& cfg) {
    cfg.validate();
    Table t;
    t.metadata = config_metadata(cfg);
    return t;
}

struct Slopes {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double r_squared = std::numeric_limits<double>::quiet_NaN();
};

Slopes slope_of(const std::vector<double>& hs, const std::vector<double>& errors) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < hs.size(); ++k) pts.emplace_back(hs[k], errors[k]);
    try {
        const SlopeFit fit = fit_order(pts);
        return {fit.slope, fit.r_squared};
    } catch (const Error&) {
        return {};
    }
}

// Appends "slope" and "r_squared" footer rows for one scheme; columns[2..] are error columns.
void append_fit_rows(Table& t, SchemeId scheme, const std::vector<double>& hs,
                     const std::vector<std::vector<double>>& error_columns) {
    std::vector<Cell> slope_row{std::string("slope"), std::string(to_string(scheme))};
    std::vector<Cell> r2_row{std::string("r_squared"), std::string(to_string(scheme))};
    for (const auto& col : error_columns) {
        const Slopes s = slope_of(hs, col);
        slope_row.emplace_back(s.slope);
        r2_row.emplace_back(s.r_squared);
    }
    t.rows.push_back(std::move(slope_row));
    t.rows.push_back(std::move(r2_row));
}

bool any_needs_area(const ExperimentConfig& cfg, bool include_reference) {
    bool area = include_reference && needs_area(cfg.reference_scheme);
    for (SchemeId s : cfg.schemes) area = area || needs_area(s);
    return area;
}

// The scalar noise level of the (validated) oscillator.
double oscillator_sigma(const HamiltonianProblem& problem) { return problem.sigma(0, 0); }

}  // namespace

Table run_trace(const ExperimentConfig& cfg) {
    Table t = start_table(cfg);
    const HamiltonianProblem problem = build_problem(cfg);
    const TimeGrid grid = trace_grid(cfg);
    const double h0 = energy(problem, problem.initial);
    const double rate = trace_rate(problem);

    t.columns = {"t", "exact_line"};
    std::vector<TimeSeriesReport> series;
    for (SchemeId s : cfg.schemes) {
        t.columns.push_back(fmt::format("{}_mean", to_string(s)));
        t.columns.push_back(fmt::format("{}_se", to_string(s)));
        const McConfig mc{cfg.samples, cfg.seed, Functional::energy(), cfg.threads};
        series.push_back(mc_time_series(problem, s, grid, mc, cfg.solver, cfg.output_every));
    }
    const TimeSeriesReport& first = series.front();
    for (std::size_t k = 0; k < first.times.size(); ++k) {
        const double time = first.times[k];
        std::vector<Cell> row{time, h0 + rate * time};
        for (const auto& s : series) {
            row.emplace_back(s.mean[k]);
            row.emplace_back(s.std_error[k]);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table run_strong(const ExperimentConfig& cfg) {
    Table t = start_table(cfg);
    const HamiltonianProblem problem = build_problem(cfg);
    const TimeGrid ref_grid = grid_for(cfg, cfg.h_ref);
    const bool area = any_needs_area(cfg, true);
    const std::size_t S = cfg.schemes.size();
    const std::size_t K = cfg.h_list.size();
    std::vector<int> factor(K);
    for (std::size_t k = 0; k < K; ++k) factor[k] = *dyadic_factor(cfg.h_list[k], cfg.h_ref);

    // squared errors, layout [sample][scheme][h][q|p]
    const std::size_t per_sample = S * K * 2;
    std::vector<double> sq(static_cast<std::size_t>(cfg.samples) * per_sample);
    const IntegrateOptions opts{.final_only = true};
    detail::parallel_for(cfg.samples, cfg.threads, [&](std::int64_t i) {
        detail::with_sample_context(i, [&] {
            const BrownianPath path = sample_path(cfg.seed, static_cast<std::uint64_t>(i), ref_grid,
                                                  problem.dim_w, area);
            const PhaseState ref =
                integrate(problem, cfg.reference_scheme, ref_grid, path, cfg.solver, opts)
                    .final_state();
            // h_list is decreasing, so walk it backwards while coarsening
            BrownianPath cur = path;
            int cur_factor = 0;
            for (std::size_t kk = K; kk-- > 0;) {
                while (cur_factor < factor[kk]) {
                    cur = coarsen(cur);
                    ++cur_factor;
                }
                const TimeGrid grid(cfg.t_end, cur.steps());
                for (std::size_t s = 0; s < S; ++s) {
                    const PhaseState x =
                        integrate(problem, cfg.schemes[s], grid, cur, cfg.solver, opts).final_state();
                    double* out = &sq[static_cast<std::size_t>(i) * per_sample + (s * K + kk) * 2];
                    out[0] = (x.q() - ref.q()).squaredNorm();
                    out[1] = (x.p() - ref.p()).squaredNorm();
                }
            }
            return 0;
        });
    });

    t.columns = {"h", "scheme", "rms_error_q", "rms_error_p", "rms_error_sum"};
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<std::vector<double>> cols(3, std::vector<double>(K));
        for (std::size_t k = 0; k < K; ++k) {
            double sum_q = 0.0, sum_p = 0.0;
            for (std::int64_t i = 0; i < cfg.samples; ++i) {
                const double* e = &sq[static_cast<std::size_t>(i) * per_sample + (s * K + k) * 2];
                sum_q += e[0];
                sum_p += e[1];
            }
            const double m = static_cast<double>(cfg.samples);
            cols[0][k] = std::sqrt(sum_q / m);
            cols[1][k] = std::sqrt(sum_p / m);
            cols[2][k] = cols[0][k] + cols[1][k];
            t.rows.push_back({cfg.h_list[k], std::string(to_string(cfg.schemes[s])), cols[0][k],
                              cols[1][k], cols[2][k]});
        }
        append_fit_rows(t, cfg.schemes[s], cfg.h_list, cols);
    }
    return t;
}

namespace {

struct MomentErrors {
    double mean_q, mean_p, second_q, second_p, var_q, var_p;
};

// First coordinate moments: E q, E p, E q^2, E p^2.
struct FirstMoments {
    double q = 0.0, p = 0.0, q2 = 0.0, p2 = 0.0;
};

MomentErrors moment_errors(const FirstMoments& num, const FirstMoments& ref) {
    return {std::abs(num.q - ref.q),
            std::abs(num.p - ref.p),
            std::abs(num.q2 - ref.q2),
            std::abs(num.p2 - ref.p2),
            std::abs((num.q2 - num.q * num.q) - (ref.q2 - ref.q * ref.q)),
            std::abs((num.p2 - num.p * num.p) - (ref.p2 - ref.p * ref.p))};
}

FirstMoments from_gaussian(const GaussianMoments& g) {
    return {g.mean(0), g.mean(1), g.mean(0) * g.mean(0) + g.cov(0, 0),
            g.mean(1) * g.mean(1) + g.cov(1, 1)};
}

FirstMoments from_exact(const OscillatorMoments& m) {
    return {m.mean_q, m.mean_p, m.second_q(), m.second_p()};
}

}  // namespace

Table run_weak(const ExperimentConfig& cfg) {
    Table t = start_table(cfg);
    const HamiltonianProblem problem = build_problem(cfg);
    const std::size_t S = cfg.schemes.size();
    const std::size_t K = cfg.h_list.size();
    const double q0 = problem.initial.q()(0), p0 = problem.initial.p()(0);

    // errs[s][k]
    std::vector<std::vector<MomentErrors>> errs(S, std::vector<MomentErrors>(K));
    if (cfg.mode == WeakMode::Exact) {
        const FirstMoments exact =
            from_exact(oscillator_exact_moments(p0, q0, oscillator_sigma(problem), cfg.t_end));
        Vector mean0(2);
        mean0 << q0, p0;
        const Matrix cov0 = Matrix::Zero(2, 2);
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t k = 0; k < K; ++k) {
                const TimeGrid grid = grid_for(cfg, cfg.h_list[k]);
                const AffineSchemeMatrices mats = extract_affine(cfg.schemes[s], problem, grid.h());
                const GaussianMoments g = affine_moment_recursion(mats, mean0, cov0, grid.n_steps());
                errs[s][k] = moment_errors(from_gaussian(g), exact);
            }
        }
    } else {
        const TimeGrid ref_grid = grid_for(cfg, cfg.h_ref);
        const bool area = any_needs_area(cfg, true);
        std::vector<int> factor(K);
        for (std::size_t k = 0; k < K; ++k) factor[k] = *dyadic_factor(cfg.h_list[k], cfg.h_ref);
        const bool exact_ref = problem.unit_oscillator;
        // per sample: reference (q, p), then (q, p) per scheme and h
        const std::size_t per_sample = 2 + S * K * 2;
        std::vector<double> vals(static_cast<std::size_t>(cfg.samples) * per_sample);
        const IntegrateOptions opts{.final_only = true};
        detail::parallel_for(cfg.samples, cfg.threads, [&](std::int64_t i) {
            detail::with_sample_context(i, [&] {
                double* out = &vals[static_cast<std::size_t>(i) * per_sample];
                const BrownianPath path = sample_path(
                    cfg.seed, static_cast<std::uint64_t>(i), ref_grid, problem.dim_w, area);
                if (!exact_ref) {
                    const PhaseState ref =
                        integrate(problem, cfg.reference_scheme, ref_grid, path, cfg.solver, opts)
                            .final_state();
                    out[0] = ref.q()(0);
                    out[1] = ref.p()(0);
                }
                BrownianPath cur = path;
                int cur_factor = 0;
                for (std::size_t kk = K; kk-- > 0;) {
                    while (cur_factor < factor[kk]) {
                        cur = coarsen(cur);
                        ++cur_factor;
                    }
                    const TimeGrid grid(cfg.t_end, cur.steps());
                    for (std::size_t s = 0; s < S; ++s) {
                        const PhaseState x =
                            integrate(problem, cfg.schemes[s], grid, cur, cfg.solver, opts)
                                .final_state();
                        out[2 + (s * K + kk) * 2] = x.q()(0);
                        out[3 + (s * K + kk) * 2] = x.p()(0);
                    }
                }
                return 0;
            });
        });
        const auto moments_at = [&](std::size_t offset) {
            FirstMoments m;
            for (std::int64_t i = 0; i < cfg.samples; ++i) {
                const double q = vals[static_cast<std::size_t>(i) * per_sample + offset];
                const double p = vals[static_cast<std::size_t>(i) * per_sample + offset + 1];
                m.q += q;
                m.p += p;
                m.q2 += q * q;
                m.p2 += p * p;
            }
            const double n = static_cast<double>(cfg.samples);
            return FirstMoments{m.q / n, m.p / n, m.q2 / n, m.p2 / n};
        };
        const FirstMoments ref =
            exact_ref
                ? from_exact(oscillator_exact_moments(p0, q0, oscillator_sigma(problem), cfg.t_end))
                : moments_at(0);
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t k = 0; k < K; ++k) {
                errs[s][k] = moment_errors(moments_at(2 + (s * K + k) * 2), ref);
            }
        }
    }

    t.columns = {"h",           "scheme",    "err_mean_q", "err_mean_p",
                 "err_second_q", "err_second_p", "err_var_q",  "err_var_p"};
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<std::vector<double>> cols(6, std::vector<double>(K));
        for (std::size_t k = 0; k < K; ++k) {
            const MomentErrors& e = errs[s][k];
            const double v[6] = {e.mean_q, e.mean_p, e.second_q, e.second_p, e.var_q, e.var_p};
            std::vector<Cell> row{cfg.h_list[k], std::string(to_string(cfg.schemes[s]))};
            for (int c = 0; c < 6; ++c) {
                cols[c][k] = v[c];
                row.emplace_back(v[c]);
            }
            t.rows.push_back(std::move(row));
        }
        append_fit_rows(t, cfg.schemes[s], cfg.h_list, cols);
    }
    return t;
}

namespace {

// Single-level runs draw from a seed disjoint from the MLMC level streams.
constexpr std::uint64_t kSingleLevelSalt = 0x53494e474c45ULL;

}  // namespace

Table run_mlmc(const ExperimentConfig& cfg) {
    Table t = start_table(cfg);
    const HamiltonianProblem problem = build_problem(cfg);
    const SchemeId scheme = cfg.schemes.front();
    const MlmcConfig mc{cfg.levels, cfg.epsilon, cfg.seed, cfg.functional, cfg.t_end, cfg.threads};
    const EstimatorReport report = mlmc_estimate(problem, scheme, mc, cfg.solver);

    t.columns = {"kind", "level", "samples", "mean", "variance", "std_error", "work"};
    std::int64_t total_samples = 0;
    for (const LevelSummary& l : report.per_level) {
        t.rows.push_back({std::string("level"), static_cast<std::int64_t>(l.level), l.samples,
                          l.mean, l.variance, std::sqrt(l.variance / static_cast<double>(l.samples)),
                          l.work});
        total_samples += l.samples;
    }
    t.rows.push_back({std::string("mlmc"), static_cast<std::int64_t>(cfg.levels), total_samples,
                      report.estimate, std::monostate{}, report.std_error, report.total_work});

    // single level on the finest grid, sized from a pilot run to the MLMC standard error
    const TimeGrid fine(cfg.t_end, 1 << cfg.levels);
    const McConfig pilot_cfg{cfg.samples, cfg.seed ^ kSingleLevelSalt, cfg.functional, cfg.threads};
    const EstimatorReport pilot = mc_estimate(problem, scheme, fine, pilot_cfg, cfg.solver);
    const double pilot_var = pilot.per_level.front().variance;
    std::int64_t m = 1;
    if (report.std_error > 0.0 && pilot_var > 0.0) {
        const double need = std::ceil(pilot_var / (report.std_error * report.std_error));
        if (need > 1e9) throw Error("matched single-level run would need more than 1e9 samples");
        m = std::max<std::int64_t>(1, static_cast<std::int64_t>(need));
    }
    const McConfig single_cfg{m, cfg.seed ^ kSingleLevelSalt, cfg.functional, cfg.threads};
    const EstimatorReport single = mc_estimate(problem, scheme, fine, single_cfg, cfg.solver);
    const LevelSummary& sl = single.per_level.front();
    t.rows.push_back({std::string("single"), static_cast<std::int64_t>(cfg.levels), sl.samples,
                      single.estimate, sl.variance, single.std_error, single.total_work});
    t.rows.push_back({std::string("work_ratio"), std::monostate{}, std::monostate{},
                      std::monostate{}, std::monostate{}, std::monostate{},
                      report.total_work / single.total_work});
    return t;
}

Table run_step(const ExperimentConfig& cfg) {
    Table t = start_table(cfg);
    const HamiltonianProblem problem = build_problem(cfg);
    const SchemeId scheme = cfg.schemes.front();
    const double h = cfg.h_list.front();
    const PhaseState& x0 = problem.initial;
    const int m = problem.dim_q, d = problem.dim_w;

    Vector dW(d), dZ(d);
    if (cfg.dw) {
        dW = *cfg.dw;
        dZ = 0.5 * h * dW;  // conditional mean of the area given dW
    } else {
        const BrownianPath path = sample_path(cfg.seed, 0, TimeGrid(h, 1), d, true);
        dW = path.increment(0);
        dZ = path.area(0);
    }
    const StepRecord rec = step(scheme, problem, x0, dW, &dZ, h, cfg.solver);

    t.columns = {"scheme", "h"};
    for (int j = 1; j <= m; ++j) t.columns.push_back(fmt::format("q{}", j));
    for (int j = 1; j <= m; ++j) t.columns.push_back(fmt::format("p{}", j));
    for (int j = 1; j <= d; ++j) t.columns.push_back(fmt::format("dw{}", j));
    for (int j = 1; j <= m; ++j) t.columns.push_back(fmt::format("q{}_next", j));
    for (int j = 1; j <= m; ++j) t.columns.push_back(fmt::format("p{}_next", j));
    for (int j = 1; j <= m; ++j) t.columns.push_back(fmt::format("psi{}", j));
    for (const char* c : {"solver_iters", "quadrature_nodes", "energy_before", "energy_after",
                          "energy_delta"}) {
        t.columns.emplace_back(c);
    }

    std::vector<Cell> row{std::string(to_string(scheme)), h};
    for (int j = 0; j < m; ++j) row.emplace_back(x0.q()(j));
    for (int j = 0; j < m; ++j) row.emplace_back(x0.p()(j));
    for (int j = 0; j < d; ++j) row.emplace_back(dW(j));
    for (int j = 0; j < m; ++j) row.emplace_back(rec.state.q()(j));
    for (int j = 0; j < m; ++j) row.emplace_back(rec.state.p()(j));
    for (int j = 0; j < m; ++j) {
        row.emplace_back(rec.psi ? Cell{(*rec.psi)(j)} : Cell{std::monostate{}});
    }
    const double e0 = energy(problem, x0), e1 = energy(problem, rec.state);
    row.emplace_back(static_cast<std::int64_t>(rec.solver_iters));
    row.emplace_back(static_cast<std::int64_t>(rec.quadrature_nodes_used));
    row.emplace_back(e0);
    row.emplace_back(e1);
    row.emplace_back(e1 - e0);
    t.rows.push_back(std::move(row));
    return t;
}

Table run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
        case Experiment::Trace: return run_trace(cfg);
        case Experiment::Strong: return run_strong(cfg);
        case Experiment::Weak: return run_weak(cfg);
        case Experiment::Mlmc: return run_mlmc(cfg);
        case Experiment::Step: return run_step(cfg);
    }
    throw ConfigError("unknown experiment");
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string cell_text(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "";
            } else if constexpr (std::is_same_v<T, double>) {
                return num(v);
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else {
                return csv_field(v);
            }
        },
        c);
}

}  // namespace

void write_csv(const Table& table, std::ostream& out) {
    for (const auto& [key, value] : table.metadata) out << "# " << key << " = " << value << '\n';
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out << (c ? "," : "") << csv_field(table.columns[c]);
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << cell_text(row[c]);
        out << '\n';
    }
}

std::string to_csv(const Table& table) {
    std::ostringstream out;
    write_csv(table, out);
    return out.str();
}

}  // namespace hamdrift
