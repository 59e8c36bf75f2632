// SPDX-License-Identifier: Apache-2.0
#include "hamdrift/core.hpp"

#include <cmath>

#include <fmt/format.h>

namespace hamdrift {

PhaseState::PhaseState(Vector q, Vector p) : q_(std::move(q)), p_(std::move(p)) {
    if (q_.size() < 1 || q_.size() != p_.size()) {
        throw DimensionMismatch(fmt::format("PhaseState: q has length {}, p has length {}",
                                            q_.size(), p_.size()));
    }
}

bool PhaseState::finite() const { return q_.allFinite() && p_.allFinite(); }

void HamiltonianProblem::validate() const {
    if (dim_q < 1 || dim_w < 1) {
        throw DimensionMismatch(fmt::format("{}: dimensions must be positive (m={}, d={})", name,
                                            dim_q, dim_w));
    }
    if (sigma.rows() != dim_q || sigma.cols() != dim_w) {
        throw DimensionMismatch(fmt::format("{}: sigma is {}x{}, expected {}x{}", name,
                                            sigma.rows(), sigma.cols(), dim_q, dim_w));
    }
    if (!sigma.allFinite()) throw Error(name + ": sigma has non-finite entries");
    check_dimensions(*this, initial);
    if (!grad_V || !potential_V) throw Error(name + ": grad_V and potential_V are required");
}

void check_dimensions(const HamiltonianProblem& problem, const PhaseState& state) {
    if (state.dim() != problem.dim_q) {
        throw DimensionMismatch(fmt::format("{}: state has dimension {}, problem expects {}",
                                            problem.name, state.dim(), problem.dim_q));
    }
}

double energy(const HamiltonianProblem& problem, const PhaseState& state) {
    check_dimensions(problem, state);
    return 0.5 * state.p().squaredNorm() + problem.potential_V(state.q());
}

double trace_rate(const HamiltonianProblem& problem) {
    return 0.5 * problem.sigma.squaredNorm();
}

TimeGrid::TimeGrid(double t_end, int n_steps)
    : t_end_(t_end), n_steps_(n_steps), h_(t_end / n_steps) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw Error(fmt::format("TimeGrid: t_end must be positive and finite, got {}", t_end));
    }
    if (n_steps < 1) throw Error(fmt::format("TimeGrid: n_steps must be >= 1, got {}", n_steps));
}

TimeGrid TimeGrid::from_step(double t_end, double h) {
    if (!(h > 0.0)) throw Error(fmt::format("TimeGrid: step must be positive, got {}", h));
    const double ratio = t_end / h;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, n)) {
        throw Error(fmt::format("TimeGrid: t_end={} is not an integer multiple of h={}", t_end, h));
    }
    return TimeGrid(t_end, static_cast<int>(n));
}

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id),
      key_(mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) + stream_id * kGamma + kGamma)) {}

RandomSource::result_type RandomSource::operator()() {
    return mix64(key_ + (++counter_) * kGamma);
}

double RandomSource::normal() { return normal_(*this); }

std::uint64_t level_stream(int level, std::uint64_t index) {
    return (static_cast<std::uint64_t>(level) << 48) ^ index;
}

double snap_increment(double x) { return std::nearbyint(x / kIncrementQuantum) * kIncrementQuantum; }

Vector BrownianPath::area(int n) const {
    if (!dZ) throw Error("BrownianPath: area increments were not sampled");
    return dZ->row(n).transpose();
}

BrownianPath sample_path(std::uint64_t seed, std::uint64_t stream_id, const TimeGrid& grid, int d,
                         bool with_area) {
    if (d < 1) throw DimensionMismatch("sample_path: noise dimension must be >= 1");
    RandomSource rng(seed, stream_id);
    const int n = grid.n_steps();
    const double h = grid.h();
    const double sd_w = std::sqrt(h);
    const double sd_z = std::sqrt(h * h * h / 12.0);

    BrownianPath path;
    path.h = h;
    path.seed = seed;
    path.dW.resize(n, d);
    if (with_area) path.dZ = Matrix(n, d);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < d; ++j) {
            const double w = snap_increment(sd_w * rng.normal());
            path.dW(k, j) = w;
            if (with_area) (*path.dZ)(k, j) = 0.5 * h * w + sd_z * rng.normal();
        }
    }
    return path;
}

namespace {

// Conditional law of (W(h), int_0^h W) given (W(2h), int_0^{2h} W) for a
// Brownian motion started at 0; h is the fine step.
struct AreaBridge {
    Eigen::Matrix2d gain;
    Eigen::Matrix2d chol;

    explicit AreaBridge(double h) {
        const double h2 = h * h, h3 = h2 * h;
        Eigen::Matrix2d s11, s12, s22;
        s11 << h, h2 / 2, h2 / 2, h3 / 3;
        s12 << h, 1.5 * h2, h2 / 2, 5.0 * h3 / 6.0;
        s22 << 2 * h, 2 * h2, 2 * h2, 8.0 * h3 / 3.0;
        gain = s12 * s22.inverse();
        const Eigen::Matrix2d cov = s11 - gain * s12.transpose();
        chol = Eigen::LLT<Eigen::Matrix2d>(0.5 * (cov + cov.transpose())).matrixL();
    }
};

}  // namespace

BrownianPath refine(const BrownianPath& path, RandomSource& rng) {
    const int n = path.steps();
    const int d = path.dim();
    const double fine_h = 0.5 * path.h;

    BrownianPath out;
    out.level = path.level + 1;
    out.h = fine_h;
    out.seed = path.seed;
    out.dW.resize(2 * n, d);

    if (!path.dZ) {
        const double sd = std::sqrt(path.h / 4.0);
        for (int k = 0; k < n; ++k) {
            for (int j = 0; j < d; ++j) {
                const double a = path.dW(k, j);
                const double first = snap_increment(0.5 * a + sd * rng.normal());
                out.dW(2 * k, j) = first;
                out.dW(2 * k + 1, j) = a - first;
            }
        }
        return out;
    }

    const AreaBridge bridge(fine_h);
    out.dZ = Matrix(2 * n, d);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < d; ++j) {
            const double a = path.dW(k, j);
            const double z = (*path.dZ)(k, j);
            const Eigen::Vector2d xi(rng.normal(), rng.normal());
            const Eigen::Vector2d draw = bridge.gain * Eigen::Vector2d(a, z) + bridge.chol * xi;
            const double first = snap_increment(draw(0));
            const double z1 = draw(1);
            out.dW(2 * k, j) = first;
            out.dW(2 * k + 1, j) = a - first;
            (*out.dZ)(2 * k, j) = z1;
            (*out.dZ)(2 * k + 1, j) = z - z1 - fine_h * first;
        }
    }
    return out;
}

BrownianPath refine_with(const BrownianPath& path, const Matrix& xi) {
    if (xi.rows() != path.steps() || xi.cols() != path.dim()) {
        throw DimensionMismatch("refine_with: xi must have the shape of the path increments");
    }
    if (path.dZ) throw Error("refine_with: paths with area increments need refine()");
    BrownianPath out;
    out.level = path.level + 1;
    out.h = 0.5 * path.h;
    out.seed = path.seed;
    out.dW.resize(2 * path.steps(), path.dim());
    for (int k = 0; k < path.steps(); ++k) {
        for (int j = 0; j < path.dim(); ++j) {
            const double a = path.dW(k, j);
            const double first = snap_increment(0.5 * a + xi(k, j));
            out.dW(2 * k, j) = first;
            out.dW(2 * k + 1, j) = a - first;
        }
    }
    return out;
}

BrownianPath coarsen(const BrownianPath& path) {
    const int n = path.steps();
    if (n % 2 != 0) throw Error(fmt::format("coarsen: odd step count {}", n));
    BrownianPath out;
    out.level = path.level - 1;
    out.h = 2.0 * path.h;
    out.seed = path.seed;
    out.dW.resize(n / 2, path.dim());
    if (path.dZ) out.dZ = Matrix(n / 2, path.dim());
    for (int k = 0; k < n / 2; ++k) {
        for (int j = 0; j < path.dim(); ++j) {
            const double w1 = path.dW(2 * k, j);
            out.dW(k, j) = w1 + path.dW(2 * k + 1, j);
            if (path.dZ) {
                (*out.dZ)(k, j) = (*path.dZ)(2 * k, j) + (*path.dZ)(2 * k + 1, j) + path.h * w1;
            }
        }
    }
    return out;
}

}  // namespace hamdrift
