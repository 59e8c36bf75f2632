// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hamdrift {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Position/momentum pair of equal length m >= 1.
class PhaseState {
public:
    PhaseState(Vector q, Vector p);

    const Vector& q() const { return q_; }
    const Vector& p() const { return p_; }
    int dim() const { return static_cast<int>(q_.size()); }
    bool finite() const;

private:
    Vector q_;
    Vector p_;
};

using VectorField = std::function<Vector(const Vector&)>;
using ScalarField = std::function<double(const Vector&)>;
using MatrixField = std::function<Matrix(const Vector&)>;
/// (q, psi, h) -> integral over s in [0,1] of V'(q + s h psi).
using AvfClosedForm = std::function<Vector(const Vector&, const Vector&, double)>;

/**
 * Separable Hamiltonian H(p,q) = |p|^2/2 + V(q) driven by additive noise
 * Sigma dW, with Sigma of shape dim_q x dim_w.
 *
 * hessian_V and closed_form_avf are optional (empty std::function when
 * absent). poly_degree, when set, is the per-coordinate polynomial degree of
 * V' and fixes the Gauss-Legendre node count used for the averaged force.
 */
struct HamiltonianProblem {
    std::string name;
    int dim_q = 1;
    int dim_w = 1;
    VectorField grad_V;
    ScalarField potential_V;
    MatrixField hessian_V;
    Matrix sigma;
    std::optional<int> poly_degree;
    AvfClosedForm closed_form_avf;
    PhaseState initial{Vector::Zero(1), Vector::Zero(1)};
    // V(q) = |q|^2/2 with m = d = 1; enables STM and affine extraction.
    bool unit_oscillator = false;

    /// Throws DimensionMismatch when sigma or the initial state disagree with dim_q/dim_w.
    void validate() const;
};

void check_dimensions(const HamiltonianProblem& problem, const PhaseState& state);

double energy(const HamiltonianProblem& problem, const PhaseState& state);

/// Tr(Sigma^T Sigma) / 2, the slope of the expected-energy line.
double trace_rate(const HamiltonianProblem& problem);

/// Uniform grid t_n = n h on [0, t_end] with h = t_end / n_steps.
class TimeGrid {
public:
    TimeGrid(double t_end, int n_steps);
    /// Grid with step h; t_end / h must be an integer up to round-off.
    static TimeGrid from_step(double t_end, double h);

    double t_end() const { return t_end_; }
    int n_steps() const { return n_steps_; }
    double h() const { return h_; }
    double t(int n) const { return n * h_; }

private:
    double t_end_;
    int n_steps_;
    double h_;
};

/**
 * Counter-based generator: the n-th draw of stream (seed, stream_id) is a
 * SplitMix64 finalisation of key + n * gamma, where key mixes seed and
 * stream_id. Distinct streams never share state, so samples can be drawn in
 * any order or on any thread with identical results.
 *
 * Gaussian draws use std::normal_distribution, which is fixed per standard
 * library build.
 */
class RandomSource {
public:
    using result_type = std::uint64_t;

    RandomSource(std::uint64_t seed, std::uint64_t stream_id);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()();

    double normal();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::normal_distribution<double> normal_;
};

/// Stream id for sample `index` of MLMC level `level`.
std::uint64_t level_stream(int level, std::uint64_t index);

// Wiener increments are rounded to multiples of this quantum, so sums and
// differences of increments are exact and refine/coarsen round-trips
// reproduce the coarse path bit for bit.
inline constexpr double kIncrementQuantum = 0x1p-40;

double snap_increment(double x);

/**
 * Wiener increments dW (steps x d, row n is the increment over
 * [t_n, t_{n+1}]) on a uniform grid of step h. When present, dZ holds the
 * matching time integrals of W - W(t_n) over each step.
 */
struct BrownianPath {
    int level = 0;
    double h = 1.0;
    Matrix dW;
    std::optional<Matrix> dZ;
    std::uint64_t seed = 0;

    int steps() const { return static_cast<int>(dW.rows()); }
    int dim() const { return static_cast<int>(dW.cols()); }
    Vector increment(int n) const { return dW.row(n).transpose(); }
    Vector area(int n) const;
    bool has_area() const { return dZ.has_value(); }
};

/// Exact joint sampling of (dW, dZ); dZ | dW ~ N(h dW / 2, h^3 / 12) per component.
BrownianPath sample_path(std::uint64_t seed, std::uint64_t stream_id, const TimeGrid& grid, int d,
                         bool with_area);

/// Brownian bridge split of every step into two halves, drawing from rng.
BrownianPath refine(const BrownianPath& path, RandomSource& rng);

/**
 * Deterministic bridge split using the supplied offsets xi (steps x d):
 * the first half is dW/2 + xi, the second half dW minus the first.
 * Area increments are not supported by this overload.
 */
BrownianPath refine_with(const BrownianPath& path, const Matrix& xi);

/// Pairwise sums of adjacent steps; requires an even step count.
BrownianPath coarsen(const BrownianPath& path);

}  // namespace hamdrift
