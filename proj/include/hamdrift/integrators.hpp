// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hamdrift/core.hpp"

namespace hamdrift {

enum class SchemeId { DP, EM, BEM, STM, SYMP, SPLIT };

std::string_view to_string(SchemeId id);
/// Case-insensitive; throws Error on unknown names.
SchemeId parse_scheme(std::string_view name);
bool is_implicit(SchemeId id);

enum class SolverMethod { FixedPoint, Newton };

std::string_view to_string(SolverMethod method);
SolverMethod parse_solver_method(std::string_view name);

struct SolverConfig {
    double tol = 1e-12;  // sup-norm distance between successive iterates
    int max_iter = 100;
    SolverMethod method = SolverMethod::FixedPoint;

    void validate() const;
};

/// The implicit solve did not reach tolerance (or left the finite range).
class SolverDiverged : public Error {
public:
    SolverDiverged(SchemeId scheme, int iterations, double last_update,
                   std::optional<int> step = std::nullopt,
                   std::optional<std::int64_t> sample = std::nullopt);

    SchemeId scheme() const { return scheme_; }
    int iterations() const { return iterations_; }
    double last_update() const { return last_update_; }
    std::optional<int> step() const { return step_; }
    std::optional<std::int64_t> sample() const { return sample_; }

    SolverDiverged at_step(int step) const;
    SolverDiverged at_sample(std::int64_t sample) const;

private:
    SchemeId scheme_;
    int iterations_;
    double last_update_;
    std::optional<int> step_;
    std::optional<std::int64_t> sample_;
};

class IncompatibleScheme : public Error {
public:
    using Error::Error;
};

struct StepRecord {
    PhaseState state;
    double t = 0.0;
    int solver_iters = 0;
    int quadrature_nodes_used = 0;
    std::optional<Vector> psi;  // DP only
};

/// Averaged force together with the number of quadrature nodes it used
/// (0 for a closed form).
struct AvfValue {
    Vector value;
    int nodes = 0;
};

/// Node count for the generic averaged-force rule: ceil((k+1)/2) for
/// polynomial V' of degree k, 16 otherwise.
int avf_node_count(const HamiltonianProblem& problem);

/// int_0^1 V'(q + s h psi) ds, using the closed form when the problem has one.
AvfValue avf_integral_detailed(const HamiltonianProblem& problem, const Vector& q,
                               const Vector& psi, double h);
Vector avf_integral(const HamiltonianProblem& problem, const Vector& q, const Vector& psi,
                    double h);
/// Same integral by an n-node Gauss-Legendre rule, ignoring any closed form.
Vector avf_quadrature(const HamiltonianProblem& problem, const Vector& q, const Vector& psi,
                      double h, int nodes);

StepRecord dp_step(const HamiltonianProblem& problem, const PhaseState& state, const Vector& dW,
                   double h, const SolverConfig& solver = {});
StepRecord em_step(const HamiltonianProblem& problem, const PhaseState& state, const Vector& dW,
                   double h);
StepRecord bem_step(const HamiltonianProblem& problem, const PhaseState& state, const Vector& dW,
                    double h, const SolverConfig& solver = {});
/// Exact rotation of the unit oscillator with filtered scalar noise sigma dW.
StepRecord stm_step(const PhaseState& state, const Vector& dW, double h, double sigma);
StepRecord symp_step(const HamiltonianProblem& problem, const PhaseState& state, const Vector& dW,
                     double h);
StepRecord split_step(const HamiltonianProblem& problem, const PhaseState& state,
                      const Vector& dW, const Vector* dZ, double h);

/// Checks that `scheme` can be applied to `problem`; throws IncompatibleScheme.
void check_compatible(SchemeId scheme, const HamiltonianProblem& problem);
bool needs_area(SchemeId scheme);

/// One step of any scheme; dZ is required for SPLIT and ignored otherwise.
StepRecord step(SchemeId scheme, const HamiltonianProblem& problem, const PhaseState& state,
                const Vector& dW, const Vector* dZ, double h, const SolverConfig& solver = {});

struct Trajectory {
    PhaseState initial;
    std::vector<StepRecord> steps;
    std::vector<double> energies;  // H at t_0..t_N when requested

    const PhaseState& final_state() const { return steps.empty() ? initial : steps.back().state; }
};

struct IntegrateOptions {
    bool record_energy = false;
    // keep only the final StepRecord; energies are still recorded per step
    bool final_only = false;
};

/// Applies `n_steps` steps of size h from problem.initial along `path`.
Trajectory integrate(const HamiltonianProblem& problem, SchemeId scheme, double h, int n_steps,
                     const BrownianPath& path, const SolverConfig& solver = {},
                     IntegrateOptions options = {});
Trajectory integrate(const HamiltonianProblem& problem, SchemeId scheme, const TimeGrid& grid,
                     const BrownianPath& path, const SolverConfig& solver = {},
                     IntegrateOptions options = {});
/// Same, from an explicit starting state.
Trajectory integrate_from(const HamiltonianProblem& problem, SchemeId scheme,
                          const PhaseState& start, double h, int n_steps,
                          const BrownianPath& path, const SolverConfig& solver = {},
                          IntegrateOptions options = {});

/// Total number of one-step-map invocations made by this process.
std::uint64_t step_invocations();

}  // namespace hamdrift
