// SPDX-License-Identifier: Apache-2.0
#include "hamdrift/integrators.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "hamdrift/quadrature.hpp"

namespace hamdrift {

namespace {

std::atomic<std::uint64_t> g_step_invocations{0};

void count_step() { g_step_invocations.fetch_add(1, std::memory_order_relaxed); }

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string diverged_message(SchemeId scheme, int iterations, double last_update,
                             std::optional<int> step, std::optional<std::int64_t> sample) {
    std::string msg = fmt::format(
        "{} implicit solve did not converge after {} iterations (last update {:.3e}); "
        "the step size is likely too large",
        to_string(scheme), iterations, last_update);
    if (step) msg += fmt::format(" [step {}]", *step);
    if (sample) msg += fmt::format(" [sample {}]", *sample);
    return msg;
}

void check_noise(const HamiltonianProblem& problem, const Vector& dW) {
    if (dW.size() != problem.dim_w) {
        throw DimensionMismatch(fmt::format("{}: noise increment has length {}, expected {}",
                                            problem.name, dW.size(), problem.dim_w));
    }
}

// int_0^1 s V''(q + s h psi) ds
Matrix weighted_hessian(const HamiltonianProblem& problem, const Vector& q, const Vector& psi,
                        double h) {
    const auto& rule = quadrature::gauss_legendre(avf_node_count(problem));
    Matrix acc = Matrix::Zero(problem.dim_q, problem.dim_q);
    for (int i = 0; i < rule.size(); ++i) {
        const double s = rule.nodes[i];
        acc += (rule.weights[i] * s) * problem.hessian_V(q + (s * h) * psi);
    }
    return acc;
}

void require_hessian(const HamiltonianProblem& problem, SchemeId scheme) {
    if (!problem.hessian_V) {
        throw Error(fmt::format("{}: Newton iterations for {} need the Hessian of V", problem.name,
                                to_string(scheme)));
    }
}

}  // namespace

std::string_view to_string(SchemeId id) {
    switch (id) {
        case SchemeId::DP: return "DP";
        case SchemeId::EM: return "EM";
        case SchemeId::BEM: return "BEM";
        case SchemeId::STM: return "STM";
        case SchemeId::SYMP: return "SYMP";
        case SchemeId::SPLIT: return "SPLIT";
    }
    return "?";
}

SchemeId parse_scheme(std::string_view name) {
    const std::string key = lower(name);
    for (SchemeId id : {SchemeId::DP, SchemeId::EM, SchemeId::BEM, SchemeId::STM, SchemeId::SYMP,
                        SchemeId::SPLIT}) {
        if (key == lower(to_string(id))) return id;
    }
    throw Error(fmt::format("unknown scheme '{}' (expected DP, EM, BEM, STM, SYMP or SPLIT)", name));
}

bool is_implicit(SchemeId id) { return id == SchemeId::DP || id == SchemeId::BEM; }

std::string_view to_string(SolverMethod method) {
    return method == SolverMethod::Newton ? "newton" : "fixed-point";
}

SolverMethod parse_solver_method(std::string_view name) {
    const std::string key = lower(name);
    if (key == "newton") return SolverMethod::Newton;
    if (key == "fixed-point" || key == "fixed_point" || key == "fixedpoint") {
        return SolverMethod::FixedPoint;
    }
    throw Error(fmt::format("unknown solver '{}' (expected fixed-point or newton)", name));
}

void SolverConfig::validate() const {
    if (!(tol > 0.0)) throw Error(fmt::format("solver tolerance must be positive, got {}", tol));
    if (max_iter < 1) throw Error(fmt::format("solver max_iter must be >= 1, got {}", max_iter));
}

SolverDiverged::SolverDiverged(SchemeId scheme, int iterations, double last_update,
                               std::optional<int> step, std::optional<std::int64_t> sample)
    : Error(diverged_message(scheme, iterations, last_update, step, sample)), scheme_(scheme),
      iterations_(iterations), last_update_(last_update), step_(step), sample_(sample) {}

SolverDiverged SolverDiverged::at_step(int step) const {
    return SolverDiverged(scheme_, iterations_, last_update_, step, sample_);
}

SolverDiverged SolverDiverged::at_sample(std::int64_t sample) const {
    return SolverDiverged(scheme_, iterations_, last_update_, step_, sample);
}

int avf_node_count(const HamiltonianProblem& problem) {
    if (problem.poly_degree) return std::max(1, (*problem.poly_degree + 2) / 2);
    return 16;
}

Vector avf_quadrature(const HamiltonianProblem& problem, const Vector& q, const Vector& psi,
                      double h, int nodes) {
    const auto& rule = quadrature::gauss_legendre(nodes);
    Vector acc = Vector::Zero(q.size());
    for (int i = 0; i < rule.size(); ++i) {
        acc += rule.weights[i] * problem.grad_V(q + (rule.nodes[i] * h) * psi);
    }
    return acc;
}

AvfValue avf_integral_detailed(const HamiltonianProblem& problem, const Vector& q,
                               const Vector& psi, double h) {
    if (q.size() != problem.dim_q || psi.size() != problem.dim_q) {
        throw DimensionMismatch(fmt::format("{}: averaged force needs vectors of length {}",
                                            problem.name, problem.dim_q));
    }
    if (problem.closed_form_avf) return {problem.closed_form_avf(q, psi, h), 0};
    const int nodes = avf_node_count(problem);
    return {avf_quadrature(problem, q, psi, h, nodes), nodes};
}

Vector avf_integral(const HamiltonianProblem& problem, const Vector& q, const Vector& psi,
                    double h) {
    return avf_integral_detailed(problem, q, psi, h).value;
}

StepRecord dp_step(const HamiltonianProblem& problem, const PhaseState& state, const Vector& dW,
                   double h, const SolverConfig& solver) {
    check_dimensions(problem, state);
    check_noise(problem, dW);
    count_step();
    const Vector& q = state.q();
    const Vector b = state.p() + problem.sigma * dW;

    Vector psi = b;
    AvfValue force;
    int iters = 0;
    double update = 0.0;
    bool converged = false;

    if (solver.method == SolverMethod::FixedPoint) {
        // psi <- b - (h/2) avf(psi); the force of the last iterate is reused for p
        while (iters < solver.max_iter) {
            ++iters;
            force = avf_integral_detailed(problem, q, psi, h);
            Vector next = b - (0.5 * h) * force.value;
            update = (next - psi).cwiseAbs().maxCoeff();
            psi = std::move(next);
            if (!std::isfinite(update)) break;
            if (update <= solver.tol) {
                converged = true;
                break;
            }
        }
    } else {
        require_hessian(problem, SchemeId::DP);
        const Matrix eye = Matrix::Identity(problem.dim_q, problem.dim_q);
        while (iters < solver.max_iter) {
            ++iters;
            force = avf_integral_detailed(problem, q, psi, h);
            const Vector residual = psi - b + (0.5 * h) * force.value;
            const Matrix jac = eye + (0.5 * h * h) * weighted_hessian(problem, q, psi, h);
            const Vector delta = jac.partialPivLu().solve(residual);
            psi -= delta;
            update = delta.cwiseAbs().maxCoeff();
            if (!std::isfinite(update)) break;
            if (update <= solver.tol) {
                force = avf_integral_detailed(problem, q, psi, h);
                converged = true;
                break;
            }
        }
    }
    if (!converged || !psi.allFinite()) throw SolverDiverged(SchemeId::DP, iters, update);

    StepRecord rec{PhaseState(q + h * psi, b - h * force.value), h, iters, force.nodes, psi};
    return rec;
}

StepRecord em_step(const HamiltonianProblem& problem, const PhaseState& state, const Vector& dW,
                   double h) {
    check_dimensions(problem, state);
    check_noise(problem, dW);
    count_step();
    const Vector& q = state.q();
    const Vector& p = state.p();
    return {PhaseState(q + h * p, p - h * problem.grad_V(q) + problem.sigma * dW), h, 0, 0, {}};
}

StepRecord bem_step(const HamiltonianProblem& problem, const PhaseState& state, const Vector& dW,
                    double h, const SolverConfig& solver) {
    check_dimensions(problem, state);
    check_noise(problem, dW);
    count_step();
    const Vector& q = state.q();
    const Vector b = state.p() + problem.sigma * dW;

    // unknown p1: p1 = b - h V'(q + h p1)
    Vector p1 = b;
    int iters = 0;
    double update = 0.0;
    bool converged = false;
    if (solver.method == SolverMethod::FixedPoint) {
        while (iters < solver.max_iter) {
            ++iters;
            Vector next = b - h * problem.grad_V(q + h * p1);
            update = (next - p1).cwiseAbs().maxCoeff();
            p1 = std::move(next);
            if (!std::isfinite(update)) break;
            if (update <= solver.tol) {
                converged = true;
                break;
            }
        }
    } else {
        require_hessian(problem, SchemeId::BEM);
        const Matrix eye = Matrix::Identity(problem.dim_q, problem.dim_q);
        while (iters < solver.max_iter) {
            ++iters;
            const Vector q1 = q + h * p1;
            const Vector residual = p1 - b + h * problem.grad_V(q1);
            const Matrix jac = eye + (h * h) * problem.hessian_V(q1);
            const Vector delta = jac.partialPivLu().solve(residual);
            p1 -= delta;
            update = delta.cwiseAbs().maxCoeff();
            if (!std::isfinite(update)) break;
            if (update <= solver.tol) {
                converged = true;
                break;
            }
        }
    }
    if (!converged || !p1.allFinite()) throw SolverDiverged(SchemeId::BEM, iters, update);
    return {PhaseState(q + h * p1, p1), h, iters, 0, {}};
}

StepRecord stm_step(const PhaseState& state, const Vector& dW, double h, double sigma) {
    if (state.dim() != 1 || dW.size() != 1) {
        throw IncompatibleScheme("STM is defined for the scalar unit oscillator only");
    }
    count_step();
    const double c = std::cos(h), s = std::sin(h);
    const double q = state.q()(0), p = state.p()(0), w = sigma * dW(0);
    Vector q1(1), p1(1);
    q1 << c * q + s * p + s * w;
    p1 << -s * q + c * p + c * w;
    return {PhaseState(std::move(q1), std::move(p1)), h, 0, 0, {}};
}

StepRecord symp_step(const HamiltonianProblem& problem, const PhaseState& state, const Vector& dW,
                     double h) {
    check_dimensions(problem, state);
    check_noise(problem, dW);
    count_step();
    const Vector kicked = state.p() - h * problem.grad_V(state.q());
    Vector q1 = state.q() + h * kicked;
    Vector p1 = kicked + problem.sigma * dW;
    return {PhaseState(std::move(q1), std::move(p1)), h, 0, 0, {}};
}

StepRecord split_step(const HamiltonianProblem& problem, const PhaseState& state,
                      const Vector& dW, const Vector* dZ, double h) {
    check_dimensions(problem, state);
    check_noise(problem, dW);
    if (dZ == nullptr) throw Error("SPLIT needs area increments dZ");
    if (dZ->size() != problem.dim_w) {
        throw DimensionMismatch(fmt::format("{}: area increment has length {}, expected {}",
                                            problem.name, dZ->size(), problem.dim_w));
    }
    count_step();
    // flow of dq = p dt, dp = Sigma dW, then the potential kick
    const Vector drifted = state.p() + problem.sigma * dW;
    Vector q1 = state.q() + h * state.p() + problem.sigma * (*dZ);
    Vector p1 = drifted - h * problem.grad_V(q1);
    return {PhaseState(std::move(q1), std::move(p1)), h, 0, 0, {}};
}

void check_compatible(SchemeId scheme, const HamiltonianProblem& problem) {
    if (scheme == SchemeId::STM && !problem.unit_oscillator) {
        throw IncompatibleScheme(fmt::format(
            "STM applies only to the unit-frequency linear oscillator, not '{}'", problem.name));
    }
}

bool needs_area(SchemeId scheme) { return scheme == SchemeId::SPLIT; }

StepRecord step(SchemeId scheme, const HamiltonianProblem& problem, const PhaseState& state,
                const Vector& dW, const Vector* dZ, double h, const SolverConfig& solver) {
    switch (scheme) {
        case SchemeId::DP: return dp_step(problem, state, dW, h, solver);
        case SchemeId::EM: return em_step(problem, state, dW, h);
        case SchemeId::BEM: return bem_step(problem, state, dW, h, solver);
        case SchemeId::STM:
            check_compatible(scheme, problem);
            return stm_step(state, dW, h, problem.sigma(0, 0));
        case SchemeId::SYMP: return symp_step(problem, state, dW, h);
        case SchemeId::SPLIT: return split_step(problem, state, dW, dZ, h);
    }
    throw Error("unreachable scheme");
}

Trajectory integrate_from(const HamiltonianProblem& problem, SchemeId scheme,
                          const PhaseState& start, double h, int n_steps,
                          const BrownianPath& path, const SolverConfig& solver,
                          IntegrateOptions options) {
    check_compatible(scheme, problem);
    check_dimensions(problem, start);
    if (is_implicit(scheme)) solver.validate();
    if (n_steps < 0) throw Error("integrate: negative step count");
    if (path.steps() < n_steps) {
        throw Error(fmt::format("integrate: path has {} increments, {} steps requested",
                                path.steps(), n_steps));
    }
    if (n_steps > 0 && std::abs(path.h - h) > 1e-12 * h) {
        throw Error(fmt::format("integrate: path step {} does not match h = {}", path.h, h));
    }
    if (n_steps > 0 && path.dim() != problem.dim_w) {
        throw DimensionMismatch(fmt::format("integrate: path has noise dimension {}, expected {}",
                                            path.dim(), problem.dim_w));
    }
    if (needs_area(scheme) && n_steps > 0 && !path.has_area()) {
        throw Error("integrate: SPLIT needs a path sampled with area increments");
    }

    Trajectory traj{start, {}, {}};
    if (options.record_energy) {
        traj.energies.reserve(n_steps + 1);
        traj.energies.push_back(energy(problem, start));
    }
    if (!options.final_only) traj.steps.reserve(n_steps);

    PhaseState current = start;
    Vector dZ;
    for (int n = 0; n < n_steps; ++n) {
        const Vector dW = path.increment(n);
        if (path.has_area()) dZ = path.area(n);
        StepRecord rec = [&] {
            try {
                return step(scheme, problem, current, dW, path.has_area() ? &dZ : nullptr, h,
                            solver);
            } catch (const SolverDiverged& e) {
                throw e.at_step(n);
            }
        }();
        rec.t = (n + 1) * h;
        current = rec.state;
        if (options.record_energy) traj.energies.push_back(energy(problem, current));
        if (options.final_only) {
            if (n + 1 == n_steps) traj.steps.push_back(std::move(rec));
        } else {
            traj.steps.push_back(std::move(rec));
        }
    }
    return traj;
}

Trajectory integrate(const HamiltonianProblem& problem, SchemeId scheme, double h, int n_steps,
                     const BrownianPath& path, const SolverConfig& solver,
                     IntegrateOptions options) {
    return integrate_from(problem, scheme, problem.initial, h, n_steps, path, solver, options);
}

Trajectory integrate(const HamiltonianProblem& problem, SchemeId scheme, const TimeGrid& grid,
                     const BrownianPath& path, const SolverConfig& solver,
                     IntegrateOptions options) {
    return integrate(problem, scheme, grid.h(), grid.n_steps(), path, solver, options);
}

std::uint64_t step_invocations() { return g_step_invocations.load(std::memory_order_relaxed); }

}  // namespace hamdrift
