// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string_view>

#include "hamdrift/core.hpp"

namespace hamdrift {

enum class ProblemId { Oscillator, Pendulum, DoubleWell, HenonHeiles };

std::string_view to_string(ProblemId id);
/// Accepts "oscillator", "pendulum", "double-well", "henon-heiles".
ProblemId parse_problem(std::string_view name);

struct ProblemOverrides {
    std::optional<double> sigma;         // every diagonal entry of Sigma
    std::optional<Matrix> sigma_matrix;  // full m x d matrix, wins over sigma
    std::optional<double> alpha;         // Henon-Heiles coupling
    std::optional<double> scale;         // pendulum nonlinearity factor c
    std::optional<Vector> q0;
    std::optional<Vector> p0;
};

/**
 * The four benchmark problems.
 *
 *   oscillator    V = q^2/2,                          Sigma = 1,     (p0,q0) = (0, 1)
 *   pendulum      V = -c cos q,                       Sigma = 0.25,  (p0,q0) = (1, sqrt 2)
 *   double-well   V = q^4/4 - q^2/2,                  Sigma = 0.5,   (p0,q0) = (sqrt 2, sqrt 2)
 *   henon-heiles  V = |q|^2/2 + a (q1 q2^2 - q1^3/3), Sigma = diag(0.2, 0.2), a = 1/16,
 *                 p0 = (1, 1), q0 = (sqrt 3, 1)
 *
 * Each carries a Hessian and a closed-form averaged force.
 */
HamiltonianProblem make_problem(ProblemId id, const ProblemOverrides& overrides = {});

struct OscillatorMoments {
    double mean_q = 0.0;
    double mean_p = 0.0;
    double var_q = 0.0;
    double var_p = 0.0;
    double cov_qp = 0.0;
    double t = 0.0;

    double second_q() const { return mean_q * mean_q + var_q; }
    double second_p() const { return mean_p * mean_p + var_p; }
    double expected_energy() const { return 0.5 * (second_p() + second_q()); }
};

/// Exact first and second moments of the unit oscillator with scalar noise sigma dW.
OscillatorMoments oscillator_exact_moments(double p0, double q0, double sigma, double t);

}  // namespace hamdrift
