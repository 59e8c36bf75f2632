// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hamdrift/core.hpp"
#include "hamdrift/integrators.hpp"

namespace hamdrift {

/**
 * E[H(step(state, dW))] - H(state) over dW ~ N(0, h I_d), by a tensor
 * Gauss-Hermite rule with `nodes` points per noise dimension. For SPLIT the
 * area increment is integrated as well through its conditional law
 * dZ | dW ~ N(h dW / 2, h^3 / 12), doubling the quadrature dimension.
 *
 * Requires d <= 2 and nodes >= 10. A solver failure at any node is reported
 * with the node's flat index.
 */
double conditional_energy_drift(const HamiltonianProblem& problem, SchemeId scheme,
                                const PhaseState& state, double h, int nodes = 30,
                                const SolverConfig& solver = {});

/// One-step map X -> A X + b + B dW on X = (q, p) for a scheme that is affine
/// in state and noise (B already contains Sigma).
struct AffineSchemeMatrices {
    Matrix A;
    Vector b;
    Matrix B;
    double h = 0.0;
};

/// Hand-derived matrices of DP, EM, BEM, STM and SYMP on the unit oscillator.
AffineSchemeMatrices extract_affine(SchemeId scheme, const HamiltonianProblem& problem, double h);

struct GaussianMoments {
    Vector mean;
    Matrix cov;
};

/// mean <- A mean + b, cov <- A cov A^T + h B B^T, iterated n times.
GaussianMoments affine_moment_recursion(const AffineSchemeMatrices& mats, const Vector& mean0,
                                        const Matrix& cov0, int n);
/// All n + 1 iterates of the recursion, starting with (mean0, cov0).
std::vector<GaussianMoments> affine_moment_sequence(const AffineSchemeMatrices& mats,
                                                    const Vector& mean0, const Matrix& cov0,
                                                    int n);

/// E[H] = (|E p|^2 + tr Cov_pp + E[q]^2 + Cov_qq) / 2 for the oscillator moments on (q, p).
double oscillator_energy(const GaussianMoments& m);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<std::pair<double, double>> points;  // the (h, error) pairs used
    std::vector<std::string> warnings;
};

/// Least squares of log(error) on log(h). Non-positive errors are dropped
/// with a warning; fewer than three usable points is an error.
SlopeFit fit_order(const std::vector<std::pair<double, double>>& points);

}  // namespace hamdrift
