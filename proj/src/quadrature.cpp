// SPDX-License-Identifier: Apache-2.0
#include "hamdrift/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "hamdrift/core.hpp"

namespace hamdrift::quadrature {

namespace {

// Newton iteration on P_n from the Chebyshev-like initial guesses, then
// mapped from [-1, 1] to [0, 1].
Rule build_legendre(int n) {
    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute the derivative at the converged root
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
        rule.weights[n - 1 - i] = 0.5 * w;
    }
    return rule;
}

// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
// polynomials (off-diagonal sqrt(k)).
Rule build_hermite(int n) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = eig.eigenvalues()(i);
        rule.weights[i] = eig.eigenvectors()(0, i) * eig.eigenvectors()(0, i);
        total += rule.weights[i];
    }
    for (double& w : rule.weights) w /= total;
    // symmetrise: the rule is exactly symmetric about 0
    for (int i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

template <Rule (*Build)(int)>
const Rule& cached(int n, const char* name) {
    static const std::array<Rule, kMaxNodes + 1> table = [] {
        std::array<Rule, kMaxNodes + 1> t;
        for (int k = 1; k <= kMaxNodes; ++k) t[k] = Build(k);
        return t;
    }();
    if (n < 1 || n > kMaxNodes) {
        throw Error(fmt::format("{}: node count {} outside [1, {}]", name, n, kMaxNodes));
    }
    return table[n];
}

}  // namespace

const Rule& gauss_legendre(int n) { return cached<build_legendre>(n, "gauss_legendre"); }

const Rule& gauss_hermite(int n) { return cached<build_hermite>(n, "gauss_hermite"); }

}  // namespace hamdrift::quadrature
