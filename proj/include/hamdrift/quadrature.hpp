// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace hamdrift::quadrature {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;

    int size() const { return static_cast<int>(nodes.size()); }
};

inline constexpr int kMaxNodes = 64;

/// Gauss-Legendre rule on [0, 1]; exact for polynomials of degree 2n-1.
const Rule& gauss_legendre(int n);

/// Gauss-Hermite rule for the standard normal density: sum_i w_i f(x_i)
/// approximates E[f(X)], X ~ N(0, 1). Weights sum to one.
const Rule& gauss_hermite(int n);

}  // namespace hamdrift::quadrature
