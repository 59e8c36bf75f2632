// SPDX-License-Identifier: Apache-2.0
#include "hamdrift/verification.hpp"

#include <cmath>

#include <fmt/format.h>

#include "hamdrift/quadrature.hpp"

namespace hamdrift {

double conditional_energy_drift(const HamiltonianProblem& problem, SchemeId scheme,
                                const PhaseState& state, double h, int nodes,
                                const SolverConfig& solver) {
    check_compatible(scheme, problem);
    check_dimensions(problem, state);
    const int d = problem.dim_w;
    if (d > 2) throw Error("conditional_energy_drift: at most two noise dimensions");
    if (nodes < 10) throw Error("conditional_energy_drift: use at least 10 nodes per dimension");
    if (!(h > 0.0)) throw Error("conditional_energy_drift: h must be positive");

    const bool area = needs_area(scheme);
    const int dims = area ? 2 * d : d;
    const auto& rule = quadrature::gauss_hermite(nodes);
    const double sd_w = std::sqrt(h);
    const double sd_z = std::sqrt(h * h * h / 12.0);
    const double h0 = energy(problem, state);

    long total = 1;
    for (int k = 0; k < dims; ++k) total *= nodes;

    std::vector<int> digit(dims, 0);
    Vector dW(d), dZ(d);
    double acc = 0.0;
    for (long flat = 0; flat < total; ++flat) {
        long rest = flat;
        double weight = 1.0;
        for (int k = 0; k < dims; ++k) {
            digit[k] = static_cast<int>(rest % nodes);
            rest /= nodes;
            weight *= rule.weights[digit[k]];
        }
        for (int j = 0; j < d; ++j) {
            dW(j) = sd_w * rule.nodes[digit[j]];
            if (area) dZ(j) = 0.5 * h * dW(j) + sd_z * rule.nodes[digit[d + j]];
        }
        try {
            const StepRecord rec = step(scheme, problem, state, dW, area ? &dZ : nullptr, h, solver);
            acc += weight * (energy(problem, rec.state) - h0);
        } catch (const SolverDiverged& e) {
            throw Error(fmt::format("conditional_energy_drift: {} at quadrature node {}", e.what(),
                                    flat));
        }
    }
    return acc;
}

AffineSchemeMatrices extract_affine(SchemeId scheme, const HamiltonianProblem& problem, double h) {
    if (!problem.unit_oscillator || problem.dim_q != 1 || problem.dim_w != 1) {
        throw Error(fmt::format("extract_affine: '{}' is not the unit oscillator", problem.name));
    }
    const double sigma = problem.sigma(0, 0);
    AffineSchemeMatrices m;
    m.h = h;
    m.A.resize(2, 2);
    m.B.resize(2, 1);
    m.b = Vector::Zero(2);
    switch (scheme) {
        case SchemeId::DP: {
            // psi = c (p + sigma dW - h q / 2), c = 1 / (1 + h^2 / 4)
            const double c = 1.0 / (1.0 + 0.25 * h * h);
            const double damp = 1.0 - 0.5 * c * h * h;
            m.A << damp, c * h, -h + 0.25 * c * h * h * h, damp;
            m.B << c * h * sigma, damp * sigma;
            break;
        }
        case SchemeId::EM:
            m.A << 1.0, h, -h, 1.0;
            m.B << 0.0, sigma;
            break;
        case SchemeId::BEM: {
            // p1 = (p + sigma dW - h q) / (1 + h^2), q1 = q + h p1
            const double k = 1.0 / (1.0 + h * h);
            m.A << 1.0 - h * h * k, h * k, -h * k, k;
            m.B << h * k * sigma, k * sigma;
            break;
        }
        case SchemeId::STM: {
            const double c = std::cos(h), s = std::sin(h);
            m.A << c, s, -s, c;
            m.B << s * sigma, c * sigma;
            break;
        }
        case SchemeId::SYMP:
            m.A << 1.0 - h * h, h, -h, 1.0;
            m.B << 0.0, sigma;
            break;
        case SchemeId::SPLIT:
            throw Error("extract_affine: SPLIT also depends on the area increment");
    }
    return m;
}

std::vector<GaussianMoments> affine_moment_sequence(const AffineSchemeMatrices& mats,
                                                    const Vector& mean0, const Matrix& cov0,
                                                    int n) {
    if (n < 0) throw Error("affine_moment_sequence: n must be >= 0");
    const Matrix noise = mats.h * mats.B * mats.B.transpose();
    std::vector<GaussianMoments> seq;
    seq.reserve(n + 1);
    seq.push_back({mean0, cov0});
    for (int k = 0; k < n; ++k) {
        const GaussianMoments& prev = seq.back();
        Vector mean = mats.A * prev.mean + mats.b;
        Matrix cov = mats.A * prev.cov * mats.A.transpose() + noise;
        cov = 0.5 * (cov + cov.transpose());
        seq.push_back({std::move(mean), std::move(cov)});
    }
    return seq;
}

GaussianMoments affine_moment_recursion(const AffineSchemeMatrices& mats, const Vector& mean0,
                                        const Matrix& cov0, int n) {
    return affine_moment_sequence(mats, mean0, cov0, n).back();
}

double oscillator_energy(const GaussianMoments& m) {
    return 0.5 * (m.mean.squaredNorm() + m.cov.trace());
}

SlopeFit fit_order(const std::vector<std::pair<double, double>>& points) {
    SlopeFit fit;
    for (const auto& [h, err] : points) {
        if (!(err > 0.0) || !(h > 0.0) || !std::isfinite(err)) {
            fit.warnings.push_back(fmt::format("dropped point (h={}, error={})", h, err));
            continue;
        }
        fit.points.emplace_back(h, err);
    }
    const auto n = static_cast<double>(fit.points.size());
    if (fit.points.size() < 3) {
        throw Error(fmt::format("fit_order: need at least 3 usable points, got {}",
                                fit.points.size()));
    }
    double sx = 0.0, sy = 0.0;
    for (const auto& [h, err] : fit.points) {
        sx += std::log(h);
        sy += std::log(err);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [h, err] : fit.points) {
        const double dx = std::log(h) - mx, dy = std::log(err) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw Error("fit_order: all step sizes are equal");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

}  // namespace hamdrift
