// SPDX-License-Identifier: Apache-2.0
#include "hamdrift/problems.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

namespace hamdrift {

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

Matrix diagonal_sigma(int m, double s) { return s * Matrix::Identity(m, m); }

// int_0^1 c sin(q + s x) ds for x = h psi; the product form avoids the
// cancellation in cos q - cos(q + x), and a Taylor expansion covers x -> 0.
double pendulum_avf(double q, double x, double c) {
    if (std::abs(x) < 1e-4) {
        return c * (std::sin(q) + 0.5 * x * std::cos(q) - x * x / 6.0 * std::sin(q));
    }
    return c * 2.0 * std::sin(q + 0.5 * x) * std::sin(0.5 * x) / x;
}

HamiltonianProblem oscillator() {
    HamiltonianProblem pb;
    pb.name = "oscillator";
    pb.grad_V = [](const Vector& q) -> Vector { return q; };
    pb.potential_V = [](const Vector& q) { return 0.5 * q.squaredNorm(); };
    pb.hessian_V = [](const Vector& q) -> Matrix { return Matrix::Identity(q.size(), q.size()); };
    pb.poly_degree = 1;
    pb.closed_form_avf = [](const Vector& q, const Vector& psi, double h) -> Vector {
        return q + (0.5 * h) * psi;
    };
    pb.sigma = diagonal_sigma(1, 1.0);
    pb.initial = PhaseState(vec({1.0}), vec({0.0}));
    pb.unit_oscillator = true;
    return pb;
}

HamiltonianProblem pendulum(double c) {
    HamiltonianProblem pb;
    pb.name = "pendulum";
    pb.grad_V = [c](const Vector& q) -> Vector { return c * q.array().sin().matrix(); };
    pb.potential_V = [c](const Vector& q) { return -c * q.array().cos().sum(); };
    pb.hessian_V = [c](const Vector& q) -> Matrix {
        return (c * q.array().cos()).matrix().asDiagonal();
    };
    pb.closed_form_avf = [c](const Vector& q, const Vector& psi, double h) -> Vector {
        Vector out(q.size());
        for (Eigen::Index i = 0; i < q.size(); ++i) out(i) = pendulum_avf(q(i), h * psi(i), c);
        return out;
    };
    pb.sigma = diagonal_sigma(1, 0.25);
    pb.initial = PhaseState(vec({std::numbers::sqrt2}), vec({1.0}));
    return pb;
}

HamiltonianProblem double_well() {
    HamiltonianProblem pb;
    pb.name = "double-well";
    pb.grad_V = [](const Vector& q) -> Vector {
        return (q.array().cube() - q.array()).matrix();
    };
    pb.potential_V = [](const Vector& q) {
        return (0.25 * q.array().pow(4) - 0.5 * q.array().square()).sum();
    };
    pb.hessian_V = [](const Vector& q) -> Matrix {
        return (3.0 * q.array().square() - 1.0).matrix().asDiagonal();
    };
    pb.poly_degree = 3;
    pb.closed_form_avf = [](const Vector& q, const Vector& psi, double h) -> Vector {
        const auto qa = q.array();
        const auto x = psi.array();
        return (qa.cube() - qa - 0.5 * h * x + 1.5 * h * qa.square() * x +
                h * h * qa * x.square() + 0.25 * h * h * h * x.cube())
            .matrix();
    };
    pb.sigma = diagonal_sigma(1, 0.5);
    pb.initial = PhaseState(vec({std::numbers::sqrt2}), vec({std::numbers::sqrt2}));
    return pb;
}

HamiltonianProblem henon_heiles(double a) {
    HamiltonianProblem pb;
    pb.name = "henon-heiles";
    pb.dim_q = 2;
    pb.dim_w = 2;
    pb.grad_V = [a](const Vector& q) -> Vector {
        return vec({q(0) + a * (q(1) * q(1) - q(0) * q(0)), q(1) + 2.0 * a * q(0) * q(1)});
    };
    pb.potential_V = [a](const Vector& q) {
        return 0.5 * q.squaredNorm() + a * (q(0) * q(1) * q(1) - q(0) * q(0) * q(0) / 3.0);
    };
    pb.hessian_V = [a](const Vector& q) -> Matrix {
        Matrix hess(2, 2);
        hess << 1.0 - 2.0 * a * q(0), 2.0 * a * q(1), 2.0 * a * q(1), 1.0 + 2.0 * a * q(0);
        return hess;
    };
    pb.poly_degree = 2;
    pb.closed_form_avf = [a](const Vector& q, const Vector& psi, double h) -> Vector {
        const double q1 = q(0), q2 = q(1), x1 = psi(0), x2 = psi(1);
        const double sq1 = q1 * q1 + h * x1 * q1 + h * h / 3.0 * x1 * x1;
        const double sq2 = q2 * q2 + h * x2 * q2 + h * h / 3.0 * x2 * x2;
        const double cross = q1 * q2 + 0.5 * h * (q1 * x2 + q2 * x1) + h * h / 3.0 * x1 * x2;
        return vec({q1 + 0.5 * h * x1 + a * (sq2 - sq1), q2 + 0.5 * h * x2 + 2.0 * a * cross});
    };
    pb.sigma = diagonal_sigma(2, 0.2);
    pb.initial = PhaseState(vec({std::sqrt(3.0), 1.0}), vec({1.0, 1.0}));
    return pb;
}

}  // namespace

std::string_view to_string(ProblemId id) {
    switch (id) {
        case ProblemId::Oscillator: return "oscillator";
        case ProblemId::Pendulum: return "pendulum";
        case ProblemId::DoubleWell: return "double-well";
        case ProblemId::HenonHeiles: return "henon-heiles";
    }
    return "?";
}

ProblemId parse_problem(std::string_view name) {
    std::string key(name);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) {
        return c == '_' ? '-' : static_cast<char>(std::tolower(c));
    });
    for (ProblemId id : {ProblemId::Oscillator, ProblemId::Pendulum, ProblemId::DoubleWell,
                         ProblemId::HenonHeiles}) {
        if (key == to_string(id)) return id;
    }
    throw Error(fmt::format(
        "unknown problem '{}' (expected oscillator, pendulum, double-well or henon-heiles)", name));
}

HamiltonianProblem make_problem(ProblemId id, const ProblemOverrides& overrides) {
    if (overrides.scale && id != ProblemId::Pendulum) {
        throw Error("the nonlinearity scale applies to the pendulum only");
    }
    if (overrides.alpha && id != ProblemId::HenonHeiles) {
        throw Error("alpha applies to the Henon-Heiles problem only");
    }
    if (overrides.scale && !std::isfinite(*overrides.scale)) throw Error("scale must be finite");
    if (overrides.alpha && !std::isfinite(*overrides.alpha)) throw Error("alpha must be finite");

    HamiltonianProblem pb = [&] {
        switch (id) {
            case ProblemId::Oscillator: return oscillator();
            case ProblemId::Pendulum: return pendulum(overrides.scale.value_or(1.0));
            case ProblemId::DoubleWell: return double_well();
            case ProblemId::HenonHeiles: return henon_heiles(overrides.alpha.value_or(1.0 / 16.0));
        }
        throw Error("unknown problem id");
    }();

    if (overrides.sigma) {
        if (!std::isfinite(*overrides.sigma)) throw Error("sigma must be finite");
        pb.sigma = diagonal_sigma(pb.dim_q, *overrides.sigma);
    }
    if (overrides.sigma_matrix) {
        pb.sigma = *overrides.sigma_matrix;
        pb.dim_w = static_cast<int>(pb.sigma.cols());
        if (pb.unit_oscillator && pb.dim_w != 1) pb.unit_oscillator = false;
    }
    if (overrides.q0 || overrides.p0) {
        pb.initial = PhaseState(overrides.q0.value_or(pb.initial.q()),
                                overrides.p0.value_or(pb.initial.p()));
    }
    pb.validate();
    return pb;
}

OscillatorMoments oscillator_exact_moments(double p0, double q0, double sigma, double t) {
    if (t < 0.0) throw Error(fmt::format("oscillator_exact_moments: t must be >= 0, got {}", t));
    const double c = std::cos(t), s = std::sin(t), s2 = sigma * sigma;
    OscillatorMoments m;
    m.t = t;
    m.mean_q = q0 * c + p0 * s;
    m.mean_p = p0 * c - q0 * s;
    m.var_q = s2 * (0.5 * t - 0.25 * std::sin(2.0 * t));
    m.var_p = s2 * (0.5 * t + 0.25 * std::sin(2.0 * t));
    m.cov_qp = 0.5 * s2 * s * s;
    return m;
}

}  // namespace hamdrift
