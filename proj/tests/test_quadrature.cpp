// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include "hamdrift/quadrature.hpp"

using namespace hamdrift::quadrature;

namespace {

template <class F>
double apply(const Rule& r, F f) {
    double s = 0.0;
    for (int i = 0; i < r.size(); ++i) s += r.weights[i] * f(r.nodes[i]);
    return s;
}

double double_factorial(int k) {
    double r = 1.0;
    for (; k > 1; k -= 2) r *= k;
    return r;
}

}  // namespace

TEST_CASE("Gauss-Legendre integrates x^k exactly up to degree 2n-1") {
    for (int n : {1, 2, 3, 5, 8, 16, 30}) {
        const Rule& r = gauss_legendre(n);
        CHECK(r.size() == n);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            CAPTURE(n);
            CAPTURE(k);
            CHECK(apply(r, [k](double x) { return std::pow(x, k); }) ==
                  doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
        }
        for (double x : r.nodes) CHECK((x > 0.0 && x < 1.0));
    }
}

TEST_CASE("Gauss-Legendre agrees with adaptive Gauss-Kronrod on smooth integrands") {
    using boost::math::quadrature::gauss_kronrod;
    const auto f = [](double x) { return std::cos(3.0 * x) * std::exp(x); };
    const double oracle = gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-15);
    CHECK(apply(gauss_legendre(16), f) == doctest::Approx(oracle).epsilon(1e-14));
}

TEST_CASE("Gauss-Hermite reproduces standard normal moments") {
    for (int n : {10, 20, 30}) {
        const Rule& r = gauss_hermite(n);
        CHECK(std::accumulate(r.weights.begin(), r.weights.end(), 0.0) ==
              doctest::Approx(1.0).epsilon(1e-14));
        // high moments lose digits to cancellation, so scale by E|X|^k ~ k!!
        for (int k = 0; k <= std::min(2 * n - 1, 20); ++k) {
            CAPTURE(n);
            CAPTURE(k);
            const double exact = (k % 2) ? 0.0 : double_factorial(k - 1);
            const double got = apply(r, [k](double x) { return std::pow(x, k); });
            CHECK(std::abs(got - exact) <= 1e-13 * std::max(1.0, double_factorial(k)));
        }
    }
}

TEST_CASE("Gauss-Hermite nodes are symmetric") {
    const Rule& r = gauss_hermite(31);
    for (int i = 0; i < r.size(); ++i) {
        CHECK(r.nodes[i] == -r.nodes[r.size() - 1 - i]);
        CHECK(r.weights[i] == r.weights[r.size() - 1 - i]);
    }
}

TEST_CASE("Gauss-Hermite expectation of cos matches exp(-1/2)") {
    CHECK(apply(gauss_hermite(30), [](double x) { return std::cos(x); }) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
}

TEST_CASE("rule sizes outside 1..64 are rejected") {
    CHECK_THROWS(gauss_legendre(0));
    CHECK_THROWS(gauss_hermite(kMaxNodes + 1));
    CHECK(&gauss_legendre(4) == &gauss_legendre(4));
}
