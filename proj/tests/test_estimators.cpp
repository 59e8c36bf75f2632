// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <doctest.h>

#include "hamdrift/estimators.hpp"
#include "hamdrift/problems.hpp"

using namespace hamdrift;

TEST_CASE("functional names round-trip") {
    for (const char* name : {"energy", "q1", "p2", "q1^2", "p3^2"}) {
        CHECK(Functional::parse(name).name() == name);
    }
    CHECK(Functional::parse("q").name() == "q1");
    CHECK_THROWS_AS(Functional::parse("r1"), Error);
    CHECK_THROWS_AS(Functional::parse("q0"), Error);
    CHECK_THROWS_AS(Functional::parse("q1^3"), Error);

    const auto osc = make_problem(ProblemId::Oscillator);
    const PhaseState s(Vector::Constant(1, 2.0), Vector::Constant(1, -3.0));
    CHECK(Functional::q(0)(osc, s) == 2.0);
    CHECK(Functional::p2(0)(osc, s) == 9.0);
    CHECK(Functional::energy()(osc, s) == 6.5);
    CHECK_THROWS_AS(Functional::q(1)(osc, s), DimensionMismatch);
}

TEST_CASE("sample moments") {
    const auto m = sample_moments({1.0, 2.0, 3.0, 4.0});
    CHECK(m.mean == 2.5);
    CHECK(m.variance == doctest::Approx(5.0 / 3.0));
    CHECK(sample_moments({7.0}).variance == 0.0);
}

TEST_CASE("single-level Monte Carlo") {
    const auto osc = make_problem(ProblemId::Oscillator);
    const TimeGrid g(5.0, 16);

    const auto one = mc_estimate(osc, SchemeId::DP, g, {1, 3, {}, 1});
    CHECK(one.degenerate);
    CHECK(one.std_error == 0.0);
    const auto path = sample_path(3, 0, g, 1, false);
    CHECK(one.estimate ==
          energy(osc, integrate(osc, SchemeId::DP, g, path).final_state()));

    const auto still = make_problem(ProblemId::Oscillator, {.sigma = 0.0});
    const auto det = mc_estimate(still, SchemeId::DP, g, {50, 3, {}, 2});
    CHECK(det.std_error == 0.0);
    CHECK_FALSE(det.degenerate);

    const auto r = mc_estimate(osc, SchemeId::DP, g, {10000, 1, {}, 0});
    CHECK(std::abs(r.estimate - 3.0) <= 4.0 * r.std_error);
    CHECK(r.total_work == 160000.0);
    CHECK_THROWS_AS(mc_estimate(osc, SchemeId::DP, g, {0, 1, {}, 0}), Error);
}

TEST_CASE("results do not depend on the thread count") {
    const auto dw = make_problem(ProblemId::DoubleWell);
    const TimeGrid g(1.0, 32);
    const auto a = mc_estimate(dw, SchemeId::DP, g, {300, 9, {}, 1});
    const auto b = mc_estimate(dw, SchemeId::DP, g, {300, 9, {}, 5});
    CHECK(a.estimate == b.estimate);
    CHECK(a.std_error == b.std_error);

    const auto osc = make_problem(ProblemId::Oscillator);
    MlmcConfig c{3, 0.5, 4, {}, 1.0, 1};
    const auto m1 = mlmc_estimate(osc, SchemeId::DP, c);
    c.threads = 7;
    const auto m7 = mlmc_estimate(osc, SchemeId::DP, c);
    CHECK(m1.estimate == m7.estimate);
    CHECK(m1.std_error == m7.std_error);
}

TEST_CASE("time series") {
    const auto osc = make_problem(ProblemId::Oscillator);
    const TimeGrid g(1.0, 10);
    const auto ts = mc_time_series(osc, SchemeId::DP, g, {200, 2, {}, 0}, {}, 4);
    CHECK(ts.step_index == std::vector<int>{0, 4, 8, 10});
    CHECK(ts.times.back() == 1.0);
    CHECK(ts.mean.front() == 0.5);
    CHECK(ts.std_error.front() == 0.0);
    const auto final = mc_estimate(osc, SchemeId::DP, g, {200, 2, {}, 0});
    CHECK(ts.mean.back() == final.estimate);
}

TEST_CASE("solver failures name the sample") {
    const auto pend = make_problem(ProblemId::Pendulum);
    try {
        mc_estimate(pend, SchemeId::DP, TimeGrid(6.0, 2), {4, 0, {}, 2});
        FAIL("expected SolverDiverged");
    } catch (const SolverDiverged& e) {
        REQUIRE(e.sample());
        CHECK(*e.sample() == 0);
        CHECK(e.step());
    }
}

TEST_CASE("MLMC sample sizes") {
    CHECK(mlmc_sample_sizes(4, 0.5) == std::vector<std::int64_t>{256, 128, 512, 864, 1024});
    CHECK(mlmc_sample_sizes(1, 0.5) == std::vector<std::int64_t>{4, 2});
    for (int L = 1; L < 8; ++L) {
        const auto a = mlmc_sample_sizes(L, 0.3), b = mlmc_sample_sizes(L + 1, 0.3);
        for (int l = 0; l <= L; ++l) CHECK(b[l] >= a[l]);
    }
    CHECK_THROWS_AS(mlmc_sample_sizes(0, 0.5), Error);
    CHECK_THROWS_AS(mlmc_sample_sizes(2, 0.0), Error);
}

TEST_CASE("MLMC without noise telescopes to the finest deterministic solution") {
    const auto still = make_problem(ProblemId::Pendulum, {.sigma = 0.0});
    const auto f = Functional::q(0);
    const auto level_value = [&](int level) {
        const TimeGrid g(1.0, 1 << level);
        BrownianPath zero;
        zero.h = g.h();
        zero.dW = Matrix::Zero(g.n_steps(), 1);
        return f(still, integrate(still, SchemeId::DP, g, zero).final_state());
    };

    const auto r1 = mlmc_estimate(still, SchemeId::DP, {1, 0.5, 0, f, 1.0, 0});
    CHECK(r1.per_level[1].mean == level_value(1) - level_value(0));
    CHECK(r1.per_level[1].variance == 0.0);

    const auto r4 = mlmc_estimate(still, SchemeId::DP, {4, 0.5, 0, f, 1.0, 0});
    CHECK(std::abs(r4.estimate - level_value(4)) <= 1e-14);
    CHECK(r4.std_error == 0.0);
}

TEST_CASE("MLMC on the oscillator") {
    const auto osc = make_problem(ProblemId::Oscillator);
    const auto before = step_invocations();
    const auto r = mlmc_estimate(osc, SchemeId::DP, {4, 0.5, 11, {}, 1.0, 0});
    CHECK(static_cast<double>(step_invocations() - before) == r.total_work);
    CHECK(std::abs(r.estimate - 1.0) <= 4.0 * r.std_error);

    double work = 0.0;
    for (const auto& l : r.per_level) {
        work += l.level == 0 ? l.samples : l.samples * ((1 << l.level) + (1 << (l.level - 1)));
    }
    CHECK(work == r.total_work);
    for (int l = 2; l <= 4; ++l) {
        CAPTURE(l);
        CHECK(r.per_level[l].variance <= 0.6 * r.per_level[l - 1].variance);
    }
}

TEST_CASE("coupled samples re-run bit-exactly") {
    const auto hh = make_problem(ProblemId::HenonHeiles);
    const MlmcConfig cfg{5, 0.5, 21, Functional::q2(1), 1.0, 0};
    for (SchemeId s : {SchemeId::DP, SchemeId::SPLIT}) {
        const auto pair = mlmc_coupled_sample(hh, s, cfg, 3, 17);
        const bool area = needs_area(s);
        const auto fine = sample_path(21, level_stream(3, 17), TimeGrid(1.0, 8), 2, area);
        const auto coarse_x =
            integrate(hh, s, TimeGrid(1.0, 4), coarsen(fine)).final_state();
        CHECK(cfg.functional(hh, coarse_x) == pair.coarse);
        const auto fine_x = integrate(hh, s, TimeGrid(1.0, 8), fine).final_state();
        CHECK(cfg.functional(hh, fine_x) == pair.fine);
    }
}

TEST_CASE("MLMC agrees with single level at matched accuracy") {
    const auto osc = make_problem(ProblemId::Oscillator);
    const auto m = mlmc_estimate(osc, SchemeId::DP, {4, 0.5, 5, {}, 1.0, 0});
    const auto s = mc_estimate(osc, SchemeId::DP, TimeGrid(1.0, 16), {2000, 6, {}, 0});
    CHECK(std::abs(m.estimate - s.estimate) <= 3.0 * (m.std_error + s.std_error));
}
