#include "srdetect/errors.hpp"
#include "srdetect/quasi_stationary.hpp"
#include "srdetect/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace srdetect;

TEST_CASE("uniform quasi-stationary law below threshold 2") {
    const auto m = exponential_model(2.0);
    const double B = std::expm1(1.0);
    const auto q = solve_qsd(m, B);
    CHECK(std::abs(q.lambda() - 0.5) < 1e-12);
    for (std::size_t i = 0; i < q.density().size(); ++i) {
        REQUIRE(std::abs(q.density()[i] - 1.0 / B) < 1e-10);
        REQUIRE(std::abs(q.cdf()[i] - q.grid()->node(i) / B) < 1e-10);
    }
    CHECK(q.threshold() == B);
    CHECK(q.residual() <= 1e-12);
    for (double b : {0.5, 1.0, 1.5, 1.99}) {
        const auto qb = solve_qsd(m, b);
        CHECK(std::abs(qb.lambda() - 0.5 * std::log1p(b)) < 1e-12);
    }
    CHECK(solve_qsd(m, 1.0).lambda() == doctest::Approx(0.3465735902799727).epsilon(1e-12));
}

TEST_CASE("eigen-residual of the continuous equation") {
    // Smooth kernels only, so the plain rule is an accurate oracle for the integral.
    for (const auto& [m, B] : {std::pair{exponential_model(2.0), 1.5}, std::pair{exponential_model(3.0), 1.2},
                               std::pair{gaussian_model(1.0), 10.0}}) {
        const auto q = solve_qsd(m, B);
        const auto& g = *q.grid();
        double worst = 0.0, peak = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                s += g.weight(i) * q.density()[i] * kernel_pre(m, g.node(j), g.node(i));
            }
            worst = std::max(worst, std::abs(q.lambda() * q.density()[j] - s));
            peak = std::max(peak, q.density()[j]);
        }
        CHECK(worst <= 1e-10 * std::max(1.0, peak));
        // Normalized to a probability density on [0, B].
        double mass = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) mass += g.weight(i) * q.density()[i];
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(q.cdf()(B) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("threshold beyond the support edge") {
    // The kernel cut-off lies inside (0, B); results must still refine.
    const auto m = exponential_model(2.0);
    const auto coarse = solve_qsd(m, 3.0, GridSpec{256});
    const auto fine = solve_qsd(m, 3.0, GridSpec{512});
    CHECK(coarse.residual() <= 1e-12);
    CHECK(std::abs(coarse.lambda() - fine.lambda()) < 1e-5);
    CHECK(coarse.lambda() > 0.5 * std::log1p(2.0));
    double prev = 0.0;
    for (double B : {2.1, 2.5, 3.0, 4.0}) {
        const double l = solve_qsd(m, B).lambda();
        CHECK(l > prev);
        prev = l;
    }
}

TEST_CASE("power iteration agrees with the dense eigenvalue") {
    for (const auto& [m, B] : {std::pair{exponential_model(2.0), 1.0}, std::pair{exponential_model(2.0), 3.5},
                               std::pair{exponential_model(3.0), 2.0}, std::pair{gaussian_model(1.0), 8.0}}) {
        const auto grid = GridSpec{128}.make(B);
        const auto q = solve_qsd(m, grid);
        CHECK(std::abs(q.lambda() - dominant_eigenvalue_dense(m, grid)) < 1e-10);
    }
}

TEST_CASE("sampling from the quasi-stationary law") {
    const auto m = exponential_model(2.0);
    const double B = std::expm1(1.0);
    const auto q = solve_qsd(m, B);
    Rng rng(99, 0);
    std::vector<double> xs(100000);
    for (auto& x : xs) {
        x = sample_qsd(q, rng);
        REQUIRE(x >= 0.0);
        REQUIRE(x < B);
    }
    CHECK(ks_distance(xs, [B](double x) { return std::clamp(x / B, 0.0, 1.0); }) < ks_critical_value_01(xs.size()));

    const auto g = gaussian_model(1.0);
    const auto qg = solve_qsd(g, 10.0);
    std::vector<double> ys(100000);
    for (auto& y : ys) y = qg.sample(rng);
    CHECK(ks_distance(ys, [&](double x) { return qg.cdf()(std::clamp(x, 0.0, 10.0)); }) <
          ks_critical_value_01(ys.size()));
}

TEST_CASE("conditioned statistic settles on the quasi-stationary law") {
    const auto m = exponential_model(2.0);
    const auto q15 = solve_qsd(m, 1.5);
    CHECK(qsd_convergence_check(m, q15, 0.0, 1, 1000000, 7) < 5e-3);
    const auto qe = solve_qsd(m, std::expm1(1.0));
    CHECK(qsd_convergence_check(m, qe, 0.5, 1, 100000, 8) < 1.63 / std::sqrt(100000.0) * 3);
    CHECK(qsd_convergence_check(m, qe, 0.0, 0, 1000, 9) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("solver failures are reported") {
    const auto m = exponential_model(2.0);
    QsdOptions strict;
    strict.max_iter = 1;
    strict.tol = 1e-300;
    CHECK_THROWS_AS(solve_qsd(m, 3.0, GridSpec{}, strict), NumericFailure);
}
