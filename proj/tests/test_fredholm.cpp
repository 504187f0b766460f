#include "srdetect/errors.hpp"
#include "srdetect/exact_exp.hpp"
#include "srdetect/fredholm.hpp"
#include "srdetect/montecarlo.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace srdetect;

namespace {

double sup_diff(const GridFunction& u, const std::function<double(double)>& f) {
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) d = std::max(d, std::abs(u[i] - f(u.grid().node(i))));
    return d;
}

const double kA = 1.664845645920050;
const double kRA = 0.632435495178921;

} // namespace

TEST_CASE("trivial and geometric-series equations") {
    const auto grid = GridSpec{}.make(1.5);
    const auto one = GridFunction::constant(grid, 1.0);
    const auto u0 = solve_second_kind([](double, double) { return 0.0; }, one, grid);
    CHECK(sup_diff(u0, [](double) { return 1.0; }) == 0.0);

    const double c = 0.4;
    LinearSolveDiagnostics diag;
    const auto u = solve_second_kind([c](double, double) { return c; }, one, grid, &diag);
    CHECK(sup_diff(u, [&](double) { return 1.0 / (1.0 - c * 1.5); }) < 1e-12);
    CHECK(diag.relative_residual <= 1e-12);
    CHECK(diag.condition_estimate >= 1.0);
    // Off-node via the natural interpolant.
    CHECK(u(0.123456) == doctest::Approx(1.0 / (1.0 - c * 1.5)).epsilon(1e-12));

    // Kernel with cA = 1 makes I - K singular.
    CHECK_THROWS_AS(solve_second_kind([](double, double) { return 1.0 / 1.5; }, one, grid), NumericFailure);
}

TEST_CASE("ARL and E_0 delay match closed forms") {
    const auto m = exponential_model(2.0);
    for (double A : {0.5, 1.0, kA, 1.95}) {
        const auto phi = arl_false_alarm(m, A);
        const auto d0 = add_at_change_zero(m, A);
        CHECK(sup_diff(phi, [&](double r) { return exact::phi_exact(r, A); }) < 1e-10);
        CHECK(sup_diff(d0, [&](double r) { return exact::delta0_exact(r, A); }) < 1e-10);
        CHECK(phi.has_natural_interpolant());
        for (double r : {0.0, 0.3 * A, 0.9 * A}) {
            CHECK(phi(r) == doctest::Approx(exact::phi_exact(r, A)).epsilon(1e-10));
            CHECK(d0(r) == doctest::Approx(exact::delta0_exact(r, A)).epsilon(1e-10));
        }
    }
    CHECK(arl_false_alarm(m, kA)(kRA) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(add_at_change_zero(m, kA)(kRA) == doctest::Approx(1.316217747589461).epsilon(1e-12));
    CHECK(arl_false_alarm(m, 1.0)(0.0) == doctest::Approx(1.765197109517251).epsilon(1e-12));
    CHECK(add_at_change_zero(m, 1.0)(0.0) == doctest::Approx(1.276724254803969).epsilon(1e-12));
}

TEST_CASE("small threshold limit") {
    const auto m = exponential_model(2.0);
    const double A = 1e-6;
    CHECK(arl_false_alarm(m, A)(0.0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(add_at_change_zero(m, A)(0.0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(psi(m, GridSpec{}.make(A))(0.0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("delay and survival sequences") {
    const auto m = exponential_model(2.0);
    const auto grid = GridSpec{}.make(kA);
    const auto phi = arl_false_alarm(m, grid);
    const auto d0 = add_at_change_zero(m, grid);
    const std::size_t nu_max = 400;
    const auto seq = delay_and_survival_sequences(m, d0, nu_max);
    REQUIRE(seq.delay.size() == nu_max + 1);
    CHECK(sup_diff(seq.delay[0], [&](double r) { return d0(r); }) == 0.0);
    CHECK(sup_diff(seq.survival[0], [](double) { return 1.0; }) == 0.0);

    // rho_1(r) = A / (2(1+r)).
    CHECK(sup_diff(seq.survival[1], [](double r) { return kA / (2.0 * (1.0 + r)); }) < 1e-13);

    std::vector<double> sum(grid->size(), 0.0);
    for (std::size_t nu = 0; nu <= nu_max; ++nu) {
        for (std::size_t i = 0; i < grid->size(); ++i) {
            const double rho = seq.survival[nu][i];
            REQUIRE(rho > 0.0);
            REQUIRE(rho <= 1.0);
            if (nu > 0) REQUIRE(rho <= seq.survival[nu - 1][i]);
            sum[i] += rho;
        }
    }
    for (std::size_t i = 0; i < grid->size(); ++i) {
        CHECK(sum[i] == doctest::Approx(phi[i]).epsilon(1e-10));
    }

    // From nu = 1 on, the conditional delay is the same for every nu and r.
    const double dbar = 1.316217747589461;
    for (std::size_t nu = 1; nu <= 30; ++nu) {
        const auto c = cadd(seq.delay[nu], seq.survival[nu]);
        CHECK(sup_diff(c, [&](double) { return dbar; }) < 1e-10);
    }
    const auto c0 = cadd(seq.delay[0], seq.survival[0]);
    CHECK(sup_diff(c0, [&](double r) { return d0(r); }) == 0.0);
}

TEST_CASE("psi and the integral bound at the equalizer") {
    const auto m = exponential_model(2.0);
    const SrrCharacteristics srr(m, kA);
    CHECK(srr.integral_lower_bound(kRA) == doctest::Approx(1.316217747589461).epsilon(1e-10));
    // psi = delta_0 + dbar (phi - 1), since every nu >= 1 term is rho_nu dbar.
    const double dbar = 1.316217747589461;
    CHECK(sup_diff(srr.psi(), [&](double r) { return srr.delta0()(r) + dbar * (srr.phi()(r) - 1.0); }) < 1e-10);
    CHECK(srr.psi()(kRA) == doctest::Approx(srr.delta0()(kRA) * srr.phi()(kRA)).epsilon(1e-10));
    // psi from its own equation vs the sum of iterated delays.
    const auto seq = delay_and_survival_sequences(m, srr.delta0(), 400);
    for (double r : {0.0, kRA, 1.5}) {
        double s = 0.0;
        for (const auto& d : seq.delay) s += d(r);
        CHECK(srr.psi()(r) == doctest::Approx(s).epsilon(1e-10));
    }
}

TEST_CASE("SR-r characteristics object") {
    const auto m = exponential_model(2.0);
    const SrrCharacteristics srr(m, kA);
    const auto s = srr.cadd_sequence(kRA, 20);
    REQUIRE(s.size() == 21);
    for (double c : s) CHECK(c == doctest::Approx(1.316217747589461).epsilon(1e-10));
    const auto s0 = srr.cadd_sequence(0.0, TruncationRule{});
    CHECK(s0.front() == doctest::Approx(1.842671487826419).epsilon(1e-10));
    CHECK(s0.size() < 20);
    CHECK(*std::max_element(s0.begin(), s0.end()) == s0.front());
}

TEST_CASE("phi is nonincreasing in the head start") {
    for (const auto& [m, A] : {std::pair{exponential_model(2.0), 1.5}, std::pair{gaussian_model(1.0), 20.0}}) {
        const auto phi = arl_false_alarm(m, A);
        for (std::size_t i = 1; i < phi.size(); ++i) {
            REQUIRE(phi[i] <= phi[i - 1] + 1e-9);
        }
    }
}

TEST_CASE("grid refinement") {
    const auto m = exponential_model(2.0);
    for (double A : {0.5, 1.0, kA}) {
        const SrrCharacteristics coarse(m, A, GridSpec{256});
        const SrrCharacteristics fine(m, A, GridSpec{512});
        for (double r : {0.0, 0.1, 0.25 * A, 0.5 * A, 0.99 * A}) {
            CHECK(std::abs(coarse.phi()(r) - fine.phi()(r)) < 1e-8);
            CHECK(std::abs(coarse.delta0()(r) - fine.delta0()(r)) < 1e-8);
            CHECK(std::abs(coarse.psi()(r) - fine.psi()(r)) < 1e-8);
        }
    }
    // Gaussian: smooth kernel, GL converges quickly.
    const auto g = gaussian_model(1.0);
    const double A = 20.0;
    const auto p256 = arl_false_alarm(g, A, GridSpec{256});
    const auto p512 = arl_false_alarm(g, A, GridSpec{512});
    for (double r : {0.0, 5.0, 15.0}) {
        CHECK(std::abs(p256(r) - p512(r)) < 1e-6 * p512(r));
    }
}

TEST_CASE("gaussian ARL and delay agree with simulation") {
    const auto g = gaussian_model(1.0);
    const double A = 20.0;
    const SrrCharacteristics srr(g, A);
    MCOptions mc;
    mc.runs = 40000;
    mc.seed = 2024;
    for (double r : {0.0, 4.0}) {
        const auto arl = estimate_arl(g, HeadStart::deterministic(r), A, mc);
        CHECK(std::abs(arl.mean - srr.phi()(r)) < 4.0 * arl.std_error);
        const auto d = estimate_cadd(g, HeadStart::deterministic(r), A, 0, mc);
        CHECK(std::abs(d.mean - srr.delta0()(r)) < 4.0 * d.std_error);
    }
}

TEST_CASE("cadd guards against vanishing survival") {
    const auto grid = GridSpec{16}.make(1.0);
    const auto d = GridFunction::constant(grid, 1.0);
    const auto tiny = GridFunction::constant(grid, 1e-13);
    CHECK_THROWS_AS(cadd(d, tiny), NumericFailure);
}
