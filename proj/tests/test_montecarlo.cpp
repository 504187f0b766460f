#include "srdetect/errors.hpp"
#include "srdetect/exact_exp.hpp"
#include "srdetect/montecarlo.hpp"
#include "srdetect/quasi_stationary.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace srdetect;

namespace {

MCOptions opts(std::uint64_t runs, std::uint64_t seed, unsigned threads = 1) {
    MCOptions o;
    o.runs = runs;
    o.seed = seed;
    o.threads = threads;
    return o;
}

HeadStart srp_start(double B) {
    return HeadStart::quasi_stationary(std::make_shared<const QuasiStationary>(solve_qsd(exponential_model(2.0), B)));
}

} // namespace

TEST_CASE("estimates are independent of the worker count") {
    const auto m = exponential_model(2.0);
    const auto hs = HeadStart::deterministic(0.2);
    const auto a = estimate_arl(m, hs, 1.5, opts(20000, 3, 1));
    const auto b = estimate_arl(m, hs, 1.5, opts(20000, 3, 4));
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    const auto c = estimate_cadd(m, hs, 1.5, 2, opts(20000, 3, 1));
    const auto d = estimate_cadd(m, hs, 1.5, 2, opts(20000, 3, 3));
    CHECK(c.mean == d.mean);
    CHECK(c.n_runs == d.n_runs);
    const auto ra = simulate_runs(m, hs, 1.5, std::nullopt, opts(10000, 9, 1));
    const auto rb = simulate_runs(m, hs, 1.5, std::nullopt, opts(10000, 9, 2));
    for (std::size_t i = 0; i < ra.size(); ++i) REQUIRE(ra[i].stopping_time == rb[i].stopping_time);
}

TEST_CASE("tiny threshold") {
    const auto m = exponential_model(2.0);
    const auto e = estimate_arl(m, HeadStart::deterministic(0.0), 1e-12, opts(1000, 1));
    CHECK(e.mean == 1.0);
    CHECK(e.std_error == 0.0);
    const auto ir = estimate_integral_add(m, HeadStart::deterministic(0.0), 1e-12, 0.0, std::nullopt, opts(1000, 1));
    CHECK(ir.estimate.mean == 1.0);
    CHECK(ir.nu_max == 1);
}

TEST_CASE("censoring is reported") {
    const auto m = exponential_model(2.0);
    MCOptions o = opts(500, 1);
    o.cap = 3;
    const auto e = estimate_arl(m, HeadStart::deterministic(0.0), 1e6, o);
    CHECK(e.n_censored == 500);
    CHECK(e.unreliable());
    CHECK(e.mean == 3.0);
}

TEST_CASE("conditioning by rejection") {
    const auto m = exponential_model(2.0);
    const double A = 1.664845645920050;
    const auto e = estimate_cadd(m, HeadStart::deterministic(0.0), A, 1, opts(100000, 4));
    CHECK(e.n_drawn == 100000);
    // Acceptance rate is P_inf(T > 1) = A/2.
    CHECK(std::abs(e.acceptance_rate() - A / 2) < 4 * std::sqrt(A / 2 * (1 - A / 2) / 1e5));
    CHECK(std::abs(e.mean - exact::srp_add_exact(A)) < 4 * e.std_error);
    CHECK_THROWS_AS(estimate_cadd(m, HeadStart::deterministic(0.0), A, 5, MCOptions{10, 1, 5, 1}), ValidationError);
}

TEST_CASE("closed-form agreement") {
    const auto m = exponential_model(2.0);
    const double B = std::expm1(1.0);
    const auto hs = srp_start(B);
    const auto arl = estimate_arl(m, hs, B, opts(200000, 21));
    CHECK(std::abs(arl.mean - 2.0) < 3.5 * arl.std_error);
    const auto d = estimate_cadd(m, hs, B, 0, opts(200000, 22));
    CHECK(std::abs(d.mean - 1.332745416309832) < 3.5 * d.std_error);

    const double A = 1.0;
    const auto sr = estimate_arl(m, HeadStart::deterministic(0.0), A, opts(200000, 23));
    CHECK(std::abs(sr.mean - exact::phi_exact(0.0, A)) < 3.5 * sr.std_error);
    const auto r1 = estimate_arl(m, srp_start(1.0), 1.0, opts(200000, 24));
    CHECK(std::abs(r1.mean - exact::srp_arl_exact(1.0)) < 3.5 * r1.std_error);
}

TEST_CASE("integral delay at the equalizer") {
    const auto m = exponential_model(2.0);
    const double A = 1.664845645920050, rA = 0.632435495178921;
    const auto ir = estimate_integral_add(m, HeadStart::deterministic(rA), A, rA, std::nullopt, opts(20000, 31));
    CHECK(std::abs(ir.estimate.mean - 1.316217747589461) < 4 * ir.estimate.std_error);
    CHECK(ir.tail_probability < 1e-3);
    CHECK(ir.truncation_bound < 1e-3);
    CHECK(ir.nu_max >= 5);

    const auto fixed = estimate_integral_add(m, HeadStart::deterministic(rA), A, rA, 30, opts(5000, 31));
    CHECK(fixed.nu_max == 30);
    CHECK(fixed.estimate.n_drawn == 5000 * 32);
}

TEST_CASE("supremum over changepoints") {
    const auto m = exponential_model(2.0);
    const double A = 1.664845645920050;
    const std::vector<std::uint64_t> nus{0, 1, 2, 5};
    const auto jp = estimate_jp(m, HeadStart::deterministic(0.0), A, nus, opts(50000, 41));
    REQUIRE(jp.by_nu.size() == 4);
    CHECK(jp.nu_at_sup == 0);
    CHECK(std::abs(jp.sup.mean - 1.842671487826419) < 4 * jp.sup.std_error);
    CHECK_THROWS_AS(estimate_jp(m, HeadStart::deterministic(0.0), A, {}, opts(10, 1)), ValidationError);
}
