#include "srdetect/calibrate.hpp"
#include "srdetect/errors.hpp"
#include "srdetect/exact_exp.hpp"
#include "srdetect/montecarlo.hpp"

#include <doctest.h>

#include <cmath>

using namespace srdetect;

TEST_CASE("SRP characteristics from the quasi-stationary average") {
    const auto m = exponential_model(2.0);
    const auto e = srp_characteristics(m, std::expm1(1.0));
    CHECK(e.arl == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(e.add == doctest::Approx(1.332745416309832).epsilon(1e-10));
    for (double B : {0.5, 1.0, 1.664845645920050}) {
        const auto s = srp_characteristics(m, B);
        CHECK(std::abs(s.arl - exact::srp_arl_exact(B)) < 1e-8);
        CHECK(std::abs(s.add - exact::srp_add_exact(B)) < 1e-8);
    }
    const auto tiny = srp_characteristics(m, 1e-6);
    CHECK(tiny.arl == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(tiny.add == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("SRP is an equalizer") {
    const auto m = exponential_model(2.0);
    for (double B : {0.7, std::expm1(1.0), 1.95}) {
        const SrrCharacteristics srr(m, B);
        const auto q = solve_qsd(m, B);
        const auto seq = srp_cadd_sequence(srr, q, 20);
        for (double c : seq) CHECK(std::abs(c - seq.front()) < 1e-8);
    }
}

TEST_CASE("threshold calibration") {
    const auto m = exponential_model(2.0);
    const auto srp = calibrate_threshold(m, ProcedureSpec::srp(), 2.0);
    CHECK(std::abs(srp.threshold - std::expm1(1.0)) < 1e-8);
    CHECK(std::abs(srp.arl - 2.0) < 1e-8);
    const auto sr = calibrate_threshold(m, ProcedureSpec::sr_r(0.0), 2.0);
    CHECK(procedure_arl(m, ProcedureSpec::sr_r(0.0), sr.threshold) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(calibrate_threshold(m, ProcedureSpec::srp(), 1.0 + 1e-9).threshold < 1e-6);

    double previous = 0.0;
    for (double gamma : {1.2, 1.5, 2.0, 3.0, 10.0}) {
        const double A = calibrate_threshold(m, ProcedureSpec::sr_r(0.0), gamma).threshold;
        CHECK(A > previous);
        previous = A;
    }
    // A head start larger than every threshold with ARL <= gamma.
    CHECK_THROWS_AS(calibrate_threshold(m, ProcedureSpec::sr_r(5.0), 1.5), ValidationError);
    CHECK_THROWS_AS(calibrate_threshold(m, ProcedureSpec::srp(), 0.5), ValidationError);
}

TEST_CASE("gaussian calibration agrees with simulation") {
    const auto g = gaussian_model(1.0);
    const auto cal = calibrate_threshold(g, ProcedureSpec::sr_r(0.0), 5.0);
    MCOptions mc;
    mc.runs = 50000;
    mc.seed = 55;
    const auto est = estimate_arl(g, HeadStart::deterministic(0.0), cal.threshold, mc);
    CHECK(std::abs(est.mean - 5.0) < 3.0 * est.std_error);
}

TEST_CASE("equalizer head start search") {
    const auto m = exponential_model(2.0);
    for (double A : {0.5, 1.0, 1.5}) {
        const auto eq = find_equalizer_headstart(m, A);
        CHECK(std::abs(eq.head_start - exact::equalizer_headstart(A)) < 1e-6);
        CHECK(eq.unimodal);
        CHECK(eq.spread < 1e-6);
    }
    CHECK(find_equalizer_headstart(m, 1.0).head_start == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-6));
    CHECK(find_equalizer_headstart(m, 1e-4).head_start < 1e-3);
}

TEST_CASE("joint calibration of threshold and head start") {
    const auto m = exponential_model(2.0);
    const auto c = calibrate_equalized_sr_r(m, 2.0);
    CHECK(std::abs(c.threshold - 1.66485) < 1e-4);
    CHECK(std::abs(c.head_start - 0.63244) < 1e-4);
    CHECK(std::abs(c.arl - 2.0) < 1e-8);
}
