#include "srdetect/errors.hpp"
#include "srdetect/procedures.hpp"
#include "srdetect/quasi_stationary.hpp"
#include "srdetect/stats.hpp"

#include <doctest.h>

#include <cfloat>
#include <cmath>
#include <memory>

using namespace srdetect;

TEST_CASE("head starts") {
    Rng rng(1, 0);
    const auto s0 = init_detector(HeadStart::deterministic(0.0), 2.0, rng);
    CHECK(s0.statistic == 0.0);
    CHECK(s0.n == 0);
    CHECK_FALSE(s0.stopped);
    CHECK(init_detector(HeadStart::deterministic(0.63244), 1.66485, rng).statistic == 0.63244);
    CHECK_THROWS_AS(HeadStart::deterministic(-1.0), ValidationError);
    CHECK_THROWS_AS(init_detector(HeadStart::deterministic(2.0), 2.0, rng), ValidationError);
    CHECK_THROWS_AS(HeadStart::quasi_stationary(nullptr), ValidationError);
}

TEST_CASE("randomized head start draws from the quasi-stationary law") {
    const auto m = exponential_model(2.0);
    const double B = std::expm1(1.0);
    const auto hs = HeadStart::quasi_stationary(std::make_shared<const QuasiStationary>(solve_qsd(m, B)));
    CHECK(hs.is_randomized());
    Rng rng(123, 0);
    std::vector<double> r0(100000);
    for (auto& x : r0) x = init_detector(hs, B, rng).statistic;
    CHECK(ks_distance(r0, [B](double x) { return std::clamp(x / B, 0.0, 1.0); }) < ks_critical_value_01(r0.size()));
    CHECK_THROWS_AS(init_detector(hs, 1.5, rng), ValidationError);
}

TEST_CASE("statistic recursion") {
    DetectorState s{0.0, 0, 2.0, false};
    s = step_lr(s, 3.0);
    CHECK(s.statistic == 3.0);
    CHECK(s.n == 1);
    CHECK(s.stopped);
    CHECK_THROWS_AS(step_lr(s, 1.0), ValidationError);

    const auto m = exponential_model(2.0);
    DetectorState t{1.0, 0, 10.0, false};
    t = step(t, std::log(2.0), m);
    CHECK(t.statistic == doctest::Approx(2.0).epsilon(1e-15));

    DetectorState u{0.0, 0, 2.0, false};
    u = step_lr(u, 0.5);
    CHECK(u.statistic == 0.5);
    u = step_lr(u, 0.5);
    CHECK(u.statistic == 0.75);
    CHECK_FALSE(u.stopped);
    u = step_lr(u, 4.0);
    CHECK(u.statistic == 7.0);
    CHECK(u.stopped);
    CHECK(u.n == 3);
}

TEST_CASE("overflow saturates and alarms") {
    DetectorState s{DBL_MAX / 2, 0, 1e300, false};
    s = step_lr(s, 1e10);
    CHECK(s.statistic == DBL_MAX);
    CHECK(s.stopped);
}

TEST_CASE("run to alarm") {
    const auto m = exponential_model(2.0);
    Rng rng(5, 0);
    for (int i = 0; i < 100; ++i) {
        const auto out = run_to_alarm(m, HeadStart::deterministic(0.0), 1e-12, std::nullopt, rng);
        REQUIRE(out.stopping_time.value() == 1);
    }
    const auto cens = run_to_alarm(m, HeadStart::deterministic(0.0), 1e12, std::nullopt, rng, 1);
    CHECK(cens.censored());

    Rng a(8, 3), b(8, 3);
    const auto ra = run_to_alarm(m, HeadStart::deterministic(0.3), 1.5, 4, a, 10000000, true);
    const auto rb = run_to_alarm(m, HeadStart::deterministic(0.3), 1.5, 4, b, 10000000, true);
    CHECK(ra.stopping_time == rb.stopping_time);
    CHECK(ra.trajectory == rb.trajectory);
    CHECK(ra.trajectory.size() == *ra.stopping_time + 1);
    CHECK(ra.trajectory.front() == 0.3);
}

TEST_CASE("larger head start never alarms later") {
    const auto m = exponential_model(2.0);
    for (std::uint64_t run = 0; run < 2000; ++run) {
        Rng a(77, run), b(77, run);
        const auto lo = run_to_alarm(m, HeadStart::deterministic(0.1), 1.9, 3, a);
        const auto hi = run_to_alarm(m, HeadStart::deterministic(1.2), 1.9, 3, b);
        REQUIRE(*hi.stopping_time <= *lo.stopping_time);
    }
}

TEST_CASE("event T <= nu only depends on pre-change draws") {
    const auto m = exponential_model(2.0);
    for (std::uint64_t run = 0; run < 2000; ++run) {
        for (std::uint64_t nu : {1, 3}) {
            Rng a(31, run), b(31, run);
            const auto t1 = *run_to_alarm(m, HeadStart::deterministic(0.0), 1.2, nu, a).stopping_time;
            const auto t2 = *run_to_alarm(m, HeadStart::deterministic(0.0), 1.2, nu + 5, b).stopping_time;
            REQUIRE((t1 <= nu) == (t2 <= nu));
            if (t1 <= nu) REQUIRE(t1 == t2);
        }
    }
}

TEST_CASE("geometric run length of the randomized procedure") {
    const auto m = exponential_model(2.0);
    const double B = 1.2;
    const auto q = std::make_shared<const QuasiStationary>(solve_qsd(m, B));
    const auto hs = HeadStart::quasi_stationary(q);
    std::vector<std::uint64_t> t(100000);
    for (std::uint64_t i = 0; i < t.size(); ++i) {
        Rng rng(404, i);
        t[i] = *run_to_alarm(m, hs, B, std::nullopt, rng).stopping_time;
    }
    CHECK(geometric_chi_square(t, 1.0 - q->lambda()).p_value > 0.01);
}
