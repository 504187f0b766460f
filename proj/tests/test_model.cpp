#include "srdetect/errors.hpp"
#include "srdetect/model.hpp"
#include "srdetect/quadrature.hpp"
#include "srdetect/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

using namespace srdetect;

namespace {

// Integrates x -> k(x) over [0, upper] with a fine composite Gauss-Legendre
// rule in t = sqrt(x / upper), which absorbs x^{-1/2} endpoint singularities.
// The split at the support edge keeps a kernel jump on a panel boundary.
double integrate_panels(const std::function<double(double)>& k, double a, double b) {
    const auto g = QuadratureGrid::gauss_legendre(1.0, 64);
    double total = 0.0;
    const int panels = 64;
    for (int p = 0; p < panels; ++p) {
        const double t0 = static_cast<double>(p) / panels, t1 = static_cast<double>(p + 1) / panels;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double t = t0 + (t1 - t0) * g.node(i);
            total += (t1 - t0) * g.weight(i) * 2.0 * t * (b - a) * k(a + (b - a) * t * t);
        }
    }
    return total;
}

template <typename F>
double integrate(F k, double upper, double edge) {
    const double cut = std::min(edge, upper);
    double total = integrate_panels(k, 0.0, cut);
    if (upper > cut) total += integrate_panels(k, cut, upper);
    return total;
}

std::vector<double> draw_lr(const ChangeModel& m, Hypothesis h, std::size_t n, std::uint64_t seed) {
    Rng rng(seed, 0);
    std::vector<double> out(n);
    for (auto& y : out) y = m.lr(m.sample(h, rng));
    return out;
}

} // namespace

TEST_CASE("exponential model point values") {
    const auto m = exponential_model(2.0);
    CHECK(m.lr(0.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(m.lr(std::log(2.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m.lr_cdf_pre(2.0) == 1.0);
    CHECK(m.lr_cdf_post(2.0) == 1.0);
    CHECK(m.lr_cdf_pre(1.0) == doctest::Approx(0.5));
    CHECK(m.lr_cdf_post(1.0) == doctest::Approx(0.25));
    CHECK(m.lr_support_max() == 2.0);
    CHECK(m.name() == "exponential");
    CHECK(m.parameter("theta").value() == 2.0);
    CHECK(m.describe() == "exponential(theta=2)");
    CHECK(m.has_analytic_kernels());
}

TEST_CASE("exponential kernels") {
    const auto m = exponential_model(2.0);
    CHECK(kernel_pre(m, 1.0, 1.0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(kernel_pre(m, 5.0, 1.0) == 0.0);
    CHECK(kernel_post(m, 1.0, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(kernel_post(m, 0.0, 0.3) == 0.0);
    CHECK(kernel_post(m, 1.0, 1.0) == doctest::Approx(0.125).epsilon(1e-14));
    // Pre-change kernel is exactly constant in x below the edge.
    for (double r : {0.0, 0.4, 1.3}) {
        const double k0 = kernel_pre(m, 0.0, r);
        CHECK(k0 == doctest::Approx(1.0 / (2.0 * (1.0 + r))).epsilon(1e-15));
        for (double x = 0.01; x < 2.0 * (1.0 + r); x += 0.037) {
            REQUIRE(kernel_pre(m, x, r) == k0);
        }
    }
    CHECK_THROWS_AS(kernel_pre(m, -1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(kernel_pre(m, 1.0, -0.1), ValidationError);
}

TEST_CASE("finite-difference oracle matches analytic kernels") {
    const auto m = exponential_model(2.0);
    const auto fd = [&](Hypothesis h, double x, double r) {
        const double e = 1e-6;
        return (m.lr_cdf(h, (x + e) / (1 + r)) - m.lr_cdf(h, (x - e) / (1 + r))) / (2 * e);
    };
    for (double r : {0.0, 0.5, 1.0}) {
        for (double x : {0.3, 1.0, 1.7}) {
            CHECK(m.kernel(Hypothesis::pre, x, r) == doctest::Approx(fd(Hypothesis::pre, x, r)).epsilon(1e-7));
            CHECK(m.kernel(Hypothesis::post, x, r) == doctest::Approx(fd(Hypothesis::post, x, r)).epsilon(1e-7));
        }
    }
}

TEST_CASE("kernels integrate to one") {
    for (double theta : {2.0, 3.0, 1.5}) {
        const auto m = exponential_model(theta);
        for (double r : {0.0, 0.7, 2.5}) {
            const double edge = (1 + r) * m.lr_support_max();
            CHECK(integrate([&](double x) { return kernel_pre(m, x, r); }, edge, edge) ==
                  doctest::Approx(1.0).epsilon(1e-8));
            CHECK(integrate([&](double x) { return kernel_post(m, x, r); }, edge, edge) ==
                  doctest::Approx(1.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("gaussian numeric kernels integrate to one") {
    const auto m = gaussian_model(1.0);
    CHECK_FALSE(m.has_analytic_kernels());
    for (double r : {0.0, 1.0}) {
        // Mass beyond x = 400(1+r) is below 1e-9 for mu = 1.
        const double upper = 400.0 * (1 + r);
        const auto pieces = [&](Hypothesis h) {
            double s = 0.0;
            double a = 0.0;
            for (double b : {1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 40.0, 100.0, upper}) {
                s += integrate([&](double x) { return m.kernel(h, a + x, r); }, b - a, b - a);
                a = b;
            }
            return s;
        };
        CHECK(pieces(Hypothesis::pre) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(pieces(Hypothesis::post) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("sampler means") {
    const auto m = exponential_model(2.0);
    Rng rng(11, 0);
    const int n = 1000000;
    double pre = 0.0, post = 0.0;
    for (int i = 0; i < n; ++i) {
        pre += m.sample(Hypothesis::pre, rng);
        post += m.sample(Hypothesis::post, rng);
    }
    CHECK(std::abs(pre / n - 1.0) < 0.003);
    CHECK(std::abs(post / n - 0.5) < 0.002);
}

TEST_CASE("fixed seed replays the observation stream") {
    const auto m = exponential_model(2.0);
    Rng a(5, 3), b(5, 3);
    for (int i = 0; i < 100; ++i) {
        REQUIRE(m.sample(Hypothesis::pre, a) == m.sample(Hypothesis::pre, b));
    }
}

TEST_CASE("empirical LR distribution matches the analytic CDFs") {
    const std::size_t n = 1000000;
    const double bound = 3.0 * ks_critical_value_01(n);
    for (const auto& m : {exponential_model(2.0), gaussian_model(1.0)}) {
        for (auto h : {Hypothesis::pre, Hypothesis::post}) {
            const double d = ks_distance(draw_lr(m, h, n, 17), [&](double y) { return m.lr_cdf(h, y); });
            CHECK(d < bound);
        }
    }
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(exponential_model(1.0), ValidationError);
    CHECK_THROWS_AS(exponential_model(0.5), ValidationError);
    CHECK_THROWS_AS(gaussian_model(0.0), ValidationError);

    // A CDF with an atom at y = 1 is rejected.
    ChangeModel::Components atom;
    atom.name = "atom";
    atom.pre_density = [](double) { return 1.0; };
    atom.post_density = [](double) { return 1.0; };
    atom.lr = [](double) { return 1.0; };
    atom.lr_cdf_pre = [](double y) { return y < 1.0 ? 0.0 : 1.0; };
    atom.lr_cdf_post = atom.lr_cdf_pre;
    atom.sampler = [](Hypothesis, Rng&) { return 0.0; };
    CHECK_THROWS_AS(ChangeModel{atom}, ValidationError);
}
