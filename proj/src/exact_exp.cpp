#include "srdetect/exact_exp.hpp"

#include "srdetect/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <string>

namespace srdetect::exact {

namespace {

void require_threshold(double A, const char* name) {
    require(A > 0.0 && A < ExactRegime::max_threshold,
            std::string(name) + " must lie in (0, 2) for the closed forms");
}

void require_gamma(double gamma) {
    require(gamma > 1.0 && gamma < ExactRegime::gamma0(), "gamma must lie in (1, gamma0) = (1, 2.2188...)");
}

// [A/(1+A) + 2(1 - log(1+A)/2)]^{-1}
double delay_factor(double A) {
    return 1.0 / (A / (1.0 + A) + 2.0 - std::log1p(A));
}

} // namespace

double ExactRegime::gamma0() {
    return 1.0 / (1.0 - 0.5 * std::log(3.0));
}

double delta0_exact(double r, double A) {
    require_threshold(A, "A");
    require(r >= 0.0 && r < A, "head start must lie in [0, A)");
    const double s = 1.0 + r;
    return 1.0 + A * A / (2.0 * s * s) * delay_factor(A);
}

double phi_exact(double r, double A) {
    require_threshold(A, "A");
    require(r >= 0.0 && r < A, "head start must lie in [0, A)");
    return 1.0 + A / (2.0 * (1.0 + r)) / (1.0 - 0.5 * std::log1p(A));
}

double srp_arl_exact(double B) {
    require_threshold(B, "B");
    return 1.0 / (1.0 - 0.5 * std::log1p(B));
}

double srp_add_exact(double B) {
    require_threshold(B, "B");
    return 1.0 + B * B / (2.0 * (1.0 + B)) * delay_factor(B);
}

double srp_threshold(double gamma) {
    require_gamma(gamma);
    return std::expm1(2.0 * (gamma - 1.0) / gamma);
}

double srr_threshold(double gamma) {
    require_gamma(gamma);
    const double g1 = gamma - 1.0;
    const auto f = [g1](double A) {
        const double root = std::sqrt(1.0 + A);
        return A + g1 * root * std::log1p(A) - 2.0 * g1 * root;
    };
    // f(0) = -2(g-1) < 0 and f(2) > 0 for gamma < gamma0.
    constexpr double lo = 0.0;
    constexpr double hi = ExactRegime::max_threshold;
    if (!(f(lo) < 0.0 && f(hi) > 0.0)) {
        throw NumericFailure("transcendental threshold equation has no sign change on (0, 2)");
    }
    std::uintmax_t max_iter = 200;
    const auto bracket = boost::math::tools::toms748_solve(f, lo, hi, f(lo), f(hi),
                                                           boost::math::tools::eps_tolerance<double>(52), max_iter);
    const double a = bracket.first;
    const double b = bracket.second;
    const double root = std::abs(f(a)) <= std::abs(f(b)) ? a : b;
    if (!(std::abs(f(root)) <= 1e-12)) {
        throw NumericFailure("threshold root residual exceeds 1e-12");
    }
    return root;
}

double equalizer_headstart(double A) {
    require(A >= 0.0 && A < ExactRegime::max_threshold, "A must lie in [0, 2)");
    // sqrt(1+A) - 1 without cancellation.
    return A / (std::sqrt(1.0 + A) + 1.0);
}

double sup_add_exact(double r, double A) {
    return std::max(srp_add_exact(A), delta0_exact(r, A));
}

double suboptimality_margin(double A) {
    return A / std::sqrt(1.0 + A) - std::log1p(A);
}

MinimaxComparison suboptimality_gap(double gamma) {
    MinimaxComparison out{};
    out.gamma = gamma;
    out.srp_threshold = srp_threshold(gamma);
    out.jp_srp = srp_add_exact(out.srp_threshold);
    out.srr_threshold = srr_threshold(gamma);
    out.srr_head_start = equalizer_headstart(out.srr_threshold);
    out.jp_srr = sup_add_exact(out.srr_head_start, out.srr_threshold);
    return out;
}

} // namespace srdetect::exact
