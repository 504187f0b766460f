#include "srdetect/metrics.hpp"

#include "srdetect/errors.hpp"
#include "srdetect/exact_exp.hpp"
#include "srdetect/quasi_stationary.hpp"

#include <algorithm>
#include <cmath>

namespace srdetect {

std::string to_string(Provenance provenance) {
    switch (provenance) {
    case Provenance::analytic:
        return "analytic";
    case Provenance::nystrom:
        return "nystrom";
    case Provenance::monte_carlo:
        return "monte_carlo";
    }
    return "unknown";
}

double sup_add(std::span<const double> cadd_by_nu) {
    require(!cadd_by_nu.empty(), "sup_add needs at least one conditional delay");
    return *std::max_element(cadd_by_nu.begin(), cadd_by_nu.end());
}

double integral_add_lower_bound(double r, double delta0_r, double psi_r, double phi_r) {
    require(r >= 0.0, "head start must be nonnegative");
    require(r + phi_r > 0.0, "denominator r + phi(r) must be positive");
    return (r * delta0_r + psi_r) / (r + phi_r);
}

double jp_gap(const PerformanceReport& a, const PerformanceReport& b) {
    return a.jp - b.jp;
}

bool analytic_route_available(const ChangeModel& model, double gamma) {
    const auto theta = model.parameter("theta");
    return model.name() == "exponential" && theta && *theta == 2.0 && gamma > 1.0 &&
           gamma < exact::ExactRegime::gamma0();
}

namespace {

Comparison compare_analytic(double gamma, std::size_t nu_max) {
    const auto row = exact::suboptimality_gap(gamma);
    Comparison out;
    out.srp.procedure = {"srp", row.srp_threshold, 0.0};
    out.srp.provenance = Provenance::analytic;
    out.srp.arl = exact::srp_arl_exact(row.srp_threshold);
    out.srp.cadd_by_nu.assign(nu_max + 1, exact::srp_add_exact(row.srp_threshold));

    const double A = row.srr_threshold;
    const double r = row.srr_head_start;
    out.srr.procedure = {"sr-r", A, r};
    out.srr.provenance = Provenance::analytic;
    out.srr.arl = exact::phi_exact(r, A);
    out.srr.cadd_by_nu.assign(nu_max + 1, exact::srp_add_exact(A));
    out.srr.cadd_by_nu.front() = exact::delta0_exact(r, A);

    out.srp.jp = sup_add(out.srp.cadd_by_nu);
    out.srr.jp = sup_add(out.srr.cadd_by_nu);
    // At the equalizer, psi = delta_0 * phi so the bound collapses to delta_0(r_A).
    const double d0 = exact::delta0_exact(r, A);
    const double bound = integral_add_lower_bound(r, d0, d0 * out.srr.arl, out.srr.arl);
    out.srp.ir_lower_bound = bound;
    out.srr.ir_lower_bound = bound;
    return out;
}

Comparison compare_numeric(const ChangeModel& model, double gamma, const CompareOptions& options) {
    Comparison out;
    const Calibration srp_cal = calibrate_threshold(model, ProcedureSpec::srp(), gamma, options.calibration);
    const GridPtr srp_grid = options.calibration.grid.make(srp_cal.threshold);
    const SrrCharacteristics srp_srr(model, srp_grid);
    const QuasiStationary qsd = solve_qsd(model, srp_grid, options.calibration.qsd);
    out.srp.procedure = {"srp", srp_cal.threshold, 0.0};
    out.srp.provenance = Provenance::nystrom;
    out.srp.arl = srp_characteristics(srp_srr, qsd).arl;

    const EqualizedCalibration eq = calibrate_equalized_sr_r(model, gamma, options.calibration);
    const SrrCharacteristics srr(model, eq.threshold, options.calibration.grid);
    out.srr.procedure = {"sr-r", eq.threshold, eq.head_start};
    out.srr.provenance = Provenance::nystrom;
    out.srr.arl = srr.phi()(eq.head_start);
    out.srr.cadd_by_nu = srr.cadd_sequence(eq.head_start, options.truncation);

    // Same nu range for SRP as the SR-r truncation produced, at least nu_max.
    const std::size_t nu_max = std::max(options.nu_max, out.srr.cadd_by_nu.size() - 1);
    out.srp.cadd_by_nu = srp_cadd_sequence(srp_srr, qsd, nu_max);

    out.srp.jp = sup_add(out.srp.cadd_by_nu);
    out.srr.jp = sup_add(out.srr.cadd_by_nu);
    const double bound = srr.integral_lower_bound(eq.head_start);
    out.srp.ir_lower_bound = bound;
    out.srr.ir_lower_bound = bound;
    return out;
}

} // namespace

Comparison compare_at_gamma(const ChangeModel& model, double gamma, const CompareOptions& options) {
    require(gamma > 1.0, "gamma must exceed 1");
    const bool analytic = options.route == Route::analytic ||
                          (options.route == Route::automatic && analytic_route_available(model, gamma));
    if (analytic) {
        require(analytic_route_available(model, gamma),
                "the analytic route needs the E(1,2) model and 1 < gamma < gamma0");
        return compare_analytic(gamma, options.nu_max);
    }
    return compare_numeric(model, gamma, options);
}

std::vector<Figure1Row> figure1_curves(std::size_t points) {
    require(points >= 2, "figure needs at least two points");
    const double gamma0 = exact::ExactRegime::gamma0();
    // ARL abscissas on [1 + e (g0-1), g0 - e (g0-1)], e = 5e-3; both
    // thresholds are obtained by exact inversion at each abscissa. Closer to
    // ARL = 1 the gap (~A^4) drops below 12-digit CSV resolution.
    constexpr double kEdge = 5e-3;
    std::vector<Figure1Row> rows(points);
    for (std::size_t k = 0; k < points; ++k) {
        const double t = kEdge + (1.0 - 2.0 * kEdge) * static_cast<double>(k) / static_cast<double>(points - 1);
        const double gamma = 1.0 + (gamma0 - 1.0) * t;
        const auto row = exact::suboptimality_gap(gamma);
        rows[k] = {gamma, row.jp_srr, row.jp_srp};
    }
    return rows;
}

} // namespace srdetect
