#pragma once

#include "srdetect/calibrate.hpp"
#include "srdetect/fredholm.hpp"
#include "srdetect/model.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace srdetect {

enum class Provenance { analytic, nystrom, monte_carlo };
std::string to_string(Provenance provenance);

struct ProcedureDescriptor {
    /// "srp" or "sr-r".
    std::string kind;
    double threshold = 0.0;
    /// Deterministic head start for SR-r; 0 for SRP.
    double head_start = 0.0;
};

struct PerformanceReport {
    ProcedureDescriptor procedure;
    Provenance provenance = Provenance::analytic;
    double arl = 0.0;
    std::vector<double> cadd_by_nu;
    /// sup over the truncated nu range.
    double jp = 0.0;
    /// Lower bound on inf J_P over procedures with ARL >= arl.
    double ir_lower_bound = 0.0;
};

/// J_P = max_nu cadd_nu.
double sup_add(std::span<const double> cadd_by_nu);

/// I_r(T_sr^r) = (r delta_0(r) + psi(r)) / (r + phi(r)).
double integral_add_lower_bound(double r, double delta0_r, double psi_r, double phi_r);

enum class Route { automatic, analytic, numeric };

struct CompareOptions {
    Route route = Route::automatic;
    CalibrationOptions calibration;
    TruncationRule truncation;
    /// Length of cadd_by_nu in the analytic route (nu = 0..nu_max).
    std::size_t nu_max = 20;
};

struct Comparison {
    PerformanceReport srp;
    PerformanceReport srr;

    double gap() const { return srp.jp - srr.jp; }
};

/// J_P difference between two reports (a.jp - b.jp).
double jp_gap(const PerformanceReport& a, const PerformanceReport& b);

/// True when the model is E(1,2) and 1 < gamma < gamma0.
bool analytic_route_available(const ChangeModel& model, double gamma);

/// SRP and the equalized SR-r procedure, both calibrated to ARL gamma.
/// The analytic route uses the E(1,2) closed forms; the numeric route
/// calibrates with the Nyström and quasi-stationary solvers.
Comparison compare_at_gamma(const ChangeModel& model, double gamma, const CompareOptions& options = {});

struct Figure1Row {
    double arl = 0.0;
    double jp_srr = 0.0;
    double jp_srp = 0.0;
};

/// Supremum average delay of SR-r (equalizer head start) and SRP, matched at
/// `points` ARL values spread over (1, gamma0) for E(1,2).
std::vector<Figure1Row> figure1_curves(std::size_t points);

} // namespace srdetect
