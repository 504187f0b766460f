#pragma once

#include "srdetect/fredholm.hpp"
#include "srdetect/model.hpp"
#include "srdetect/quadrature.hpp"
#include "srdetect/quasi_stationary.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace srdetect {

/// Which member of the SR family to calibrate.
struct ProcedureSpec {
    enum class Kind { sr_r, srp };
    Kind kind = Kind::sr_r;
    /// Deterministic head start for SR-r; unused for SRP.
    double head_start = 0.0;

    static ProcedureSpec sr_r(double r) { return {Kind::sr_r, r}; }
    static ProcedureSpec srp() { return {Kind::srp, 0.0}; }
    std::string name() const;
};

struct CalibrationOptions {
    GridSpec grid;
    QsdOptions qsd;
    /// Absolute tolerance on |ARL - gamma|.
    double tol = 1e-10;
    /// Largest threshold tried before gamma is declared unattainable.
    double threshold_cap = 1e4;
    std::size_t max_iter = 200;
};

struct SrpCharacteristics {
    double arl = 0.0;
    double add = 0.0;
};

/// ARL = \int phi q_B and E_0 T = \int delta_0 q_B on the shared grid.
SrpCharacteristics srp_characteristics(const SrrCharacteristics& srr, const QuasiStationary& qsd);
SrpCharacteristics srp_characteristics(const ChangeModel& model, double B, const GridSpec& spec = {},
                                       const QsdOptions& qsd_options = {});

/// CADD_nu of SRP for nu = 0..nu_max: (\int delta_nu q_B) / (\int rho_nu q_B).
std::vector<double> srp_cadd_sequence(const SrrCharacteristics& srr, const QuasiStationary& qsd,
                                      std::size_t nu_max);

/// Solver-computed ARL of the procedure at a threshold.
double procedure_arl(const ChangeModel& model, const ProcedureSpec& procedure, double threshold,
                     const CalibrationOptions& options = {});

struct Calibration {
    double threshold = 0.0;
    double arl = 0.0;
    std::size_t evaluations = 0;
};

/// Monotone bisection in the threshold until the solver ARL equals gamma
/// within options.tol.
Calibration calibrate_threshold(const ChangeModel& model, const ProcedureSpec& procedure, double gamma,
                                const CalibrationOptions& options = {});

struct EqualizerResult {
    double head_start = 0.0;
    /// max_nu cadd_nu - min_nu cadd_nu at head_start.
    double spread = 0.0;
    /// False when the 64-point scan showed several local minima; head_start
    /// is then the best scan point.
    bool unimodal = true;
};

/// Head start r in [0, A) minimizing the spread of cadd_nu(r) over the
/// truncated nu range: 64-point scan, then golden-section search.
EqualizerResult find_equalizer_headstart(const SrrCharacteristics& srr, double tol = 1e-10,
                                         const TruncationRule& rule = {});
EqualizerResult find_equalizer_headstart(const ChangeModel& model, double A, const GridSpec& spec = {},
                                         double tol = 1e-10);

struct EqualizedCalibration {
    double threshold = 0.0;
    double head_start = 0.0;
    double arl = 0.0;
    double spread = 0.0;
    bool unimodal = true;
};

/// SR-r with the equalizing head start, threshold bisected to ARL gamma.
EqualizedCalibration calibrate_equalized_sr_r(const ChangeModel& model, double gamma,
                                              const CalibrationOptions& options = {});

} // namespace srdetect
