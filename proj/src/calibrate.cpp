#include "srdetect/calibrate.hpp"

#include "srdetect/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>

namespace srdetect {

std::string ProcedureSpec::name() const {
    return kind == Kind::srp ? "srp" : "sr-r";
}

namespace {

void require_same_grid(const SrrCharacteristics& srr, const QuasiStationary& qsd) {
    const auto& a = *srr.grid();
    const auto& b = *qsd.grid();
    require(srr.grid() == qsd.grid() ||
                (a.size() == b.size() && a.upper() == b.upper() && a.scheme() == b.scheme()),
            "SR-r characteristics and quasi-stationary law must share the quadrature grid");
}

std::vector<double> qsd_weights(const QuasiStationary& qsd) {
    const auto w = qsd.grid()->weights();
    const auto q = qsd.density().values();
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        out[i] = w[i] * q[i];
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double spread_of(const std::vector<double>& values) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *hi - *lo;
}

} // namespace

SrpCharacteristics srp_characteristics(const SrrCharacteristics& srr, const QuasiStationary& qsd) {
    require_same_grid(srr, qsd);
    const auto weights = qsd_weights(qsd);
    return {dot(weights, srr.phi().values()), dot(weights, srr.delta0().values())};
}

SrpCharacteristics srp_characteristics(const ChangeModel& model, double B, const GridSpec& spec,
                                       const QsdOptions& qsd_options) {
    const GridPtr grid = spec.make(B);
    const SrrCharacteristics srr(model, grid);
    const QuasiStationary qsd = solve_qsd(model, grid, qsd_options);
    return srp_characteristics(srr, qsd);
}

std::vector<double> srp_cadd_sequence(const SrrCharacteristics& srr, const QuasiStationary& qsd,
                                      std::size_t nu_max) {
    require_same_grid(srr, qsd);
    return srr.averaged_cadd_sequence(qsd_weights(qsd), nu_max);
}

double procedure_arl(const ChangeModel& model, const ProcedureSpec& procedure, double threshold,
                     const CalibrationOptions& options) {
    const GridPtr grid = options.grid.make(threshold);
    const GridFunction phi = arl_false_alarm(model, grid);
    if (procedure.kind == ProcedureSpec::Kind::sr_r) {
        require(procedure.head_start < threshold, "SR-r head start must be below the threshold");
        return phi(procedure.head_start);
    }
    const QuasiStationary qsd = solve_qsd(model, grid, options.qsd);
    return dot(qsd_weights(qsd), phi.values());
}

Calibration calibrate_threshold(const ChangeModel& model, const ProcedureSpec& procedure, double gamma,
                                const CalibrationOptions& options) {
    require(gamma > 1.0 && std::isfinite(gamma), "target ARL gamma must exceed 1");
    require(procedure.head_start >= 0.0, "head start must be nonnegative");
    Calibration out;
    std::map<double, double> evaluated;
    const auto arl = [&](double threshold) {
        ++out.evaluations;
        const double value = procedure_arl(model, procedure, threshold, options);
        evaluated[threshold] = value;
        // ARL must be increasing in the threshold for the bisection to be valid.
        double previous = -std::numeric_limits<double>::infinity();
        for (const auto& [t, v] : evaluated) {
            if (v < previous - 1e-9) {
                std::ostringstream os;
                os.precision(12);
                os << "ARL is not monotone in the threshold near " << t << " (";
                for (const auto& [tt, vv] : evaluated) {
                    os << tt << "->" << vv << ' ';
                }
                os << ')';
                throw NumericFailure(os.str());
            }
            previous = v;
        }
        return value;
    };

    const double floor = procedure.kind == ProcedureSpec::Kind::sr_r ? procedure.head_start : 0.0;
    double lo = floor;
    if (floor > 0.0) {
        const double lowest = arl(floor * (1.0 + 1e-9) + 1e-12);
        if (lowest >= gamma) {
            throw ValidationError("gamma is below the smallest ARL reachable with head start " +
                                  std::to_string(floor));
        }
        lo = floor * (1.0 + 1e-9) + 1e-12;
    }
    double hi = std::max(2.0 * floor, 1.0);
    double hi_arl = arl(hi);
    while (hi_arl < gamma) {
        lo = hi;
        hi *= 2.0;
        if (hi > options.threshold_cap) {
            throw ValidationError("gamma is unattainable below the threshold cap " +
                                  std::to_string(options.threshold_cap));
        }
        hi_arl = arl(hi);
    }
    double mid = hi;
    double mid_arl = hi_arl;
    for (std::size_t iter = 0; iter < options.max_iter && std::abs(mid_arl - gamma) > options.tol; ++iter) {
        mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        mid_arl = arl(mid);
        (mid_arl < gamma ? lo : hi) = mid;
    }
    if (!(std::abs(mid_arl - gamma) <= options.tol)) {
        throw NumericFailure("threshold calibration stalled at |ARL - gamma| = " +
                             std::to_string(std::abs(mid_arl - gamma)));
    }
    out.threshold = mid;
    out.arl = mid_arl;
    return out;
}

EqualizerResult find_equalizer_headstart(const SrrCharacteristics& srr, double tol, const TruncationRule& rule) {
    require(tol > 0.0, "tolerance must be positive");
    const double A = srr.threshold();
    constexpr std::size_t kScan = 64;

    // One nu range for every head start so the spread is a single function of r.
    const std::size_t nu_max = std::max(srr.cadd_sequence(0.0, rule).size(),
                                        srr.cadd_sequence(A * (kScan - 1) / kScan, rule).size()) - 1;
    const auto spread = [&](double r) { return spread_of(srr.cadd_sequence(r, nu_max)); };

    std::vector<double> scan(kScan);
    for (std::size_t k = 0; k < kScan; ++k) {
        scan[k] = spread(A * static_cast<double>(k) / kScan);
    }
    const auto best = static_cast<std::size_t>(std::min_element(scan.begin(), scan.end()) - scan.begin());
    std::size_t minima = 0;
    for (std::size_t k = 0; k < kScan; ++k) {
        const bool below_left = k == 0 || scan[k] < scan[k - 1];
        const bool below_right = k + 1 == kScan || scan[k] < scan[k + 1];
        minima += below_left && below_right ? 1 : 0;
    }
    EqualizerResult out;
    if (minima > 1) {
        out.head_start = A * static_cast<double>(best) / kScan;
        out.spread = scan[best];
        out.unimodal = false;
        return out;
    }

    double lo = best == 0 ? 0.0 : A * static_cast<double>(best - 1) / kScan;
    double hi = std::min(A * static_cast<double>(best + 1) / kScan, std::nextafter(A, 0.0));
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = spread(c);
    double fd = spread(d);
    while (hi - lo > tol) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = spread(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = spread(d);
        }
    }
    out.head_start = 0.5 * (lo + hi);
    out.spread = spread(out.head_start);
    return out;
}

EqualizerResult find_equalizer_headstart(const ChangeModel& model, double A, const GridSpec& spec, double tol) {
    return find_equalizer_headstart(SrrCharacteristics(model, A, spec), tol);
}

EqualizedCalibration calibrate_equalized_sr_r(const ChangeModel& model, double gamma,
                                              const CalibrationOptions& options) {
    require(gamma > 1.0 && std::isfinite(gamma), "target ARL gamma must exceed 1");
    EqualizedCalibration out;
    const auto evaluate = [&](double A) {
        const SrrCharacteristics srr(model, A, options.grid);
        const EqualizerResult eq = find_equalizer_headstart(srr, std::max(options.tol, 1e-12));
        out.threshold = A;
        out.head_start = eq.head_start;
        out.spread = eq.spread;
        out.unimodal = eq.unimodal;
        out.arl = srr.phi()(eq.head_start);
        return out.arl - gamma;
    };

    double lo = 1e-6;
    double f_lo = evaluate(lo);
    if (f_lo >= 0.0) {
        throw ValidationError("gamma is too close to 1 for the equalized SR-r calibration");
    }
    double hi = 1.0;
    double f_hi = evaluate(hi);
    while (f_hi < 0.0) {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        if (hi > options.threshold_cap) {
            throw ValidationError("gamma is unattainable below the threshold cap");
        }
        f_hi = evaluate(hi);
    }
    std::uintmax_t max_iter = options.max_iter;
    const auto stop = [&](double, double) { return std::abs(out.arl - gamma) <= options.tol; };
    const auto bracket = boost::math::tools::toms748_solve(evaluate, lo, hi, f_lo, f_hi, stop, max_iter);
    // Re-evaluate at the better endpoint so `out` describes the returned threshold.
    const double a = bracket.first;
    const double b = bracket.second;
    const double fa = evaluate(a);
    if (std::abs(fa) > options.tol) {
        const double fb = evaluate(b);
        if (std::abs(fb) > std::abs(fa)) {
            evaluate(a);
        }
    }
    if (!(std::abs(out.arl - gamma) <= std::max(options.tol, 1e-8))) {
        throw NumericFailure("equalized SR-r calibration did not reach the target ARL");
    }
    return out;
}

} // namespace srdetect
