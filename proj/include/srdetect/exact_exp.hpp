#pragma once

namespace srdetect::exact {

/// Closed-form regime: E(1,2) model with thresholds in (0, 2).
struct ExactRegime {
    static constexpr double theta = 2.0;
    static constexpr double max_threshold = 2.0;
    /// (1 - log(3)/2)^{-1}: the ARL at which both calibrated thresholds reach 2.
    static double gamma0();
};

/// E_0 T_sr^r(A) = 1 + A^2/(2(1+r)^2) [A/(1+A) + 2(1 - log(1+A)/2)]^{-1}.
double delta0_exact(double r, double A);

/// E_inf T_sr^r(A) = 1 + A/(2(1+r)) [1 - log(1+A)/2]^{-1}.
double phi_exact(double r, double A);

/// SRP ARL, 1/(1 - lambda_B) with lambda_B = log(1+B)/2.
double srp_arl_exact(double B);

/// SRP detection delay, the uniform average of delta0_exact over [0, B).
double srp_add_exact(double B);

/// B with srp_arl_exact(B) = gamma.
double srp_threshold(double gamma);

/// The root in (0, 2) of A + (g-1) sqrt(1+A) log(1+A) - 2 (g-1) sqrt(1+A).
double srr_threshold(double gamma);

/// r_A = sqrt(1+A) - 1, where delta0_exact(r_A, A) = srp_add_exact(A).
double equalizer_headstart(double A);

/// J_P of SR-r: max(srp_add_exact(A), delta0_exact(r, A)).
double sup_add_exact(double r, double A);

/// A/sqrt(1+A) - log(1+A); positive on (0, 2).
double suboptimality_margin(double A);

struct MinimaxComparison {
    double gamma;
    double srp_threshold;
    double jp_srp;
    double srr_threshold;
    double srr_head_start;
    double jp_srr;

    double gap() const { return jp_srp - jp_srr; }
};

/// Both procedures calibrated to ARL gamma, 1 < gamma < gamma0.
MinimaxComparison suboptimality_gap(double gamma);

} // namespace srdetect::exact
