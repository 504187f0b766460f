#pragma once

#include "srdetect/fredholm.hpp"
#include "srdetect/model.hpp"
#include "srdetect/quadrature.hpp"
#include "srdetect/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace srdetect {

struct QsdOptions {
    double tol = 1e-12;
    std::size_t max_iter = 100000;
};

/// Quasi-stationary distribution Q_B of the SR statistic below threshold B:
/// leading eigenvalue lambda_B and left eigen-density q_B on [0, B).
class QuasiStationary {
public:
    QuasiStationary(double lambda, GridFunction density, GridFunction cdf, std::vector<double> inverse_table,
                    std::size_t iterations, double residual);

    double threshold() const { return density_.grid().upper(); }
    double lambda() const { return lambda_; }
    const GridFunction& density() const { return density_; }
    const GridFunction& cdf() const { return cdf_; }
    const GridPtr& grid() const { return density_.grid_ptr(); }
    std::size_t iterations() const { return iterations_; }
    double residual() const { return residual_; }

    /// Inverse-CDF draw in [0, B).
    double sample(Rng& rng) const;

private:
    double lambda_;
    GridFunction density_;
    GridFunction cdf_;
    /// Q_B^{-1} tabulated at equally spaced probabilities.
    std::vector<double> inverse_table_;
    std::size_t iterations_;
    double residual_;
};

/// Power iteration for lambda q(x) = \int_0^B q(r) K_inf(x, r) dr.
///
/// q is a left eigenfunction: one step maps q to y(x_j) = sum_i w_i q(x_i)
/// K_inf(x_j, x_i), i.e. the *transpose* of the operator used for phi and
/// delta_0, where the head start sits in the second kernel argument of the
/// row index.
QuasiStationary solve_qsd(const ChangeModel& model, const GridPtr& grid, const QsdOptions& options = {});
QuasiStationary solve_qsd(const ChangeModel& model, double threshold, const GridSpec& spec = {},
                          const QsdOptions& options = {});

/// Largest real eigenvalue of the dense discretized QSD operator (Eigen
/// eigensolver); an independent route to lambda_B.
double dominant_eigenvalue_dense(const ChangeModel& model, const GridPtr& grid);

double sample_qsd(const QuasiStationary& qsd, Rng& rng);

/// Kolmogorov-Smirnov distance between the law of R_n given T > n, started
/// from R_0 = r, and Q_B. Samples are drawn by rejection until `samples`
/// conditioned values are collected.
double qsd_convergence_check(const ChangeModel& model, const QuasiStationary& qsd, double r, std::size_t n_steps,
                             std::size_t samples, std::uint64_t seed);

} // namespace srdetect
