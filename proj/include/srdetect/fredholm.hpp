#pragma once

#include "srdetect/model.hpp"
#include "srdetect/quadrature.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace srdetect {

/// Values of a function of the head start r on the nodes of a quadrature
/// grid, with an off-node evaluation rule. Solver outputs carry the Nyström
/// natural interpolant; plain grid functions interpolate linearly.
class GridFunction {
public:
    using Interpolant = std::function<double(double)>;

    GridFunction(GridPtr grid, std::vector<double> values, Interpolant off_node = {});

    static GridFunction constant(GridPtr grid, double value);

    const QuadratureGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::span<const double> values() const { return *values_; }
    std::size_t size() const { return values_->size(); }
    double operator[](std::size_t i) const { return (*values_)[i]; }

    /// Exact stored value at a node, interpolant elsewhere.
    double operator()(double r) const;

    bool has_natural_interpolant() const { return static_cast<bool>(off_node_); }

private:
    GridPtr grid_;
    std::shared_ptr<const std::vector<double>> values_;
    Interpolant off_node_;
};

using Kernel = std::function<double(double x, double r)>;
/// Point beyond which K(., r) vanishes. Rows whose edge falls inside the grid
/// range are integrated over [0, edge] only, with u interpolated from the
/// grid, which keeps the discretization continuous in the threshold.
using KernelEdge = std::function<double(double r)>;

/// Support edge of the model kernels, (1 + r) lr_support_max; empty when the
/// likelihood ratio is unbounded.
KernelEdge kernel_edge(const ChangeModel& model);

/// Weights W with \int_0^A K(x, r) u(x) dx ~ sum_i W_i u(x_i).
void kernel_row(const Kernel& kernel, const KernelEdge& edge, const QuadratureGrid& grid, double r,
                std::span<double> out);

struct LinearSolveDiagnostics {
    double condition_estimate = 0.0;
    double relative_residual = 0.0;
};

/// Nyström solution of u(r) = g(r) + \int_0^A K(x, r) u(x) dx on the grid.
/// Throws NumericFailure when the discretized operator is singular or the
/// condition estimate exceeds 1e12.
GridFunction solve_second_kind(const Kernel& kernel, const GridFunction& inhomogeneity, const GridPtr& grid,
                               LinearSolveDiagnostics* diagnostics = nullptr, const KernelEdge& edge = {});

/// phi(r) = E_inf T_sr^r(A), A = grid->upper().
GridFunction arl_false_alarm(const ChangeModel& model, const GridPtr& grid);
GridFunction arl_false_alarm(const ChangeModel& model, double threshold, const GridSpec& spec = {});

/// delta_0(r) = E_0 T_sr^r(A).
GridFunction add_at_change_zero(const ChangeModel& model, const GridPtr& grid);
GridFunction add_at_change_zero(const ChangeModel& model, double threshold, const GridSpec& spec = {});

struct DelaySequences {
    /// delta_nu(r) = E_nu (T - nu)^+, nu = 0..nu_max.
    std::vector<GridFunction> delay;
    /// rho_nu(r) = P_inf(T > nu), nu = 0..nu_max.
    std::vector<GridFunction> survival;
};

/// Applies the P_inf kernel nu_max times starting from (delta_0, 1).
DelaySequences delay_and_survival_sequences(const ChangeModel& model, const GridFunction& delta0,
                                            std::size_t nu_max);

/// psi(r) = sum_nu E_nu (T - nu)^+, solved with inhomogeneity delta_0.
GridFunction psi(const ChangeModel& model, const GridFunction& delta0);
GridFunction psi(const ChangeModel& model, const GridPtr& grid);

/// Conditional average delay delta_nu/rho_nu. Throws NumericFailure when
/// rho_nu drops below 1e-12 anywhere on the grid.
GridFunction cadd(const GridFunction& delta_nu, const GridFunction& rho_nu);

/// Truncation rule for sup over nu: stop once |c_nu - c_{nu-1}| < tolerance
/// for `patience` consecutive nu, or at max_nu.
struct TruncationRule {
    double tolerance = 1e-10;
    std::size_t patience = 5;
    std::size_t max_nu = 10000;
};

/// All SR-r operating characteristics at one threshold. Precomputes the
/// discretized P_inf operator so that CADD sequences at arbitrary head
/// starts are cheap.
class SrrCharacteristics {
public:
    SrrCharacteristics(const ChangeModel& model, const GridPtr& grid);
    SrrCharacteristics(const ChangeModel& model, double threshold, const GridSpec& spec = {});

    double threshold() const { return grid_->upper(); }
    const GridPtr& grid() const { return grid_; }
    const GridFunction& phi() const { return phi_; }
    const GridFunction& delta0() const { return delta0_; }
    const GridFunction& psi() const { return psi_; }

    /// cadd_nu(r) for nu = 0..nu_max.
    std::vector<double> cadd_sequence(double r, std::size_t nu_max) const;
    /// cadd_nu(r) until the truncation rule fires.
    std::vector<double> cadd_sequence(double r, const TruncationRule& rule) const;

    /// I_r(T_sr^r) = (r delta_0(r) + psi(r)) / (r + phi(r)).
    double integral_lower_bound(double r) const;

    /// Runs the (delta, rho) recursion from start vectors given on the grid
    /// and reports delta_nu/rho_nu after averaging both with `weights`.
    /// Used for randomized head starts.
    std::vector<double> averaged_cadd_sequence(std::span<const double> weights, std::size_t nu_max) const;

private:
    std::vector<double> apply(std::span<const double> v) const;
    template <typename Continue>
    std::vector<double> run_recursion(std::span<const double> weights, Continue&& keep_going) const;

    ChangeModel model_;
    GridPtr grid_;
    /// Row j holds the kernel_row weights of K_inf(., x_j).
    std::vector<double> transition_;
    GridFunction phi_;
    GridFunction delta0_;
    GridFunction psi_;
};

} // namespace srdetect
