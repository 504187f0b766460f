#include "srdetect/fredholm.hpp"

#include "srdetect/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace srdetect {

GridFunction::GridFunction(GridPtr grid, std::vector<double> values, Interpolant off_node)
    : grid_(std::move(grid)),
      values_(std::make_shared<const std::vector<double>>(std::move(values))),
      off_node_(std::move(off_node)) {
    require(grid_ != nullptr, "grid function needs a grid");
    require(values_->size() == grid_->size(), "grid function size does not match its grid");
    for (const double v : *values_) {
        if (!std::isfinite(v)) {
            throw NumericFailure("grid function has non-finite values");
        }
    }
}

GridFunction GridFunction::constant(GridPtr grid, double value) {
    const std::size_t n = grid->size();
    return GridFunction(std::move(grid), std::vector<double>(n, value), [value](double) { return value; });
}

double GridFunction::operator()(double r) const {
    if (const auto index = grid_->find_node(r)) {
        return (*values_)[*index];
    }
    if (off_node_) {
        return off_node_(r);
    }
    const auto nodes = grid_->nodes();
    const auto& v = *values_;
    if (r <= nodes.front()) {
        return v.front();
    }
    if (r >= nodes.back()) {
        return v.back();
    }
    const auto hi = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), r) - nodes.begin());
    const std::size_t lo = hi - 1;
    const double t = (r - nodes[lo]) / (nodes[hi] - nodes[lo]);
    return (1.0 - t) * v[lo] + t * v[hi];
}

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kMaxResidual = 1e-12;

double apply_row(const Kernel& kernel, const KernelEdge& edge, const QuadratureGrid& grid, double r,
                 std::span<const double> values) {
    std::vector<double> row(grid.size());
    kernel_row(kernel, edge, grid, r, row);
    double sum = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        sum += row[i] * values[i];
    }
    return sum;
}

struct NystromState {
    Kernel kernel;
    KernelEdge edge;
    GridFunction inhomogeneity;
    GridPtr grid;
    std::vector<double> solution;

    double evaluate(double r) const { return inhomogeneity(r) + apply_row(kernel, edge, *grid, r, solution); }
};

Kernel pre_kernel(const ChangeModel& model) {
    return [model](double x, double r) { return model.kernel(Hypothesis::pre, x, r); };
}

Kernel post_kernel(const ChangeModel& model) {
    return [model](double x, double r) { return model.kernel(Hypothesis::post, x, r); };
}

} // namespace

KernelEdge kernel_edge(const ChangeModel& model) {
    const double support = model.lr_support_max();
    if (!std::isfinite(support)) {
        return {};
    }
    return [support](double r) { return (1.0 + r) * support; };
}

void kernel_row(const Kernel& kernel, const KernelEdge& edge, const QuadratureGrid& grid, double r,
                std::span<double> out) {
    const double cut = edge ? edge(r) : std::numeric_limits<double>::infinity();
    if (cut < grid.upper()) {
        grid.restricted_weights(0.0, cut, [&](double x) { return kernel(x, r); }, out);
        return;
    }
    const auto nodes = grid.nodes();
    const auto weights = grid.weights();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        out[i] = weights[i] * kernel(nodes[i], r);
    }
}

GridFunction solve_second_kind(const Kernel& kernel, const GridFunction& inhomogeneity, const GridPtr& grid,
                               LinearSolveDiagnostics* diagnostics, const KernelEdge& edge) {
    require(grid != nullptr, "solve_second_kind needs a grid");
    const std::size_t n = grid->size();
    const auto nodes = grid->nodes();
    const auto weights = grid->weights();

    Eigen::MatrixXd op(n, n);
    Eigen::VectorXd rhs(n);
    std::vector<double> row(n);
    for (std::size_t j = 0; j < n; ++j) {
        kernel_row(kernel, edge, *grid, nodes[j], row);
        for (std::size_t i = 0; i < n; ++i) {
            op(j, i) = (i == j ? 1.0 : 0.0) - row[i];
        }
        rhs(j) = inhomogeneity(nodes[j]);
    }
    if (!op.allFinite() || !rhs.allFinite()) {
        throw NumericFailure("kernel or inhomogeneity produced non-finite values on the grid");
    }

    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(op);
    const double rcond = lu.rcond();
    const double condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(condition <= kMaxCondition)) {
        throw NumericFailure("second-kind system is singular or ill-conditioned (condition estimate " +
                             std::to_string(condition) + ")");
    }
    Eigen::VectorXd u = lu.solve(rhs);
    u += lu.solve(rhs - op * u);

    const double scale = op.cwiseAbs().rowwise().sum().maxCoeff() * u.cwiseAbs().maxCoeff() + rhs.cwiseAbs().maxCoeff();
    const double residual = (rhs - op * u).cwiseAbs().maxCoeff() / scale;
    if (!(residual <= kMaxResidual)) {
        throw NumericFailure("second-kind solve residual " + std::to_string(residual) + " exceeds 1e-12");
    }
    if (diagnostics != nullptr) {
        diagnostics->condition_estimate = condition;
        diagnostics->relative_residual = residual;
    }

    auto state = std::make_shared<NystromState>(
        NystromState{kernel, edge, inhomogeneity, grid, std::vector<double>(u.data(), u.data() + n)});
    std::vector<double> values = state->solution;
    return GridFunction(grid, std::move(values), [state](double r) { return state->evaluate(r); });
}

GridFunction arl_false_alarm(const ChangeModel& model, const GridPtr& grid) {
    return solve_second_kind(pre_kernel(model), GridFunction::constant(grid, 1.0), grid, nullptr, kernel_edge(model));
}

GridFunction arl_false_alarm(const ChangeModel& model, double threshold, const GridSpec& spec) {
    return arl_false_alarm(model, spec.make(threshold));
}

GridFunction add_at_change_zero(const ChangeModel& model, const GridPtr& grid) {
    return solve_second_kind(post_kernel(model), GridFunction::constant(grid, 1.0), grid, nullptr,
                             kernel_edge(model));
}

GridFunction add_at_change_zero(const ChangeModel& model, double threshold, const GridSpec& spec) {
    return add_at_change_zero(model, spec.make(threshold));
}

DelaySequences delay_and_survival_sequences(const ChangeModel& model, const GridFunction& delta0,
                                            std::size_t nu_max) {
    const GridPtr& grid = delta0.grid_ptr();
    const auto kernel = pre_kernel(model);

    const auto edge = kernel_edge(model);
    const std::size_t n = grid->size();
    std::vector<double> matrix(n * n);
    for (std::size_t j = 0; j < n; ++j) {
        kernel_row(kernel, edge, *grid, grid->node(j), std::span<double>(&matrix[j * n], n));
    }

    // Each iterate v_nu(r) = \int K(x, r) v_{nu-1}(x) dx, on and off the grid.
    const auto iterate = [&](const GridFunction& previous) {
        auto prev_values = std::make_shared<const std::vector<double>>(previous.values().begin(), previous.values().end());
        auto evaluate = [grid, kernel, edge, prev_values](double r) {
            return apply_row(kernel, edge, *grid, r, *prev_values);
        };
        std::vector<double> values(n);
        for (std::size_t j = 0; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sum += matrix[j * n + i] * (*prev_values)[i];
            }
            values[j] = sum;
        }
        return GridFunction(grid, std::move(values), std::move(evaluate));
    };

    DelaySequences out;
    out.delay.reserve(nu_max + 1);
    out.survival.reserve(nu_max + 1);
    out.delay.push_back(delta0);
    out.survival.push_back(GridFunction::constant(grid, 1.0));
    for (std::size_t nu = 1; nu <= nu_max; ++nu) {
        out.delay.push_back(iterate(out.delay.back()));
        out.survival.push_back(iterate(out.survival.back()));
    }
    return out;
}

GridFunction psi(const ChangeModel& model, const GridFunction& delta0) {
    return solve_second_kind(pre_kernel(model), delta0, delta0.grid_ptr(), nullptr, kernel_edge(model));
}

GridFunction psi(const ChangeModel& model, const GridPtr& grid) {
    return psi(model, add_at_change_zero(model, grid));
}

GridFunction cadd(const GridFunction& delta_nu, const GridFunction& rho_nu) {
    require(delta_nu.grid_ptr() == rho_nu.grid_ptr(), "cadd needs delta and rho on the same grid");
    constexpr double kDegenerate = 1e-12;
    std::vector<double> values(delta_nu.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(rho_nu[i] >= kDegenerate)) {
            throw NumericFailure("survival probability below 1e-12; conditional delay is degenerate");
        }
        values[i] = delta_nu[i] / rho_nu[i];
    }
    return GridFunction(delta_nu.grid_ptr(), std::move(values),
                        [delta_nu, rho_nu](double r) { return delta_nu(r) / rho_nu(r); });
}

SrrCharacteristics::SrrCharacteristics(const ChangeModel& model, const GridPtr& grid)
    : model_(model),
      grid_(grid),
      phi_(arl_false_alarm(model, grid)),
      delta0_(add_at_change_zero(model, grid)),
      psi_(srdetect::psi(model, delta0_)) {
    const std::size_t n = grid_->size();
    const auto kernel = pre_kernel(model_);
    const auto edge = kernel_edge(model_);
    transition_.resize(n * n);
    for (std::size_t j = 0; j < n; ++j) {
        kernel_row(kernel, edge, *grid_, grid_->node(j), std::span<double>(&transition_[j * n], n));
    }
}

SrrCharacteristics::SrrCharacteristics(const ChangeModel& model, double threshold, const GridSpec& spec)
    : SrrCharacteristics(model, spec.make(threshold)) {}

std::vector<double> SrrCharacteristics::apply(std::span<const double> v) const {
    const std::size_t n = v.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double* row = &transition_[j * n];
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += row[i] * v[i];
        }
        out[j] = sum;
    }
    return out;
}

template <typename Continue>
std::vector<double> SrrCharacteristics::run_recursion(std::span<const double> weights, Continue&& keep_going) const {
    std::vector<double> delay(delta0_.values().begin(), delta0_.values().end());
    std::vector<double> survival(delay.size(), 1.0);
    std::vector<double> out;
    while (true) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < delay.size(); ++i) {
            num += weights[i] * delay[i];
            den += weights[i] * survival[i];
        }
        if (!(den > 0.0)) {
            throw NumericFailure("survival probability vanished in the CADD recursion");
        }
        out.push_back(num / den);
        if (!keep_going(out)) {
            break;
        }
        delay = apply(delay);
        survival = apply(survival);
        // Common rescaling keeps the ratio and avoids underflow for large nu.
        const double peak = *std::max_element(survival.begin(), survival.end());
        if (!(peak > 0.0)) {
            throw NumericFailure("survival probability vanished in the CADD recursion");
        }
        for (std::size_t i = 0; i < delay.size(); ++i) {
            delay[i] /= peak;
            survival[i] /= peak;
        }
    }
    return out;
}

std::vector<double> SrrCharacteristics::averaged_cadd_sequence(std::span<const double> weights,
                                                               std::size_t nu_max) const {
    require(weights.size() == grid_->size(), "weights must match the grid");
    return run_recursion(weights, [nu_max](const std::vector<double>& c) { return c.size() <= nu_max; });
}

std::vector<double> SrrCharacteristics::cadd_sequence(double r, std::size_t nu_max) const {
    require(r >= 0.0 && r < threshold(), "head start must lie in [0, A)");
    std::vector<double> out{delta0_(r)};
    if (nu_max == 0) {
        return out;
    }
    // For nu >= 1, delta_nu(r) and rho_nu(r) are one kernel application away
    // from the grid vectors at nu-1.
    std::vector<double> first_step(grid_->size());
    kernel_row(pre_kernel(model_), kernel_edge(model_), *grid_, r, first_step);
    const auto rest = run_recursion(first_step, [nu_max](const std::vector<double>& c) { return c.size() < nu_max; });
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

std::vector<double> SrrCharacteristics::cadd_sequence(double r, const TruncationRule& rule) const {
    require(r >= 0.0 && r < threshold(), "head start must lie in [0, A)");
    std::vector<double> out{delta0_(r)};
    std::vector<double> first_step(grid_->size());
    kernel_row(pre_kernel(model_), kernel_edge(model_), *grid_, r, first_step);
    std::size_t calm = 0;
    const double head = out.front();
    const auto rest = run_recursion(first_step, [&](const std::vector<double>& c) {
        const double previous = c.size() >= 2 ? c[c.size() - 2] : head;
        calm = std::abs(c.back() - previous) < rule.tolerance ? calm + 1 : 0;
        return calm < rule.patience && c.size() < rule.max_nu;
    });
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

double SrrCharacteristics::integral_lower_bound(double r) const {
    return (r * delta0_(r) + psi_(r)) / (r + phi_(r));
}

} // namespace srdetect
