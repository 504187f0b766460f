#include "srdetect/quasi_stationary.hpp"

#include "srdetect/errors.hpp"
#include "srdetect/stats.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace srdetect {

namespace {

constexpr std::size_t kInverseTableSize = 4097;

// Weights W with \int_0^B K_inf(x, r) q(r) dr ~ sum_i W_i q(x_i). K_inf(x, .)
// vanishes below x / lr_support_max - 1; when that cut lies inside (0, B) the
// row is integrated over the support only.
void qsd_row(const ChangeModel& model, const QuadratureGrid& grid, double x, std::span<double> out) {
    const double support = model.lr_support_max();
    const double cut = std::isfinite(support) ? x / support - 1.0 : 0.0;
    if (cut >= grid.upper()) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    if (cut > 0.0) {
        grid.restricted_weights(cut, grid.upper(), [&](double r) { return model.kernel(Hypothesis::pre, x, r); }, out);
        return;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out[i] = grid.weight(i) * model.kernel(Hypothesis::pre, x, grid.node(i));
    }
}

std::vector<double> qsd_operator(const ChangeModel& model, const QuadratureGrid& grid) {
    const std::size_t n = grid.size();
    std::vector<double> op(n * n);
    for (std::size_t j = 0; j < n; ++j) {
        qsd_row(model, grid, grid.node(j), std::span<double>(&op[j * n], n));
    }
    return op;
}

} // namespace

QuasiStationary::QuasiStationary(double lambda, GridFunction density, GridFunction cdf,
                                 std::vector<double> inverse_table, std::size_t iterations, double residual)
    : lambda_(lambda),
      density_(std::move(density)),
      cdf_(std::move(cdf)),
      inverse_table_(std::move(inverse_table)),
      iterations_(iterations),
      residual_(residual) {}

double QuasiStationary::sample(Rng& rng) const {
    const double u = rng.uniform() * static_cast<double>(inverse_table_.size() - 1);
    const auto k = static_cast<std::size_t>(u);
    const double t = u - static_cast<double>(k);
    const double x = (1.0 - t) * inverse_table_[k] + t * inverse_table_[std::min(k + 1, inverse_table_.size() - 1)];
    return std::min(x, std::nextafter(threshold(), 0.0));
}

QuasiStationary solve_qsd(const ChangeModel& model, const GridPtr& grid, const QsdOptions& options) {
    require(grid != nullptr, "solve_qsd needs a grid");
    require(options.tol > 0.0 && options.max_iter >= 1, "solve_qsd needs tol > 0 and max_iter >= 1");
    const std::size_t n = grid->size();
    const auto nodes = grid->nodes();
    const auto weights = grid->weights();
    const double upper = grid->upper();

    // Row j maps the previous density to the new state x_j (transposed
    // orientation: q is a left eigenfunction of the kernel).
    const std::vector<double> op = qsd_operator(model, *grid);

    std::vector<double> q(n, 1.0 / upper);
    std::vector<double> next(n);
    double lambda = 0.0;
    double residual = std::numeric_limits<double>::infinity();
    std::size_t iter = 0;
    while (iter < options.max_iter) {
        ++iter;
        for (std::size_t j = 0; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sum += op[j * n + i] * q[i];
            }
            next[j] = sum;
        }
        double mass = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            mass += weights[j] * next[j];
        }
        if (!(mass > 0.0) || !std::isfinite(mass)) {
            throw NumericFailure("quasi-stationary iteration lost all mass");
        }
        lambda = mass;
        double worst = 0.0;
        double scale = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            worst = std::max(worst, std::abs(lambda * q[j] - next[j]));
            scale = std::max(scale, std::abs(next[j]));
        }
        residual = worst / scale;
        for (std::size_t j = 0; j < n; ++j) {
            q[j] = next[j] / mass;
        }
        if (residual <= options.tol) {
            break;
        }
    }
    if (!(residual <= options.tol)) {
        throw NumericFailure("quasi-stationary power iteration did not converge in " + std::to_string(iter) +
                             " iterations (last residual " + std::to_string(residual) + ")");
    }
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw NumericFailure("quasi-stationary eigenvalue " + std::to_string(lambda) + " outside (0, 1)");
    }
    const double peak = *std::max_element(q.begin(), q.end());
    for (double& v : q) {
        if (v < -options.tol * peak) {
            throw NumericFailure("quasi-stationary density is negative on the grid");
        }
        v = std::max(v, 0.0);
    }

    // Natural interpolants: q(x) = lambda^{-1} sum_i w_i q_i K(x, x_i), and its
    // integral Q(x) = lambda^{-1} sum_i w_i q_i F_inf(x/(1+x_i)).
    auto weighted = std::make_shared<std::vector<double>>(n);
    for (std::size_t i = 0; i < n; ++i) {
        (*weighted)[i] = weights[i] * q[i] / lambda;
    }
    const auto raw_cdf = [model, grid, weighted](double x) {
        double sum = 0.0;
        const auto xs = grid->nodes();
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sum += (*weighted)[i] * model.lr_cdf_pre(x / (1.0 + xs[i]));
        }
        return sum;
    };
    const double total = raw_cdf(upper);
    auto cdf_fn = [raw_cdf, total, upper](double x) {
        if (x <= 0.0) return 0.0;
        if (x >= upper) return 1.0;
        return std::min(1.0, raw_cdf(x) / total);
    };
    auto scaled = std::make_shared<std::vector<double>>(q);
    for (double& v : *scaled) {
        v /= lambda * total;
    }
    auto density_fn = [model, grid, scaled, upper](double x) {
        if (x < 0.0 || x >= upper) return 0.0;
        std::vector<double> row(grid->size());
        qsd_row(model, *grid, x, row);
        double sum = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            sum += row[i] * (*scaled)[i];
        }
        return sum;
    };

    std::vector<double> cdf_values(n);
    for (std::size_t j = 0; j < n; ++j) {
        cdf_values[j] = cdf_fn(nodes[j]);
    }

    // Tabulate Q on a fine uniform mesh and invert it piecewise linearly.
    std::vector<double> mesh_x(kInverseTableSize), mesh_q(kInverseTableSize);
    for (std::size_t k = 0; k < kInverseTableSize; ++k) {
        mesh_x[k] = upper * static_cast<double>(k) / static_cast<double>(kInverseTableSize - 1);
        mesh_q[k] = k + 1 == kInverseTableSize ? 1.0 : cdf_fn(mesh_x[k]);
    }
    for (std::size_t k = 1; k < kInverseTableSize; ++k) {
        mesh_q[k] = std::max(mesh_q[k], mesh_q[k - 1]);
    }
    std::vector<double> inverse(kInverseTableSize);
    for (std::size_t k = 0; k < kInverseTableSize; ++k) {
        const double p = static_cast<double>(k) / static_cast<double>(kInverseTableSize - 1);
        auto it = std::lower_bound(mesh_q.begin(), mesh_q.end(), p);
        if (it == mesh_q.begin()) {
            inverse[k] = 0.0;
            continue;
        }
        if (it == mesh_q.end()) {
            inverse[k] = upper;
            continue;
        }
        const auto hi = static_cast<std::size_t>(it - mesh_q.begin());
        const std::size_t lo = hi - 1;
        const double span = mesh_q[hi] - mesh_q[lo];
        const double t = span > 0.0 ? (p - mesh_q[lo]) / span : 0.0;
        inverse[k] = mesh_x[lo] + t * (mesh_x[hi] - mesh_x[lo]);
    }

    GridFunction density(grid, q, density_fn);
    GridFunction cdf(grid, std::move(cdf_values), cdf_fn);
    return QuasiStationary(lambda, std::move(density), std::move(cdf), std::move(inverse), iter, residual);
}

QuasiStationary solve_qsd(const ChangeModel& model, double threshold, const GridSpec& spec,
                          const QsdOptions& options) {
    return solve_qsd(model, spec.make(threshold), options);
}

double dominant_eigenvalue_dense(const ChangeModel& model, const GridPtr& grid) {
    const std::size_t n = grid->size();
    const std::vector<double> rows = qsd_operator(model, *grid);
    Eigen::MatrixXd op(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            op(j, i) = rows[j * n + i];
        }
    }
    const Eigen::EigenSolver<Eigen::MatrixXd> solver(op, false);
    if (solver.info() != Eigen::Success) {
        throw NumericFailure("dense eigensolver failed");
    }
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
        best = std::max(best, solver.eigenvalues()(k).real());
    }
    return best;
}

double sample_qsd(const QuasiStationary& qsd, Rng& rng) {
    return qsd.sample(rng);
}

double qsd_convergence_check(const ChangeModel& model, const QuasiStationary& qsd, double r, std::size_t n_steps,
                             std::size_t samples, std::uint64_t seed) {
    const double upper = qsd.threshold();
    require(r >= 0.0 && r < upper, "start must lie in [0, B)");
    require(samples >= 1, "need at least one sample");
    std::vector<double> kept;
    kept.reserve(samples);
    for (std::uint64_t stream = 0; kept.size() < samples; ++stream) {
        Rng rng(seed, stream);
        double statistic = r;
        bool alive = true;
        for (std::size_t k = 0; k < n_steps && alive; ++k) {
            statistic = (1.0 + statistic) * model.lr(model.sample(Hypothesis::pre, rng));
            alive = statistic < upper;
        }
        if (alive) {
            kept.push_back(statistic);
        }
        if (stream > 1000 * samples + 1000000 && kept.empty()) {
            throw NumericFailure("no runs survived; cannot condition on T > n");
        }
    }
    return ks_distance(std::move(kept), [&qsd](double x) { return qsd.cdf()(x); });
}

} // namespace srdetect
