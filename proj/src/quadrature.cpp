#include "srdetect/quadrature.hpp"

#include "srdetect/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace srdetect {

std::string to_string(QuadratureScheme scheme) {
    return scheme == QuadratureScheme::gauss_legendre ? "gauss_legendre" : "trapezoid";
}

QuadratureScheme parse_quadrature_scheme(const std::string& name) {
    if (name == "gauss_legendre" || name == "gauss-legendre") {
        return QuadratureScheme::gauss_legendre;
    }
    if (name == "trapezoid") {
        return QuadratureScheme::trapezoid;
    }
    throw ValidationError("unknown quadrature scheme '" + name + "'");
}

void gauss_legendre_reference(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Tricomi initial guess for the i-th largest root.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double derivative = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = p2;
            }
            derivative = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / derivative;
            x -= dx;
            if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) {
                break;
            }
        }
        // Recompute P_n' at the converged root for the weight.
        double p0 = 1.0;
        double p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = p2;
        }
        derivative = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) {
        nodes[n / 2] = 0.0;
    }
}

QuadratureGrid::QuadratureGrid(double upper, QuadratureScheme scheme, std::vector<double> nodes,
                               std::vector<double> weights)
    : upper_(upper), scheme_(scheme), nodes_(std::move(nodes)), weights_(std::move(weights)) {
    const std::size_t n = nodes_.size();
    gauss_legendre_reference(n, unit_nodes_, unit_weights_);
    for (std::size_t i = 0; i < n; ++i) {
        unit_nodes_[i] = 0.5 * (unit_nodes_[i] + 1.0);
        unit_weights_[i] *= 0.5;
    }
    if (scheme_ == QuadratureScheme::gauss_legendre) {
        // Barycentric weights for Legendre points: (-1)^i sqrt((1 - t_i^2) w_i).
        barycentric_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = 2.0 * nodes_[i] / upper_ - 1.0;
            const double w = 2.0 * weights_[i] / upper_;
            barycentric_[i] = (i % 2 == 0 ? 1.0 : -1.0) * std::sqrt((1.0 - t * t) * w);
        }
    }
}

QuadratureGrid QuadratureGrid::gauss_legendre(double upper, std::size_t n) {
    require(upper > 0.0 && std::isfinite(upper), "quadrature upper limit must be positive and finite");
    require(n >= kMinNodes, "quadrature needs at least 8 nodes");
    std::vector<double> nodes, weights;
    gauss_legendre_reference(n, nodes, weights);
    const double half = 0.5 * upper;
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i] = half * (nodes[i] + 1.0);
        weights[i] *= half;
    }
    return QuadratureGrid(upper, QuadratureScheme::gauss_legendre, std::move(nodes), std::move(weights));
}

QuadratureGrid QuadratureGrid::trapezoid(double upper, std::size_t n) {
    require(upper > 0.0 && std::isfinite(upper), "quadrature upper limit must be positive and finite");
    require(n >= kMinNodes, "quadrature needs at least 8 nodes");
    const double h = upper / static_cast<double>(n - 1);
    std::vector<double> nodes(n), weights(n, h);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i] = h * static_cast<double>(i);
    }
    nodes.back() = upper;
    weights.front() = weights.back() = 0.5 * h;
    return QuadratureGrid(upper, QuadratureScheme::trapezoid, std::move(nodes), std::move(weights));
}

QuadratureGrid QuadratureGrid::make(QuadratureScheme scheme, double upper, std::size_t n) {
    return scheme == QuadratureScheme::gauss_legendre ? gauss_legendre(upper, n) : trapezoid(upper, n);
}

void QuadratureGrid::interpolation_row(double y, std::span<double> out) const {
    const std::size_t n = nodes_.size();
    require(out.size() == n, "interpolation row size does not match the grid");
    std::fill(out.begin(), out.end(), 0.0);
    if (scheme_ == QuadratureScheme::trapezoid) {
        if (y <= nodes_.front()) {
            out.front() = 1.0;
            return;
        }
        if (y >= nodes_.back()) {
            out.back() = 1.0;
            return;
        }
        const auto hi = static_cast<std::size_t>(std::upper_bound(nodes_.begin(), nodes_.end(), y) - nodes_.begin());
        const double t = (y - nodes_[hi - 1]) / (nodes_[hi] - nodes_[hi - 1]);
        out[hi - 1] = 1.0 - t;
        out[hi] = t;
        return;
    }
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = y - nodes_[i];
        if (d == 0.0) {
            std::fill(out.begin(), out.end(), 0.0);
            out[i] = 1.0;
            return;
        }
        out[i] = barycentric_[i] / d;
        denom += out[i];
    }
    for (double& c : out) {
        c /= denom;
    }
}

void QuadratureGrid::restricted_weights(double lo, double hi, const std::function<double(double)>& h,
                                        std::span<double> out) const {
    const std::size_t n = nodes_.size();
    require(out.size() == n, "weight row size does not match the grid");
    require(0.0 <= lo && lo <= hi && hi <= upper_, "restricted range must lie inside the grid range");
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> row(n);
    const double len = hi - lo;
    for (std::size_t k = 0; k < n; ++k) {
        const double y = lo + len * unit_nodes_[k];
        const double v = len * unit_weights_[k] * h(y);
        if (v == 0.0) {
            continue;
        }
        interpolation_row(y, row);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] += v * row[i];
        }
    }
}

std::optional<std::size_t> QuadratureGrid::find_node(double x) const {
    const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), x);
    if (it != nodes_.end() && *it == x) {
        return static_cast<std::size_t>(it - nodes_.begin());
    }
    return std::nullopt;
}

GridPtr GridSpec::make(double upper) const {
    return std::make_shared<const QuadratureGrid>(QuadratureGrid::make(scheme, upper, nodes));
}

} // namespace srdetect
