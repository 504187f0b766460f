#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace srdetect {

enum class QuadratureScheme { gauss_legendre, trapezoid };

std::string to_string(QuadratureScheme scheme);
QuadratureScheme parse_quadrature_scheme(const std::string& name);

/// Nodes and weights discretizing [0, upper]. Nodes are strictly increasing
/// and the weights sum to upper.
class QuadratureGrid {
public:
    static constexpr std::size_t kMinNodes = 8;

    static QuadratureGrid gauss_legendre(double upper, std::size_t n);
    static QuadratureGrid trapezoid(double upper, std::size_t n);
    static QuadratureGrid make(QuadratureScheme scheme, double upper, std::size_t n);

    double upper() const { return upper_; }
    QuadratureScheme scheme() const { return scheme_; }
    std::size_t size() const { return nodes_.size(); }
    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> weights() const { return weights_; }
    double node(std::size_t i) const { return nodes_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }

    /// Index of the node equal to x, if any.
    std::optional<std::size_t> find_node(double x) const;

    /// Coefficients c with u(y) ~ sum_i c_i u(x_i): barycentric Lagrange on
    /// Gauss-Legendre grids, piecewise linear on trapezoid grids.
    void interpolation_row(double y, std::span<double> out) const;

    /// Weights W with \int_lo^hi h(s) u(s) ds ~ sum_i W_i u(x_i), for
    /// [lo, hi] inside [0, upper]. Uses a Gauss-Legendre rule of size() points
    /// on [lo, hi] and interpolation_row for u. Needed when h is cut off
    /// inside the grid range, where the plain rule loses accuracy.
    void restricted_weights(double lo, double hi, const std::function<double(double)>& h,
                            std::span<double> out) const;

private:
    QuadratureGrid(double upper, QuadratureScheme scheme, std::vector<double> nodes, std::vector<double> weights);

    double upper_;
    QuadratureScheme scheme_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> barycentric_;
    std::vector<double> unit_nodes_;
    std::vector<double> unit_weights_;
};

using GridPtr = std::shared_ptr<const QuadratureGrid>;

struct GridSpec {
    std::size_t nodes = 256;
    QuadratureScheme scheme = QuadratureScheme::gauss_legendre;

    GridPtr make(double upper) const;
};

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre_reference(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

} // namespace srdetect
