#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace srdetect {

/// Streaming mean/variance (Welford), mergeable (Chan et al.).
class RunningMoments {
public:
    void add(double x);
    void merge(const RunningMoments& other);

    std::uint64_t count() const { return count_; }
    double mean() const { return mean_; }
    /// Unbiased sample variance; 0 for fewer than two observations.
    double variance() const;
    double std_error() const;

private:
    std::uint64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// sup_x |F_n(x) - F(x)| for a continuous reference CDF.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Asymptotic one-sample KS critical value at level 0.01.
double ks_critical_value_01(std::size_t n);

struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t degrees_of_freedom = 0;
    double p_value = 0.0;
};

/// Pearson goodness-of-fit of positive integer samples against
/// Geometric(p) on {1, 2, ...}. Bins with expected count below
/// `min_expected` are pooled into the upper tail.
ChiSquareResult geometric_chi_square(std::span<const std::uint64_t> samples, double success_probability,
                                     double min_expected = 5.0);

} // namespace srdetect
