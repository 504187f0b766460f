#include "srdetect/stats.hpp"

#include "srdetect/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>

namespace srdetect {

void RunningMoments::add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
}

void RunningMoments::merge(const RunningMoments& other) {
    if (other.count_ == 0) {
        return;
    }
    if (count_ == 0) {
        *this = other;
        return;
    }
    const double n_a = static_cast<double>(count_);
    const double n_b = static_cast<double>(other.count_);
    const double n = n_a + n_b;
    const double delta = other.mean_ - mean_;
    mean_ += delta * n_b / n;
    m2_ += other.m2_ + delta * delta * n_a * n_b / n;
    count_ += other.count_;
}

double RunningMoments::variance() const {
    return count_ < 2 ? 0.0 : m2_ / static_cast<double>(count_ - 1);
}

double RunningMoments::std_error() const {
    return count_ == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(count_));
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
    require(!samples.empty(), "ks_distance needs samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        worst = std::max({worst, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return worst;
}

double ks_critical_value_01(std::size_t n) {
    return 1.63 / std::sqrt(static_cast<double>(n));
}

ChiSquareResult geometric_chi_square(std::span<const std::uint64_t> samples, double success_probability,
                                     double min_expected) {
    require(!samples.empty(), "chi-square test needs samples");
    require(success_probability > 0.0 && success_probability < 1.0, "success probability must lie in (0,1)");
    const double n = static_cast<double>(samples.size());
    const double q = 1.0 - success_probability;

    // Bins 1..K individually, then {> K}; K is the last k whose expected
    // count and tail expected count both stay above min_expected.
    std::size_t last = 1;
    while (true) {
        const double expected_next = n * success_probability * std::pow(q, static_cast<double>(last));
        const double tail_after_next = n * std::pow(q, static_cast<double>(last + 1));
        if (expected_next < min_expected || tail_after_next < min_expected) {
            break;
        }
        ++last;
    }
    std::vector<double> observed(last + 1, 0.0);
    for (const std::uint64_t t : samples) {
        require(t >= 1, "geometric samples must be positive");
        observed[std::min<std::uint64_t>(t, last + 1) - 1] += 1.0;
    }
    double statistic = 0.0;
    for (std::size_t k = 1; k <= last + 1; ++k) {
        const double expected = k <= last ? n * success_probability * std::pow(q, static_cast<double>(k - 1))
                                          : n * std::pow(q, static_cast<double>(last));
        const double diff = observed[k - 1] - expected;
        statistic += diff * diff / expected;
    }
    ChiSquareResult result;
    result.statistic = statistic;
    result.degrees_of_freedom = last;
    const boost::math::chi_squared dist(static_cast<double>(result.degrees_of_freedom));
    result.p_value = boost::math::cdf(boost::math::complement(dist, statistic));
    return result;
}

} // namespace srdetect
