#pragma once

#include "srdetect/rng.hpp"

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace srdetect {

enum class Hypothesis { pre, post };

/// An i.i.d. change model: pre-change density f_inf, post-change density f_0,
/// the likelihood ratio Lambda = f_0/f_inf and the distribution functions of
/// Lambda(X_1) under both hypotheses. Immutable and cheap to copy; copies
/// share the underlying callables.
class ChangeModel {
public:
    using RealFn = std::function<double(double)>;
    using Sampler = std::function<double(Hypothesis, Rng&)>;

    struct Components {
        std::string name;
        /// Named numeric parameters, e.g. {"theta", 2.0}.
        std::map<std::string, double> parameters;
        RealFn pre_density;
        RealFn post_density;
        RealFn lr;
        RealFn lr_cdf_pre;
        RealFn lr_cdf_post;
        /// Densities of Lambda(X_1). When absent the kernels fall back to
        /// central differences of the CDFs.
        std::optional<RealFn> lr_pdf_pre;
        std::optional<RealFn> lr_pdf_post;
        double lr_support_max = std::numeric_limits<double>::infinity();
        Sampler sampler;
    };

    /// Validates the components: all callables present, CDFs vanish at 0,
    /// reach 1 at the support maximum and show no atoms on a probe grid.
    explicit ChangeModel(Components components);

    const std::string& name() const { return impl_->name; }
    const std::map<std::string, double>& parameters() const { return impl_->parameters; }
    std::optional<double> parameter(const std::string& key) const;
    /// "exponential(theta=2)".
    std::string describe() const;

    double pre_density(double x) const { return impl_->pre_density(x); }
    double post_density(double x) const { return impl_->post_density(x); }
    double lr(double x) const { return impl_->lr(x); }
    double lr_cdf_pre(double y) const { return impl_->lr_cdf_pre(y); }
    double lr_cdf_post(double y) const { return impl_->lr_cdf_post(y); }
    double lr_cdf(Hypothesis h, double y) const {
        return h == Hypothesis::pre ? lr_cdf_pre(y) : lr_cdf_post(y);
    }
    double lr_support_max() const { return impl_->lr_support_max; }
    bool has_analytic_kernels() const {
        return impl_->lr_pdf_pre.has_value() && impl_->lr_pdf_post.has_value();
    }

    double sample(Hypothesis h, Rng& rng) const { return impl_->sampler(h, rng); }

    /// Transition density of R_n at x given R_{n-1} = r: d/dx F_h(x/(1+r)).
    double kernel(Hypothesis h, double x, double r) const;

private:
    std::shared_ptr<const Components> impl_;
};

/// E(1, theta): f_inf(x) = e^{-x}, f_0(x) = theta e^{-theta x} on x >= 0.
ChangeModel exponential_model(double theta);

/// Gaussian mean shift N(0,1) -> N(mu,1). Kernels are numeric only.
ChangeModel gaussian_model(double mu);

/// K_inf(x, r) = d/dx F_inf(x/(1+r)).
double kernel_pre(const ChangeModel& model, double x, double r);
/// K_0(x, r) = d/dx F_0(x/(1+r)).
double kernel_post(const ChangeModel& model, double x, double r);

double sample_observation(const ChangeModel& model, Hypothesis hypothesis, Rng& rng);

} // namespace srdetect
