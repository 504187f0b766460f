#include "srdetect/model.hpp"

#include "srdetect/errors.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <utility>

namespace srdetect {

namespace {

constexpr double kRelativeStep = 1e-6;

double cdf_derivative(const ChangeModel& model, Hypothesis h, double x, double r) {
    const double scale = 1.0 + r;
    const double edge = model.lr_support_max() * scale;
    if (x >= edge) {
        return 0.0;
    }
    const auto f = [&](double u) { return model.lr_cdf(h, u / scale); };
    double step = kRelativeStep * (1.0 + std::abs(x));
    const bool right = x + step < edge;
    const bool left = x - step >= 0.0;
    if (right && left) {
        return (f(x + step) - f(x - step)) / (2.0 * step);
    }
    // One-sided at the ends of [0, (1+r) * lr_support_max); the CDF has a kink
    // at the support edge.
    if (right) {
        return (f(x + step) - f(x)) / step;
    }
    if (left) {
        return (f(x) - f(x - step)) / step;
    }
    step = 0.5 * (edge - x);
    return (f(x + step) - f(x)) / step;
}

void check_no_atoms(const ChangeModel::RealFn& cdf, double support_max, const std::string& which) {
    require(std::abs(cdf(0.0)) <= 1e-12, which + " must vanish at 0 (Lambda > 0 a.s.)");
    if (std::isfinite(support_max)) {
        require(std::abs(cdf(support_max) - 1.0) <= 1e-12,
                which + " must equal 1 at the support maximum");
    }
    const double hi = std::isfinite(support_max) ? support_max : 1e3;
    double previous = 0.0;
    constexpr int kProbes = 400;
    for (int i = 0; i <= kProbes; ++i) {
        // Log-spaced probes from 1e-6 * hi to hi, plus Lambda = 1, the atom
        // produced by densities coinciding on a set of positive measure.
        const double y = i == kProbes ? 1.0 : hi * std::pow(1e-6, 1.0 - static_cast<double>(i) / (kProbes - 1));
        if (y >= support_max) {
            continue;
        }
        const double jump = cdf(y * (1.0 + 1e-10)) - cdf(y * (1.0 - 1e-10));
        require(jump < 1e-6, which + " has an atom near " + std::to_string(y) +
                                 "; models with atoms in Lambda are not supported");
        const double value = cdf(y);
        require(value >= 0.0 && value <= 1.0, which + " leaves [0,1]");
        if (i < kProbes) {
            require(value + 1e-14 >= previous, which + " is not nondecreasing");
            previous = value;
        }
    }
}

} // namespace

ChangeModel::ChangeModel(Components components) {
    require(components.pre_density && components.post_density && components.lr &&
                components.lr_cdf_pre && components.lr_cdf_post && components.sampler,
            "change model '" + components.name + "' is missing a component");
    require(components.lr_support_max > 0.0, "lr_support_max must be positive");
    check_no_atoms(components.lr_cdf_pre, components.lr_support_max, "lr_cdf_pre");
    check_no_atoms(components.lr_cdf_post, components.lr_support_max, "lr_cdf_post");
    impl_ = std::make_shared<const Components>(std::move(components));
}

std::optional<double> ChangeModel::parameter(const std::string& key) const {
    const auto it = impl_->parameters.find(key);
    if (it == impl_->parameters.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string ChangeModel::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << impl_->name << '(';
    bool first = true;
    for (const auto& [key, value] : impl_->parameters) {
        os << (first ? "" : ",") << key << '=' << value;
        first = false;
    }
    os << ')';
    return os.str();
}

double ChangeModel::kernel(Hypothesis h, double x, double r) const {
    if (!(x >= 0.0) || !(r >= 0.0)) {
        throw ValidationError("kernel arguments must satisfy x >= 0 and r >= 0");
    }
    const auto& pdf = h == Hypothesis::pre ? impl_->lr_pdf_pre : impl_->lr_pdf_post;
    if (pdf) {
        const double scale = 1.0 + r;
        const double y = x / scale;
        if (y >= impl_->lr_support_max) {
            return 0.0;
        }
        return (*pdf)(y) / scale;
    }
    return std::max(0.0, cdf_derivative(*this, h, x, r));
}

ChangeModel exponential_model(double theta) {
    require(theta > 1.0 && std::isfinite(theta), "exponential model requires theta > 1");
    const double a = 1.0 / (theta - 1.0);
    ChangeModel::Components c;
    c.name = "exponential";
    c.parameters = {{"theta", theta}};
    c.pre_density = [](double x) { return x >= 0.0 ? std::exp(-x) : 0.0; };
    c.post_density = [theta](double x) { return x >= 0.0 ? theta * std::exp(-theta * x) : 0.0; };
    c.lr = [theta](double x) { return theta * std::exp(-(theta - 1.0) * x); };
    // Lambda <= y  <=>  X >= log(theta/y)/(theta-1).
    c.lr_cdf_pre = [theta, a](double y) {
        if (y <= 0.0) return 0.0;
        if (y >= theta) return 1.0;
        return std::pow(y / theta, a);
    };
    c.lr_cdf_post = [theta, a](double y) {
        if (y <= 0.0) return 0.0;
        if (y >= theta) return 1.0;
        return std::pow(y / theta, theta * a);
    };
    c.lr_pdf_pre = [theta, a](double y) {
        if (y < 0.0 || y >= theta) return 0.0;
        return a / theta * std::pow(y / theta, a - 1.0);
    };
    c.lr_pdf_post = [theta, a](double y) {
        if (y < 0.0 || y >= theta) return 0.0;
        return a * std::pow(y / theta, a);
    };
    c.lr_support_max = theta;
    c.sampler = [theta](Hypothesis h, Rng& rng) {
        const double e = -std::log(rng.uniform_pos());
        return h == Hypothesis::pre ? e : e / theta;
    };
    return ChangeModel(std::move(c));
}

ChangeModel gaussian_model(double mu) {
    require(mu != 0.0 && std::isfinite(mu), "gaussian model requires a nonzero finite mu");
    const double sigma = std::abs(mu);
    const double half = 0.5 * mu * mu;
    const auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
    ChangeModel::Components c;
    c.name = "gaussian";
    c.parameters = {{"mu", mu}};
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    c.pre_density = [=](double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); };
    c.post_density = [=](double x) { return kInvSqrt2Pi * std::exp(-0.5 * (x - mu) * (x - mu)); };
    c.lr = [=](double x) { return std::exp(mu * x - half); };
    // log Lambda ~ N(-mu^2/2, mu^2) under P_inf and N(mu^2/2, mu^2) under P_0.
    c.lr_cdf_pre = [=](double y) { return y <= 0.0 ? 0.0 : phi((std::log(y) + half) / sigma); };
    c.lr_cdf_post = [=](double y) { return y <= 0.0 ? 0.0 : phi((std::log(y) - half) / sigma); };
    c.sampler = [mu](Hypothesis h, Rng& rng) {
        std::normal_distribution<double> normal(h == Hypothesis::pre ? 0.0 : mu, 1.0);
        return normal(rng);
    };
    return ChangeModel(std::move(c));
}

double kernel_pre(const ChangeModel& model, double x, double r) {
    return model.kernel(Hypothesis::pre, x, r);
}

double kernel_post(const ChangeModel& model, double x, double r) {
    return model.kernel(Hypothesis::post, x, r);
}

double sample_observation(const ChangeModel& model, Hypothesis hypothesis, Rng& rng) {
    return model.sample(hypothesis, rng);
}

} // namespace srdetect
