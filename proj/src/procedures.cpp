#include "srdetect/procedures.hpp"

#include "srdetect/errors.hpp"

#include <cmath>
#include <limits>

namespace srdetect {

HeadStart HeadStart::deterministic(double r) {
    require(r >= 0.0 && std::isfinite(r), "deterministic head start must be finite and nonnegative");
    return HeadStart(Fixed{r});
}

HeadStart HeadStart::quasi_stationary(std::shared_ptr<const QuasiStationary> qsd) {
    require(qsd != nullptr, "quasi-stationary head start needs a QuasiStationary object");
    return HeadStart(Randomized{std::move(qsd)});
}

double HeadStart::value() const {
    if (const auto* fixed = std::get_if<Fixed>(&kind_)) {
        return fixed->r;
    }
    throw ValidationError("randomized head start has no fixed value");
}

const std::shared_ptr<const QuasiStationary>& HeadStart::qsd() const {
    if (const auto* randomized = std::get_if<Randomized>(&kind_)) {
        return randomized->qsd;
    }
    throw ValidationError("deterministic head start has no quasi-stationary law");
}

double HeadStart::draw(Rng& rng) const {
    if (const auto* fixed = std::get_if<Fixed>(&kind_)) {
        return fixed->r;
    }
    return std::get<Randomized>(kind_).qsd->sample(rng);
}

DetectorState init_detector(const HeadStart& head_start, double threshold, Rng& rng) {
    require(threshold > 0.0, "threshold must be positive");
    if (head_start.is_randomized()) {
        const double qsd_threshold = head_start.qsd()->threshold();
        require(std::abs(qsd_threshold - threshold) <= 1e-12 * threshold,
                "quasi-stationary law was computed for a different threshold");
    } else {
        require(head_start.value() < threshold, "head start must be below the threshold");
    }
    DetectorState state;
    state.statistic = head_start.draw(rng);
    state.threshold = threshold;
    return state;
}

DetectorState step_lr(const DetectorState& state, double lr) {
    if (state.stopped) {
        throw ValidationError("cannot step a stopped detector");
    }
    require(lr >= 0.0, "likelihood ratio must be nonnegative");
    DetectorState next = state;
    const double factor = 1.0 + state.statistic;
    constexpr double kMax = std::numeric_limits<double>::max();
    if (lr > 0.0 && factor > kMax / lr) {
        next.statistic = kMax;
    } else {
        next.statistic = factor * lr;
    }
    next.n = state.n + 1;
    next.stopped = next.statistic >= state.threshold;
    return next;
}

DetectorState step(const DetectorState& state, double observation, const ChangeModel& model) {
    return step_lr(state, model.lr(observation));
}

RunOutcome run_to_alarm(const ChangeModel& model, const HeadStart& head_start, double threshold,
                        Changepoint changepoint, Rng& rng, std::uint64_t cap, bool record_trajectory) {
    require(cap >= 1, "cap must be at least 1");
    DetectorState state = init_detector(head_start, threshold, rng);
    RunOutcome outcome;
    outcome.changepoint = changepoint;
    if (record_trajectory) {
        outcome.trajectory.push_back(state.statistic);
    }
    while (state.n < cap) {
        // X_n is pre-change for n <= nu.
        const bool pre = !changepoint || state.n + 1 <= *changepoint;
        const double x = model.sample(pre ? Hypothesis::pre : Hypothesis::post, rng);
        state = step(state, x, model);
        if (record_trajectory) {
            outcome.trajectory.push_back(state.statistic);
        }
        if (state.stopped) {
            outcome.stopping_time = state.n;
            break;
        }
    }
    return outcome;
}

} // namespace srdetect
