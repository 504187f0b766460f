#pragma once

#include "srdetect/model.hpp"
#include "srdetect/quasi_stationary.hpp"
#include "srdetect/rng.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace srdetect {

/// Initial value R_0 of the SR statistic: a fixed point r (SR for r = 0,
/// SR-r otherwise) or a draw from the quasi-stationary law (SRP).
class HeadStart {
public:
    static HeadStart deterministic(double r);
    static HeadStart quasi_stationary(std::shared_ptr<const QuasiStationary> qsd);

    bool is_randomized() const { return std::holds_alternative<Randomized>(kind_); }
    /// The fixed r; throws for a randomized head start.
    double value() const;
    const std::shared_ptr<const QuasiStationary>& qsd() const;

    double draw(Rng& rng) const;

private:
    struct Fixed {
        double r;
    };
    struct Randomized {
        std::shared_ptr<const QuasiStationary> qsd;
    };
    explicit HeadStart(std::variant<Fixed, Randomized> kind) : kind_(std::move(kind)) {}

    std::variant<Fixed, Randomized> kind_;
};

struct DetectorState {
    double statistic = 0.0;
    std::uint64_t n = 0;
    double threshold = 0.0;
    bool stopped = false;
};

/// Changepoint nu (last pre-change index); std::nullopt means no change.
using Changepoint = std::optional<std::uint64_t>;

struct RunOutcome {
    /// First n >= 1 with R_n >= threshold; empty when censored at the cap.
    std::optional<std::uint64_t> stopping_time;
    Changepoint changepoint;
    /// R_0, R_1, ... when requested.
    std::vector<double> trajectory;

    bool censored() const { return !stopping_time.has_value(); }
};

/// R_0 from the head start; rejects r >= threshold and a threshold that
/// does not match the quasi-stationary law it is paired with.
DetectorState init_detector(const HeadStart& head_start, double threshold, Rng& rng);

/// R_n = (1 + R_{n-1}) Lambda(observation). Saturates at DBL_MAX and
/// alarms instead of overflowing.
DetectorState step(const DetectorState& state, double observation, const ChangeModel& model);
/// Same update from a likelihood-ratio value directly.
DetectorState step_lr(const DetectorState& state, double lr);

RunOutcome run_to_alarm(const ChangeModel& model, const HeadStart& head_start, double threshold,
                        Changepoint changepoint, Rng& rng, std::uint64_t cap = 10'000'000,
                        bool record_trajectory = false);

} // namespace srdetect
