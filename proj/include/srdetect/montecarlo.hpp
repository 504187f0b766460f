#pragma once

#include "srdetect/model.hpp"
#include "srdetect/procedures.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace srdetect {

struct MCOptions {
    std::uint64_t runs = 1'000'000;
    std::uint64_t seed = 1;
    std::uint64_t cap = 10'000'000;
    /// 0 = std::thread::hardware_concurrency(). Results do not depend on it.
    unsigned threads = 0;
};

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    /// Replications entering the mean (accepted ones for conditional estimates).
    std::uint64_t n_runs = 0;
    std::uint64_t n_censored = 0;
    std::uint64_t seed = 0;
    /// Replications simulated, including those rejected by conditioning.
    std::uint64_t n_drawn = 0;

    double censored_fraction() const;
    double acceptance_rate() const;
    /// More than 0.1% of the runs hit the censoring cap.
    bool unreliable() const { return censored_fraction() > 1e-3; }
};

/// E_inf T. Censored runs enter at the cap value and are counted.
MCEstimate estimate_arl(const ChangeModel& model, const HeadStart& head_start, double threshold,
                        const MCOptions& options);

/// E_nu(T - nu | T > nu) by rejection: runs with T <= nu are discarded.
MCEstimate estimate_cadd(const ChangeModel& model, const HeadStart& head_start, double threshold,
                         std::uint64_t nu, const MCOptions& options);

struct JpEstimate {
    /// Estimate at the nu with the largest estimated CADD.
    MCEstimate sup;
    std::uint64_t nu_at_sup = 0;
    std::vector<MCEstimate> by_nu;
};

/// max over the given changepoints of estimate_cadd; each nu uses its own seed
/// derived from options.seed.
JpEstimate estimate_jp(const ChangeModel& model, const HeadStart& head_start, double threshold,
                       std::span<const std::uint64_t> nus, const MCOptions& options);

struct IntegralAddEstimate {
    MCEstimate estimate;
    std::uint64_t nu_max = 0;
    /// Estimated P_inf(T > nu_max).
    double tail_probability = 0.0;
    /// Estimated size of the omitted terms nu > nu_max relative to I_r.
    double truncation_bound = 0.0;
};

/// I_r(T) = (r E_0 T + sum_{nu <= nu_max} E_nu (T - nu)^+) / (r + E_inf T).
/// Each replication simulates all nu_max + 2 scenarios on disjoint streams.
/// Without nu_max, a 10^5-run pilot picks the smallest n with
/// P_inf(T > n) < 1e-4.
IntegralAddEstimate estimate_integral_add(const ChangeModel& model, const HeadStart& head_start, double threshold,
                                          double r_weight, std::optional<std::uint64_t> nu_max,
                                          const MCOptions& options);

struct RunRecord {
    std::uint64_t stopping_time = 0;
    bool censored = false;
};

/// One record per replication; replication i uses stream i.
std::vector<RunRecord> simulate_runs(const ChangeModel& model, const HeadStart& head_start, double threshold,
                                     Changepoint changepoint, const MCOptions& options);

} // namespace srdetect
