#include "srdetect/montecarlo.hpp"

#include "srdetect/errors.hpp"
#include "srdetect/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace srdetect {

namespace {

constexpr std::uint64_t kChunk = 4096;
constexpr std::uint64_t kSeedStride = 0x9E3779B97F4A7C15ull;

/// Runs body(begin, end, acc) over fixed chunks of [0, n) on a worker pool
/// and returns the per-chunk accumulators in chunk order. Chunk boundaries
/// do not depend on the thread count, so ordered reduction is reproducible.
template <typename Acc, typename Body>
std::vector<Acc> run_chunks(std::uint64_t n, unsigned threads, Body body) {
    const std::uint64_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<Acc> results(chunks);
    std::atomic<std::uint64_t> next{0};
    const auto worker = [&] {
        for (std::uint64_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
            body(c * kChunk, std::min(n, (c + 1) * kChunk), results[c]);
        }
    };
    unsigned count = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    count = static_cast<unsigned>(std::min<std::uint64_t>(count, std::max<std::uint64_t>(chunks, 1)));
    if (count <= 1) {
        worker();
        return results;
    }
    std::vector<std::jthread> pool;
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) {
        pool.emplace_back(worker);
    }
    pool.clear();
    return results;
}

struct ChunkMoments {
    RunningMoments moments;
    std::uint64_t censored = 0;
    std::uint64_t drawn = 0;
};

MCEstimate reduce(const std::vector<ChunkMoments>& chunks, std::uint64_t seed) {
    RunningMoments total;
    MCEstimate out;
    for (const auto& c : chunks) {
        total.merge(c.moments);
        out.n_censored += c.censored;
        out.n_drawn += c.drawn;
    }
    out.mean = total.mean();
    out.std_error = total.std_error();
    out.n_runs = total.count();
    out.seed = seed;
    return out;
}

void check_options(const MCOptions& options) {
    require(options.runs >= 1, "Monte Carlo needs at least one run");
    require(options.cap >= 1, "censoring cap must be at least 1");
}

} // namespace

double MCEstimate::censored_fraction() const {
    return n_drawn == 0 ? 0.0 : static_cast<double>(n_censored) / static_cast<double>(n_drawn);
}

double MCEstimate::acceptance_rate() const {
    return n_drawn == 0 ? 0.0 : static_cast<double>(n_runs) / static_cast<double>(n_drawn);
}

MCEstimate estimate_arl(const ChangeModel& model, const HeadStart& head_start, double threshold,
                        const MCOptions& options) {
    check_options(options);
    const auto chunks = run_chunks<ChunkMoments>(options.runs, options.threads,
                                                 [&](std::uint64_t begin, std::uint64_t end, ChunkMoments& acc) {
        for (std::uint64_t i = begin; i < end; ++i) {
            Rng rng(options.seed, i);
            const RunOutcome run = run_to_alarm(model, head_start, threshold, std::nullopt, rng, options.cap);
            ++acc.drawn;
            if (run.censored()) {
                ++acc.censored;
                acc.moments.add(static_cast<double>(options.cap));
            } else {
                acc.moments.add(static_cast<double>(*run.stopping_time));
            }
        }
    });
    return reduce(chunks, options.seed);
}

MCEstimate estimate_cadd(const ChangeModel& model, const HeadStart& head_start, double threshold, std::uint64_t nu,
                         const MCOptions& options) {
    check_options(options);
    require(options.cap > nu, "censoring cap must exceed the changepoint");
    const auto chunks = run_chunks<ChunkMoments>(options.runs, options.threads,
                                                 [&](std::uint64_t begin, std::uint64_t end, ChunkMoments& acc) {
        for (std::uint64_t i = begin; i < end; ++i) {
            Rng rng(options.seed, i);
            const RunOutcome run = run_to_alarm(model, head_start, threshold, nu, rng, options.cap);
            ++acc.drawn;
            if (run.censored()) {
                ++acc.censored;
                acc.moments.add(static_cast<double>(options.cap - nu));
            } else if (*run.stopping_time > nu) {
                acc.moments.add(static_cast<double>(*run.stopping_time - nu));
            }
        }
    });
    return reduce(chunks, options.seed);
}

JpEstimate estimate_jp(const ChangeModel& model, const HeadStart& head_start, double threshold,
                       std::span<const std::uint64_t> nus, const MCOptions& options) {
    require(!nus.empty(), "estimate_jp needs at least one changepoint");
    JpEstimate out;
    for (const std::uint64_t nu : nus) {
        MCOptions per_nu = options;
        per_nu.seed = options.seed + kSeedStride * (nu + 1);
        out.by_nu.push_back(estimate_cadd(model, head_start, threshold, nu, per_nu));
        if (out.by_nu.size() == 1 || out.by_nu.back().mean > out.sup.mean) {
            out.sup = out.by_nu.back();
            out.nu_at_sup = nu;
        }
    }
    return out;
}

IntegralAddEstimate estimate_integral_add(const ChangeModel& model, const HeadStart& head_start, double threshold,
                                          double r_weight, std::optional<std::uint64_t> nu_max,
                                          const MCOptions& options) {
    check_options(options);
    require(r_weight >= 0.0, "head-start weight r must be nonnegative");
    IntegralAddEstimate out;
    if (nu_max) {
        out.nu_max = *nu_max;
    } else {
        MCOptions pilot = options;
        pilot.runs = 100000;
        pilot.seed = options.seed ^ kSeedStride;
        auto times = simulate_runs(model, head_start, threshold, std::nullopt, pilot);
        std::vector<std::uint64_t> t(times.size());
        std::transform(times.begin(), times.end(), t.begin(), [](const RunRecord& r) { return r.stopping_time; });
        std::sort(t.begin(), t.end());
        // Smallest n with #{T > n} < 1e-4 * runs.
        const auto allowed = static_cast<std::size_t>(std::ceil(1e-4 * static_cast<double>(t.size()))) - 1;
        out.nu_max = t[t.size() - 1 - std::min(allowed, t.size() - 1)];
    }
    const std::uint64_t slots = out.nu_max + 2;

    struct Acc {
        std::uint64_t n = 0;
        double mean_y = 0.0, mean_z = 0.0, m_yy = 0.0, m_zz = 0.0, m_yz = 0.0;
        std::uint64_t censored = 0;
        std::uint64_t tail_exceed = 0;
        double tail_excess = 0.0;
        std::vector<double> delay;
        std::vector<std::uint64_t> alive;

        void add(double y, double z) {
            ++n;
            const double dy = y - mean_y;
            const double dz = z - mean_z;
            mean_y += dy / static_cast<double>(n);
            mean_z += dz / static_cast<double>(n);
            m_yy += dy * (y - mean_y);
            m_zz += dz * (z - mean_z);
            m_yz += dy * (z - mean_z);
        }
        void merge(const Acc& o) {
            if (o.n == 0) return;
            if (n == 0) {
                *this = o;
                return;
            }
            const double na = static_cast<double>(n), nb = static_cast<double>(o.n), nt = na + nb;
            const double dy = o.mean_y - mean_y, dz = o.mean_z - mean_z;
            mean_y += dy * nb / nt;
            mean_z += dz * nb / nt;
            m_yy += o.m_yy + dy * dy * na * nb / nt;
            m_zz += o.m_zz + dz * dz * na * nb / nt;
            m_yz += o.m_yz + dy * dz * na * nb / nt;
            n += o.n;
            censored += o.censored;
            tail_exceed += o.tail_exceed;
            tail_excess += o.tail_excess;
            for (std::size_t k = 0; k < delay.size(); ++k) {
                delay[k] += o.delay[k];
                alive[k] += o.alive[k];
            }
        }
    };

    const auto chunks = run_chunks<Acc>(options.runs, options.threads,
                                        [&](std::uint64_t begin, std::uint64_t end, Acc& acc) {
        acc.delay.assign(out.nu_max + 1, 0.0);
        acc.alive.assign(out.nu_max + 1, 0);
        for (std::uint64_t i = begin; i < end; ++i) {
            double y = 0.0;
            for (std::uint64_t nu = 0; nu <= out.nu_max; ++nu) {
                Rng rng(options.seed, i * slots + nu);
                const RunOutcome run = run_to_alarm(model, head_start, threshold, nu, rng, options.cap);
                const std::uint64_t t = run.censored() ? options.cap : *run.stopping_time;
                acc.censored += run.censored() ? 1 : 0;
                if (t > nu) {
                    const double excess = static_cast<double>(t - nu);
                    y += excess;
                    acc.delay[nu] += excess;
                    ++acc.alive[nu];
                    if (nu == 0) {
                        y += r_weight * excess;
                    }
                }
            }
            Rng rng(options.seed, i * slots + out.nu_max + 1);
            const RunOutcome run = run_to_alarm(model, head_start, threshold, std::nullopt, rng, options.cap);
            const std::uint64_t t = run.censored() ? options.cap : *run.stopping_time;
            acc.censored += run.censored() ? 1 : 0;
            if (t > out.nu_max) {
                ++acc.tail_exceed;
                acc.tail_excess += static_cast<double>(t - out.nu_max - 1);
            }
            acc.add(y, static_cast<double>(t));
        }
    });

    Acc total;
    for (const auto& c : chunks) {
        total.merge(c);
    }
    const double n = static_cast<double>(total.n);
    const double denom = r_weight + total.mean_z;
    const double ratio = total.mean_y / denom;
    const double var_y = total.n > 1 ? total.m_yy / (n - 1.0) : 0.0;
    const double var_z = total.n > 1 ? total.m_zz / (n - 1.0) : 0.0;
    const double cov = total.n > 1 ? total.m_yz / (n - 1.0) : 0.0;
    const double var_ratio = std::max(0.0, var_y - 2.0 * ratio * cov + ratio * ratio * var_z) / (n * denom * denom);

    out.estimate.mean = ratio;
    out.estimate.std_error = std::sqrt(var_ratio);
    out.estimate.n_runs = total.n;
    out.estimate.n_drawn = total.n * slots;
    out.estimate.n_censored = total.censored;
    out.estimate.seed = options.seed;
    out.tail_probability = static_cast<double>(total.tail_exceed) / n;
    double worst_cadd = 0.0;
    for (std::size_t k = 0; k < total.delay.size(); ++k) {
        if (total.alive[k] > 0) {
            worst_cadd = std::max(worst_cadd, total.delay[k] / static_cast<double>(total.alive[k]));
        }
    }
    // Omitted sum_{nu > nu_max} rho_nu CADD_nu, with rho summed exactly as
    // E_inf (T - nu_max - 1)^+ and CADD bounded by the largest estimate.
    out.truncation_bound = worst_cadd * (total.tail_excess / n) / denom;
    return out;
}

std::vector<RunRecord> simulate_runs(const ChangeModel& model, const HeadStart& head_start, double threshold,
                                     Changepoint changepoint, const MCOptions& options) {
    check_options(options);
    std::vector<RunRecord> records(options.runs);
    run_chunks<char>(options.runs, options.threads, [&](std::uint64_t begin, std::uint64_t end, char&) {
        for (std::uint64_t i = begin; i < end; ++i) {
            Rng rng(options.seed, i);
            const RunOutcome run = run_to_alarm(model, head_start, threshold, changepoint, rng, options.cap);
            records[i] = run.censored() ? RunRecord{options.cap, true} : RunRecord{*run.stopping_time, false};
        }
    });
    return records;
}

} // namespace srdetect
