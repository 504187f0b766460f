#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace srdetect {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 128-bit counter is split into a 64-bit block index and a 64-bit
/// stream index, and the 64-bit seed is the key. Two generators with the
/// same seed and different stream indices therefore never share a block,
/// which gives every Monte Carlo replication its own disjoint substream
/// regardless of how replications are scheduled across threads.
class Philox4x32 {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform double on (0, 1]; never returns 0 so that -log(u) is finite.
    double uniform_pos() noexcept;
    /// Uniform double on [0, 1).
    double uniform() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    /// The raw bijection, exposed for known-answer tests.
    static Block encrypt(Block counter, Key key) noexcept;

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_index_ = 0;
    Block buffer_{};
    int position_ = 4;
};

using Rng = Philox4x32;

} // namespace srdetect
