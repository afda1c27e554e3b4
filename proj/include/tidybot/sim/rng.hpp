#pragma once

#include <array>
#include <cstdint>

namespace tidybot::sim {

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key) noexcept;

enum class Stream : std::uint32_t { Localize = 1, Classify = 2, Execute = 3 };

/// Counter-based generator: the key is the seed and each stream owns its
/// own counter space, so draws on one stream never shift another.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, Stream stream) noexcept;
    CounterRng(std::uint64_t seed, std::uint32_t stream) noexcept;

    std::uint32_t next_u32() noexcept;
    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() noexcept;
    /// Uniform on {0, ..., n-1}; n must be positive.
    std::uint32_t uniform_index(std::uint32_t n) noexcept;
    /// True with probability p.
    bool bernoulli(double p) noexcept { return uniform01() < p; }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
};

} // namespace tidybot::sim
