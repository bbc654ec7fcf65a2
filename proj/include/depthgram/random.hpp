#pragma once

#include <array>
#include <cstdint>

// Counter-based random numbers. Every stream is addressed by (seed, tag, a, b),
// so a value depends only on its coordinates and never on the order in which
// streams are consumed.

namespace depthgram {

/**
 * @brief Philox4x32-10 block function (Salmon, Moraes, Dror, Shaw; SC'11).
 *
 * Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits.
 */
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter counter, Key key);
};

/// Stream purposes, part of the Philox counter so that streams never overlap.
enum class StreamTag : std::uint32_t {
    noise = 1,
    alpha = 2,
    contamination = 3,
    joint_reference = 4,
    replicate_seed = 5,
    oracle = 6,
};

/**
 * @brief Sequential reader over one Philox stream.
 *
 * Counter words: (block, a, b, tag); key: the 64-bit seed. Each block yields
 * two 64-bit outputs.
 */
class CounterStream {
public:
    CounterStream(std::uint64_t seed, StreamTag tag, std::uint32_t a, std::uint32_t b);

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 random bits.
    double next_uniform();

    /// Standard normal via the Box-Muller transform; draws are produced in pairs.
    double next_normal();

    /// Unbiased integer in [0, bound) (Lemire's multiply-and-reject); bound > 0.
    std::uint64_t next_below(std::uint64_t bound);

private:
    void refill();

    Philox4x32::Key key_;
    std::uint32_t a_;
    std::uint32_t b_;
    std::uint32_t tag_;
    std::uint32_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// Seed for an independent sub-experiment (e.g. a replicate) derived from a parent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace depthgram
