#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace fitolab {

/// Counter-based block generator (Philox 4x64, 10 rounds).
///
/// The generator contract for the whole library is pinned here and must not
/// change between versions without a version bump:
///   - stream key = (seed, stream index); scenario ensembles use the
///     scenario index as stream, so scenario-parallel runs are bitwise
///     reproducible for any worker count, and path p of an ensemble does not
///     depend on the total scenario count.
///   - block counter starts at 0 and increments by 1; each block yields four
///     64-bit words consumed in order.
///   - uniforms map a word w to ((w >> 11) + 1) * 2^-53, in (0, 1].
///   - Gaussians use the trigonometric Box-Muller transform on consecutive
///     uniform pairs (fixed two-draws-per-pair consumption; no rejection, so
///     the draw count never depends on the sampled values).
class Philox4x64 {
public:
    using Block = std::array<std::uint64_t, 4>;

    Philox4x64(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}

    /// Four independent 64-bit words for the given counter value.
    Block block(std::uint64_t counter) const;

private:
    std::array<std::uint64_t, 2> key_;
};

/// Sequential view of one Philox stream as standard normal draws.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t stream)
        : engine_(seed, stream) {}

    double next();
    void fill(std::span<double> out);

private:
    void refill();

    Philox4x64 engine_;
    std::uint64_t counter_ = 0;
    std::array<double, 4> buffer_{};
    std::size_t buffered_ = 0;  // draws remaining in buffer_
};

}  // namespace fitolab
