#include "fitolab/rng.hpp"

#include <cmath>

namespace fitolab {

namespace {

// Philox 4x64 round constants (multipliers and Weyl key schedule).
constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(prod >> 64);
    lo = static_cast<std::uint64_t>(prod);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

// (0, 1] so log() below never sees zero.
inline double to_unit(std::uint64_t w) {
    return (static_cast<double>(w >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

Philox4x64::Block Philox4x64::block(std::uint64_t counter) const {
    std::array<std::uint64_t, 4> x{counter, 0, 0, 0};
    std::uint64_t k0 = key_[0];
    std::uint64_t k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMult0, x[0], hi0, lo0);
        mulhilo(kMult1, x[2], hi1, lo1);
        x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return x;
}

void GaussianStream::refill() {
    const Philox4x64::Block words = engine_.block(counter_++);
    for (std::size_t pair = 0; pair < 2; ++pair) {
        const double u1 = to_unit(words[2 * pair]);
        const double u2 = to_unit(words[2 * pair + 1]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = kTwoPi * u2;
        buffer_[2 * pair] = radius * std::cos(angle);
        buffer_[2 * pair + 1] = radius * std::sin(angle);
    }
    buffered_ = 4;
}

double GaussianStream::next() {
    if (buffered_ == 0) refill();
    return buffer_[4 - buffered_--];
}

void GaussianStream::fill(std::span<double> out) {
    for (double& x : out) x = next();
}

}  // namespace fitolab
