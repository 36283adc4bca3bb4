#pragma once

// Bit-exact random streams shared by the generator and the episode sampler.
//
// SplitMix64 (Steele, Lea, Flood 2014):
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// derive_seed(master, i) is the (i+1)-th output of a SplitMix64 stream
// seeded with `master`, computed directly from the counter.
//
// uniform_below(n) rejects raw outputs below (2^64 - n) mod n, then
// returns r mod n. unit() is (r >> 11) * 2^-53, in [0, 1).
// gaussian() is Box-Muller: u1 = 1 - unit(), u2 = unit(),
// z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sqrt(-2 ln u1) sin(2 pi u2);
// z0 is returned first and z1 on the next call.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace ncd {

inline constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64_mix(master + (index + 1) * kSplitMixGamma);
}

class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        state_ += kSplitMixGamma;
        return splitmix64_mix(state_);
    }

    std::uint64_t uniform_below(std::uint64_t n) noexcept {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    double unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double gaussian() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - unit();
        const double u2 = unit();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Draws `k` distinct items from `items` by partial Fisher-Yates; the
/// chosen items end up in items[0..k) in draw order.
template <typename T>
void partial_shuffle(std::vector<T>& items, std::size_t k, SplitMix64& rng) {
    for (std::size_t i = 0; i < k && i < items.size(); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(items.size() - i));
        std::swap(items[i], items[j]);
    }
}

}  // namespace ncd
