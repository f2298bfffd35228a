#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace stsinr {

// Counter-based keyed hashing: every random quantity in the simulator is a
// pure function of (seed, tag, identities, counter). No generator state is
// ever advanced, so any mark or sample can be re-evaluated at any time.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdull;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ull;
    z ^= z >> 33;
    return z;
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t w) {
    return mix64(h ^ (w + kGolden));
}

// Uniform in [0,1): 53 mantissa bits of the hash.
inline double u01(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Uniform in (0,1): safe as input to -log(u).
inline double u01_open(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

inline double exponential_icdf(double u, double rate) {
    // Inverse CDF of Exp(rate) at u in [0,1).
    return -std::log1p(-u) / rate;
}

// A keyed sequential stream: draw(k) is the k-th uniform of the stream.
// Used by the pattern samplers, where a variable number of draws is needed.
class UniformStream {
  public:
    UniformStream(std::uint64_t seed, std::uint64_t tag)
        : base_(hash_combine(mix64(seed), tag)) {}

    double at(std::uint64_t index) const { return u01(hash_combine(base_, index)); }
    double at_open(std::uint64_t index) const { return u01_open(hash_combine(base_, index)); }

    double next() { return at(counter_++); }
    double next_open() { return at_open(counter_++); }

  private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

// Poisson count via exponential interarrivals: N = max{n : sum of n
// Exp(1) variables <= mean}. O(mean) draws but exact, which the count-law
// tests rely on.
inline std::uint64_t poisson_count(UniformStream& stream, double mean) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson_count: mean must be >= 0");
    std::uint64_t n = 0;
    double acc = 0.0;
    for (;;) {
        acc += -std::log(stream.next_open());
        if (acc > mean) break;
        ++n;
    }
    return n;
}

}  // namespace stsinr
