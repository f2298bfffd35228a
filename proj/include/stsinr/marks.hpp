#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stsinr/params.hpp"
#include "stsinr/point_pattern.hpp"
#include "stsinr/random.hpp"

namespace stsinr {

enum class MarkKind { mac, fading, noise };

// Deterministic, lazily evaluated space-time marks. Every value is a pure
// function of (seed, kind, ids, slot), so any slot can be revisited at any
// time from any thread with no coordination. Slots are signed; negative
// slots are valid.
class MarkStream {
  public:
    MarkStream(std::uint64_t seed, double aloha_p, double fading_mu, NoiseSpec noise)
        : aloha_p_(aloha_p), fading_mu_(fading_mu), noise_(noise) {
        std::uint64_t h = mix64(seed);
        mac_base_ = hash_combine(h, 0x6d6163ull);      // "mac"
        fading_base_ = hash_combine(h, 0x666164ull);   // "fad"
        noise_base_ = hash_combine(h, 0x6e6f69ull);    // "noi"
    }

    static MarkStream from_params(const ModelParams& p) {
        return MarkStream(p.seed, p.aloha_p, p.fading_mu, p.noise);
    }

    double aloha_p() const { return aloha_p_; }
    double fading_mu() const { return fading_mu_; }
    const NoiseSpec& noise_spec() const { return noise_; }

    // Medium access indicator e_i(n) in {0,1}, P{1} = p.
    bool transmits(int i, std::int64_t slot) const {
        return u01(hash_combine(slot_base(mac_base_, slot), key(i))) < aloha_p_;
    }

    // Channel fade F_{i,j}(n), exponential with mean 1/mu. The model never
    // uses F_{i,i}.
    double fading(int i, int j, std::int64_t slot) const {
        if (i == j) throw std::invalid_argument("MarkStream::fading: i and j must differ");
        return exponential_icdf(u01(hash_combine(fading_receiver_base(j, slot), key(i))),
                                fading_mu_);
    }

    // Thermal noise power W_j(n) under the configured law.
    double noise(int j, std::int64_t slot) const {
        switch (noise_.kind) {
            case NoiseKind::off: return 0.0;
            case NoiseKind::constant: return noise_.level;
            default:
                return exponential_icdf(u01(hash_combine(slot_base(noise_base_, slot), key(j))),
                                        1.0 / noise_.level);
        }
    }

    double mark(MarkKind kind, int i, int j, std::int64_t slot) const {
        switch (kind) {
            case MarkKind::mac: return transmits(i, slot) ? 1.0 : 0.0;
            case MarkKind::fading: return fading(i, j, slot);
            default: return noise(j, slot);
        }
    }

    // Per-slot partial keys for the hot loops: one mix per point afterwards.
    std::uint64_t mac_slot_base(std::int64_t slot) const { return slot_base(mac_base_, slot); }
    bool transmits_with_base(std::uint64_t base, int i) const {
        return u01(hash_combine(base, key(i))) < aloha_p_;
    }
    std::uint64_t fading_receiver_base(int j, std::int64_t slot) const {
        return hash_combine(slot_base(fading_base_, slot), key(j));
    }
    double fading_with_base(std::uint64_t receiver_base, int i) const {
        return exponential_icdf(u01(hash_combine(receiver_base, key(i))), fading_mu_);
    }

  private:
    static std::uint64_t key(int i) { return static_cast<std::uint64_t>(i); }
    static std::uint64_t slot_base(std::uint64_t base, std::int64_t slot) {
        return hash_combine(base, static_cast<std::uint64_t>(slot));
    }

    double aloha_p_;
    double fading_mu_;
    NoiseSpec noise_;
    std::uint64_t mac_base_;
    std::uint64_t fading_base_;
    std::uint64_t noise_base_;
};

// Ids transmitting in the given slot (the point process Phi^1(n)); the
// complement are the potential receivers Phi^0(n).
inline std::vector<int> transmitters(const PointPattern& pattern, const MarkStream& stream,
                                     std::int64_t slot) {
    std::vector<int> out;
    std::uint64_t base = stream.mac_slot_base(slot);
    for (const auto& p : pattern.points)
        if (stream.transmits_with_base(base, p.id)) out.push_back(p.id);
    return out;
}

}  // namespace stsinr
