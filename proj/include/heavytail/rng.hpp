#ifndef HEAVYTAIL_RNG_HPP
#define HEAVYTAIL_RNG_HPP

#include <cstdint>
#include <string_view>

namespace heavytail {

// Version tag recorded in run summaries and the moment cache.  Bump if the
// generator or any sampler transform changes, so stale cache entries and
// frozen regression outputs are invalidated together.
inline constexpr std::string_view kGeneratorVersion = "xoshiro256++/splitmix64 v1";

// SplitMix64 (Steele, Lea, Flood).  Used only to expand a (seed, stream)
// pair into xoshiro state; never used for simulation draws directly.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // One avalanche round; also used to hash stream indices.
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// xoshiro256++ (Blackman & Vigna).  All simulation randomness in this
// project flows through this generator.  Streams are derived as
//
//   sm_state = seed XOR SplitMix64::mix(stream + 0x9E3779B97F4A7C15)
//   s[0..3]  = four successive SplitMix64 outputs from sm_state
//
// which gives O(1) random access to per-trial substreams: trial t of a run
// seeded with `seed` always reads stream (seed, t), no matter how trials
// are scheduled across threads.
class Xoshiro256pp {
public:
    Xoshiro256pp(std::uint64_t seed, std::uint64_t stream) {
        SplitMix64 sm(seed ^ SplitMix64::mix(stream + 0x9E3779B97F4A7C15ull));
        for (auto& w : s_) w = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t out = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return out;
    }

    // Uniform on [0, 1), 53 significant bits; exact in IEEE double.
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

} // namespace heavytail

#endif
