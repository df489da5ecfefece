#pragma once

#include <cstdint>

#include "trimip/math.hpp"

namespace trimip {

// splitmix64, used to derive stateless per-(seed,step,item) streams so that
// training can resume mid-run without serializing generator state.
inline uint64_t hash_mix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) { return hash_mix(a ^ hash_mix(b)); }

// pcg32 (Melissa O'Neill). Fixed-width arithmetic keeps streams identical
// across platforms, unlike std:: distributions.
class Rng {
  public:
    explicit Rng(uint64_t seed = 0, uint64_t seq = 0) {
        state_ = 0;
        inc_ = (seq << 1u) | 1u;
        next_u32();
        state_ += hash_mix(seed);
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ull + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    uint64_t next_u64() { return (static_cast<uint64_t>(next_u32()) << 32) | next_u32(); }

    // Uniform in [0,1) with 53 random bits.
    real uniform() { return static_cast<real>(next_u64() >> 11) * 0x1.0p-53; }

    real uniform(real lo, real hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n).
    uint32_t below(uint32_t n) {
        uint32_t threshold = (-n) % n;
        for (;;) {
            uint32_t r = next_u32();
            if (r >= threshold) return r % n;
        }
    }

  private:
    uint64_t state_;
    uint64_t inc_;
};

}  // namespace trimip
