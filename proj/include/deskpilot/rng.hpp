#pragma once

#include <cstdint>
#include <stdexcept>

namespace deskpilot {

// splitmix64 (Steele, Lea, Flood 2014). Used to expand a 64-bit seed into
// generator state and to derive child seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic random source for every stochastic operation in the
// pipeline. xoshiro256** (Blackman, Vigna 2018) seeded via splitmix64,
// with hand-rolled uniform mappings so identical seeds produce identical
// draw sequences on every platform and compiler. std::mt19937 would be
// portable but the standard distributions are not.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& s : state_) s = splitmix64(sm);
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in [a, b).
    double uniform(double a, double b) {
        if (!(a <= b)) throw std::invalid_argument("Rng::uniform: a > b");
        return a + (b - a) * uniform();
    }

    // Uniform integer in [lo, hi], both ends inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) throw std::invalid_argument("Rng::uniform_int: lo > hi");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Child generator that is a pure function of (current stream, salt).
    // Lets batch workers own independent generators while the emitted
    // sequence stays equal to the single-worker order.
    Rng fork(std::uint64_t salt) {
        std::uint64_t mix = next_u64();
        std::uint64_t s = mix ^ (salt * 0x9e3779b97f4a7c15ULL);
        return Rng(splitmix64(s));
    }

    // Stateless derivation: child seed from (base seed, salt) without
    // consuming draws from any stream.
    static Rng derive(std::uint64_t base, std::uint64_t salt) {
        std::uint64_t s = base ^ (salt + 0x9e3779b97f4a7c15ULL) * 0xbf58476d1ce4e5b9ULL;
        return Rng(splitmix64(s));
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t seed_;
    std::uint64_t state_[4];
};

}  // namespace deskpilot
