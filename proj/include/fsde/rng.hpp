#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace fsde {

/// Philox4x32-10 counter-based generator. A draw is a pure function of
/// (key, counter), so ensembles can be partitioned across any number of
/// workers without changing the stream.
struct Philox4x32 {
    static constexpr uint32_t kMul0 = 0xD2511F53u;
    static constexpr uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

    static std::array<uint32_t, 4> block(uint64_t key, std::array<uint32_t, 4> ctr) {
        uint32_t k0 = static_cast<uint32_t>(key);
        uint32_t k1 = static_cast<uint32_t>(key >> 32);
        for (int round = 0; round < 10; ++round) {
            const uint64_t p0 = static_cast<uint64_t>(kMul0) * ctr[0];
            const uint64_t p1 = static_cast<uint64_t>(kMul1) * ctr[2];
            const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
            const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        return ctr;
    }
};

/// Maps two 32-bit words to a 53-bit uniform in (0,1).
inline double u64_to_unit(uint32_t a, uint32_t b) {
    const double x = (a >> 5) * 67108864.0 + (b >> 6) + 0.5; // 27+26 bits
    return x * (1.0 / 9007199254740992.0);                   // / 2^53
}

/// Seeded stream of uniforms/normals addressed by (path, step, lane).
/// One Philox block per (path, step, lane-pair) yields two normals via
/// Box-Muller; lane selects within the pair.
class CounterRng {
  public:
    explicit CounterRng(uint64_t seed) : seed_(seed) {}

    uint64_t seed() const { return seed_; }

    /// Derive an independent stream for a named stage.
    CounterRng fork(uint64_t tag) const { return CounterRng(splitmix(seed_ ^ tag)); }

    double uniform(uint64_t path, uint64_t idx) const {
        const auto w = Philox4x32::block(seed_, counter(path, idx / 2, 0));
        return (idx % 2 == 0) ? u64_to_unit(w[0], w[1]) : u64_to_unit(w[2], w[3]);
    }

    double normal(uint64_t path, uint64_t step, uint32_t lane) const {
        const auto w = Philox4x32::block(seed_, counter(path, step, lane / 2));
        const double u1 = u64_to_unit(w[0], w[1]);
        const double u2 = u64_to_unit(w[2], w[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * M_PI * u2;
        return (lane % 2 == 0) ? r * std::cos(th) : r * std::sin(th);
    }

    /// Both normals of one block, for consumers that use pairs.
    std::array<double, 2> normal_pair(uint64_t path, uint64_t step, uint32_t pair) const {
        const auto w = Philox4x32::block(seed_, counter(path, step, pair));
        const double u1 = u64_to_unit(w[0], w[1]);
        const double u2 = u64_to_unit(w[2], w[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * M_PI * u2;
        return {r * std::cos(th), r * std::sin(th)};
    }

    static uint64_t splitmix(uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

  private:
    static std::array<uint32_t, 4> counter(uint64_t path, uint64_t step, uint32_t block) {
        return {static_cast<uint32_t>(step), static_cast<uint32_t>(step >> 32),
                static_cast<uint32_t>(path), static_cast<uint32_t>(path >> 32) ^ block};
    }

    uint64_t seed_;
};

namespace rng_tag {
inline constexpr uint64_t couple = 0x636f75706cull;     // "coupl"
inline constexpr uint64_t ensemble = 0x656e73656dull;   // "ensem"
inline constexpr uint64_t stationary = 0x7374617469ull; // "stati"
inline constexpr uint64_t bismut = 0x6269736d75ull;     // "bismu"
} // namespace rng_tag

} // namespace fsde
