#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace evad {

// splitmix64 step; advances `state` and returns the next output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Independent seed streams so that tree building, run averaging and data
// synthesis never reuse each other's draws.
enum class SeedStream : std::uint64_t {
    tree = 1,
    run = 2,
    synth_plan = 3,
    synth_session = 4,
};

// Deterministic sub-seed from (master seed, stream, index). Two rounds of
// splitmix64 keep nearby indices uncorrelated.
inline std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t index) {
    std::uint64_t s = master + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(stream);
    std::uint64_t h = splitmix64(s);
    std::uint64_t s2 = h + 0x9E3779B97F4A7C15ull * (index + 1);
    return splitmix64(s2);
}

// xoshiro256++ (Blackman & Vigna, public domain). The integer stream is
// platform independent; derived doubles use IEEE-exact arithmetic except
// normal(), which goes through libm log/cos.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) word = splitmix64(s);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + u01() * (hi - lo); }

    // Uniform integer in [0, n), n >= 1. Multiply-shift; bias is < n / 2^64.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    // Standard normal via Box-Muller; consumes two draws per sample.
    double normal() {
        const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = u01();
        constexpr double two_pi = 6.283185307179586476925287;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_;
};

}  // namespace evad
