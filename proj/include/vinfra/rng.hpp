#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace vinfra {

// splitmix64; used to derive independent substream seeds from a master seed.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_name(std::string_view name) {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Deterministic RNG wrapper. std::mt19937_64 output is fully specified by the
// standard; the distribution mappings below are our own, so identical seeds
// give identical streams on every platform (std::uniform_*_distribution does
// not guarantee that).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Substream for a named component, optionally indexed (slot, trial, ...).
    static Rng substream(std::uint64_t master, std::string_view name, std::uint64_t index = 0) {
        return Rng(mix64(master ^ mix64(hash_name(name) + 0x9e3779b97f4a7c15ULL * index)));
    }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        // multiply-shift bounded mapping (Lemire), no rejection: bias < 2^-64 * span
        const unsigned __int128 m = static_cast<unsigned __int128>(eng_()) * span;
        return lo + static_cast<std::int64_t>(m >> 64);
    }

    bool next_bool(double p) { return next_double() < p; }

    // Geometric on {1, 2, ...} with success probability p: number of the first
    // successful Bernoulli(p) trial.
    std::int64_t next_geometric(double p) {
        const double u = 1.0 - next_double(); // in (0, 1]
        if (p >= 1.0) return 1;
        const double g = std::log(u) / std::log1p(-p);
        return 1 + static_cast<std::int64_t>(g);
    }

    // Exponential with rate lambda.
    double next_exponential(double lambda) {
        double u;
        do { u = next_double(); } while (u <= 0.0);
        return -std::log(u) / lambda;
    }

  private:
    std::mt19937_64 eng_;
};

} // namespace vinfra
