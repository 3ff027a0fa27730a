#pragma once

#include <cstdint>

namespace covec {

// splitmix64: tiny, fast, and identical on every platform. All randomness in
// the library flows through this so runs are reproducible bit for bit.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        // Modulo bias is negligible for n << 2^64.
        return next_u64() % n;
    }

  private:
    std::uint64_t state_;
};

/// Mix several values into one 64-bit seed (per-context stream derivation).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b,
                              std::uint64_t c = 0) {
    Rng r(a * 0x9e3779b97f4a7c15ULL ^ b);
    std::uint64_t s = r.next_u64() ^ c;
    return Rng(s).next_u64();
}

} // namespace covec
