#pragma once

#include <cmath>
#include <cstdint>

namespace conespectra {

// Counter-based generator: every draw is a pure function of the seed and the
// stream indices it was forked with. Forks for disjoint streams (trials,
// vertices) are independent, so parallel sampling stays reproducible without
// shared state.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : key_(splitmix64(seed ^ 0xA0761D6478BD642Full)) {}

    // Independent substream; pure in (this->key_, stream).
    Rng fork(std::uint64_t stream) const {
        Rng r(0);
        r.key_ = splitmix64(key_ ^ (0x9E3779B97F4A7C15ull * (stream + 1)));
        r.counter_ = 0;
        return r;
    }

    std::uint64_t next_u64() { return splitmix64(key_ ^ (0xD1B54A32D192ED03ull * ++counter_)); }

    // Uniform in [0, 1), 53-bit resolution.
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    bool coin() { return (next_u64() & 1ull) != 0; }

    // Standard normal via Box-Muller.
    double normal() {
        double u1 = u01();
        while (u1 <= 0.0) u1 = u01();
        const double u2 = u01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace conespectra
