#pragma once

// Deterministic, stream-splittable randomness for the simulator. Parallel
// workers get independent streams by hashing (seed, snr index, protocol
// index, packet index), so results never depend on worker count.

#include <complex>
#include <cstdint>
#include <cmath>

namespace selharq {

namespace detail {

inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::splitmix64_mix(state_);
  }

  // Uniform in [0, 1) with full 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal, Box-Muller with a cached spare.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(1.0 - uniform()));
    const double theta = 6.283185307179586476925286766559 * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Complex Gaussian with the given per-component standard deviation. Uses
  // both Box-Muller outputs of one draw pair, independent of gaussian()'s
  // spare cache.
  std::complex<double> cgaussian(double component_sigma) {
    const double r = component_sigma * std::sqrt(-2.0 * std::log(1.0 - uniform()));
    const double theta = 6.283185307179586476925286766559 * uniform();
    return {r * std::cos(theta), r * std::sin(theta)};
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Collision-resistant stream id for (seed, a, b, c); each component is fully
// mixed before the next is folded in.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                   std::uint64_t c) {
  std::uint64_t h = detail::splitmix64_mix(seed + 0x9e3779b97f4a7c15ULL);
  h = detail::splitmix64_mix(h ^ (a + 0x9e3779b97f4a7c15ULL));
  h = detail::splitmix64_mix(h ^ (b + 0x9e3779b97f4a7c15ULL));
  h = detail::splitmix64_mix(h ^ (c + 0x9e3779b97f4a7c15ULL));
  return h;
}

}  // namespace selharq
