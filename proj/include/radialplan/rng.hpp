#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace radialplan {

// Deterministic RNG contract.
//
// Every random draw in this library comes from splitmix64, either as a
// sequential stream or through the stateless finalizer below.  The scheme is
// part of the output format: masks and simulated batches must be bit
// reproducible across platforms and across reimplementations, so the exact
// constants and the derivations (pair seeds, counter keys, Box-Muller) are
// all pinned here and nowhere else.

// splitmix64 finalizer.  Statelessly hashes 64 bits to 64 bits.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Key derivation: fold words into a seed one at a time.  Order matters.
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ b);
}
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b,
                           std::uint64_t c) {
  return mix64(mix64(mix64(a) ^ b) ^ c);
}
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                           std::uint64_t d) {
  return mix64(mix64(mix64(mix64(a) ^ b) ^ c) ^ d);
}

// Sequential stream.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n).  Plain modulo: the bias is < 2^-32 for any n used
  // here and keeping the draw to one next() call is what makes the stream
  // easy to reproduce elsewhere.
  std::uint64_t bounded(std::uint64_t n) { return next() % n; }

  // Uniform double in (0, 1]: 53 high bits, shifted into the open-below
  // unit interval so log(u) below is always finite.
  double u01_open(void) {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform double in [0, 1).
  double u01(void) {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller, cosine branch only (one draw per pair
  // of uniforms; the sine branch is discarded to keep the stream mapping
  // one-to-one with the uniform draws).
  double gaussian() {
    const double u1 = u01_open();
    const double u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

// Counter-based standard normal: a pure function of the key, no stream
// state.  Used where values must be addressable by coordinate.
inline double gaussian_at(std::uint64_t key) {
  const std::uint64_t a = mix64(key ^ 0x8D5CF3D2A3B1E601ull);
  const std::uint64_t b = mix64(key ^ 0xC2B2AE3D27D4EB4Full);
  const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace radialplan
