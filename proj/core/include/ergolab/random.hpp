// Counter-based randomness. Every draw is a pure function of (seed, index), so
// symbolic points regenerate bit-identically from their seed and cursor and can
// be read at arbitrary (including negative) positions without stored state.

#pragma once

#include <cstdint>

namespace ergolab {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash64(std::uint64_t seed, std::int64_t index) {
  return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(index));
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double uniform01(std::uint64_t seed, std::int64_t index) {
  return static_cast<double>(hash64(seed, index) >> 11) * 0x1.0p-53;
}

/// Child seed for the stream labelled `stream` under `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Fair bit i of the stream: bit (i mod 64) of the 64-bit word floor(i / 64).
constexpr unsigned fair_bit(std::uint64_t seed, std::int64_t i) {
  const std::int64_t word = i >> 6;  // arithmetic shift keeps negative words distinct
  return static_cast<unsigned>((hash64(seed, word) >> (static_cast<std::uint64_t>(i) & 63)) & 1U);
}

/// 64 consecutive fair bits starting at i; bit k of the result is fair_bit(i + k).
constexpr std::uint64_t fair_window(std::uint64_t seed, std::int64_t i) {
  const std::int64_t word = i >> 6;
  const unsigned shift = static_cast<unsigned>(static_cast<std::uint64_t>(i) & 63);
  const std::uint64_t w0 = hash64(seed, word);
  if (shift == 0) return w0;
  const std::uint64_t w1 = hash64(seed, word + 1);
  return (w0 >> shift) | (w1 << (64 - shift));
}

}  // namespace ergolab
