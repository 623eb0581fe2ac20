#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace bprp {

/// SplitMix64: a counter-based 64-bit generator. Every stream in the project is
/// seeded through derive_seed() so that per-entity streams are independent of
/// iteration order. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_open_zero() noexcept { return 1.0 - uniform(); }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (no cached second variate, so the stream
  // position is a pure function of the number of calls).
  double normal() noexcept;

  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

/// Labeled sub-seed derivation: hash(master, label, indices...).
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::initializer_list<std::uint64_t> indices = {}) noexcept;

std::uint64_t hash_string(std::string_view s) noexcept;

}  // namespace bprp
