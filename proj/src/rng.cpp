#include "bprp/rng.hpp"

#include <cmath>
#include <numbers>

namespace bprp {

double SplitMix64::normal() noexcept {
  const double u1 = uniform_open_zero();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

std::uint64_t hash_string(std::string_view s) noexcept {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::initializer_list<std::uint64_t> indices) noexcept {
  std::uint64_t h = mix64(master ^ 0x243f6a8885a308d3ULL);
  h = mix64(h ^ hash_string(label));
  for (const std::uint64_t i : indices) {
    h = mix64(h + 0x9e3779b97f4a7c15ULL + i);
  }
  return h;
}

}  // namespace bprp
