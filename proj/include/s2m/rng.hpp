#pragma once

#include <cstdint>
#include <string_view>

namespace s2m {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over the bytes of `s`.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Per-item seed: mix64(global_seed ^ mix64(fnv1a64(key))).
///
/// Depends only on the global seed and the item's own key, so adding or
/// removing other items never changes an item's stream.
constexpr std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view key) {
  return mix64(global_seed ^ mix64(fnv1a64(key)));
}

constexpr std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t index) {
  return mix64(global_seed ^ mix64(index));
}

/// Uniform double in [0, 1) from a 64-bit word (top 53 bits).
constexpr double unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace s2m
