#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace isaclab {

/// SplitMix64 finalizer; used only to derive independent generator keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stable 64-bit id of a stream name (FNV-1a).
constexpr std::uint64_t stream_id(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Generator for one (seed, trial, stream) key. Distinct keys give
/// statistically independent sequences, whatever order trials run in.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) {
  const std::uint64_t key = mix64(mix64(mix64(seed) ^ trial) ^ stream);
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t trial, std::string_view stream) {
  return make_rng(seed, trial, stream_id(stream));
}

} // namespace isaclab
