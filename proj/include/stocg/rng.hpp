#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace stocg {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from an ordered list of keys. Pure and order
/// sensitive, so (seed, level, kind) and (seed, kind, level) differ.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k));
  return h;
}

// Stream tags used with derive_seed.
enum class StreamKind : std::uint64_t {
  value = 1,
  jacobian = 2,
  output_index = 3,
  replication = 4,
};

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

}  // namespace stocg
