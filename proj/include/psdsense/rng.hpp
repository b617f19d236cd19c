#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace psdsense {

// SplitMix64 finalizer; used to derive decorrelated seeds from one master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream tags keep independent uses of the same master seed from colliding.
enum class Stream : std::uint64_t {
  haar_state = 0x11,
  low_rank_state = 0x12,
  basis_choice = 0x21,
  multinomial = 0x31,
  rip_sample = 0x41,
  restart_init = 0x51,
  power_iteration = 0x61,
};

inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t p : path) h = splitmix64(h ^ p);
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                 std::initializer_list<std::uint64_t> path = {}) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
  for (std::uint64_t p : path) h = splitmix64(h ^ p);
  return h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace psdsense
