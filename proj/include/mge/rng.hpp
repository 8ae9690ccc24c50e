#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mge {

// splitmix64 finalizer; used to derive independent substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for a substream identified by up to two stream ids (e.g. epoch, user).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(seed ^ 0x853c49e6748fea9bULL) + a) ^ mix64(b + 0xda3e39cb94b95bdbULL);
}

// Wrapper around mt19937_64 (bit-reproducible across platforms by the
// standard). std::uniform_*_distribution and std::shuffle are
// implementation-defined, so the draws below are spelled out explicitly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, n). Modulo bias is < 2^-32 for every n used here and the
  // stream stays stable across library versions.
  std::uint64_t next_below(std::uint64_t n) { return gen_() % n; }

  // Uniform double in the open interval (0, 1).
  double next_unit_open() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

  // Uniform double in (lo, hi), endpoints excluded.
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit_open(); }

  // Fisher-Yates with explicit index draws.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace mge
