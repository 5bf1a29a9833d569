#pragma once

#include <cstdint>
#include <random>

namespace andersonlab {

// splitmix64 finalizer.  Used to derive independent per-realization seeds from
// (master_seed, realization_index) so that results never depend on which
// worker thread picks up which realization.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index + 0x9e3779b97f4a7c15ull));
}

// Seeded generator with a fixed, portable mapping to doubles: the top 53 bits
// of one mt19937_64 word, scaled to [0,1).  Never shared between threads.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  static RandomStream for_realization(std::uint64_t master, std::uint64_t index) {
    return RandomStream(split_seed(master, index));
  }

  std::uint64_t bits() { return gen_(); }

  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

private:
  std::mt19937_64 gen_;
};

}  // namespace andersonlab
