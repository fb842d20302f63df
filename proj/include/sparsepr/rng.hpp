#pragma once

#include <cstdint>
#include <random>

namespace sparsepr {

/// 64-bit avalanche mix (splitmix64 finalizer).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for an independent stream, e.g. one replication of an experiment.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) noexcept {
  return mix64(mix64(parent) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

/// Seeded random stream. Copies continue independently from the same state;
/// use split() to obtain statistically independent child streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  double normal() { return normal_(engine_); }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
  }

  /// Independent stream keyed by (seed, stream). Does not advance this stream.
  Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace sparsepr
