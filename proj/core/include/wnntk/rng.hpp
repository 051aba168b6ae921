#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace wnntk {

/// Seeded generator used for every random draw in the library.
///
/// Streams for independent sub-experiments are derived with `derive`, so a
/// sweep cell or a Monte-Carlo estimator never shares state with another.
class Rng {
 public:
  static constexpr std::string_view kName = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng derive(std::uint64_t master, std::uint64_t stream);

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  /// Uniform draw from {-1, +1}.
  double sign() { return (engine_() >> 63) != 0 ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// SplitMix64 finalizer; used for seed derivation and config hashing.
std::uint64_t mix64(std::uint64_t x);

/// Seed of an independent stream, e.g. one sweep cell of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace wnntk
