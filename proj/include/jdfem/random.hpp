#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace jdfem {

/// Seeded pseudo-random stream. All variate generation is implemented here
/// (not via <random> distributions) so draws are identical across standard
/// library implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal variate (Box-Muller, second value cached).
  double normal();

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic child seed for (master, tag, index); distinct tags give
/// statistically independent streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t index = 0);

/// Poisson(mean) by sequential inverse-cdf search. Means above 30 are split
/// into independent chunks so the search never underflows.
std::uint64_t sample_poisson(RandomStream& rng, double mean);

/// Gamma(shape, rate) with density b^a x^(a-1) e^(-bx) / Gamma(a).
/// Marsaglia-Tsang rejection for shape >= 1, boosted by U^(1/a) below that.
double sample_gamma(RandomStream& rng, double shape, double rate);

}  // namespace jdfem
