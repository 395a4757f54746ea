#include "jdfem/random.hpp"

#include <cmath>
#include <numbers>

#include "jdfem/error.hpp"

namespace jdfem {

double RandomStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t index) {
  // FNV-1a over the tag.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(splitmix64(master) ^ h) ^ splitmix64(index + 0x51ed27ULL));
}

namespace {

std::uint64_t poisson_inverse_cdf(RandomStream& rng, double mean) {
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  const double k_max = mean + 40.0 * std::sqrt(mean) + 100.0;
  while (u > cdf && static_cast<double>(k) < k_max) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

constexpr double kPoissonChunk = 30.0;

}  // namespace

std::uint64_t sample_poisson(RandomStream& rng, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw InvalidArgument("sample_poisson: mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  const auto chunks = static_cast<std::uint64_t>(std::ceil(mean / kPoissonChunk));
  const double chunk_mean = mean / static_cast<double>(chunks);
  std::uint64_t total = 0;
  for (std::uint64_t c = 0; c < chunks; ++c) total += poisson_inverse_cdf(rng, chunk_mean);
  return total;
}

double sample_gamma(RandomStream& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw InvalidArgument("sample_gamma: shape and rate must be positive");
  }
  if (shape < 1.0) {
    // G(a) = G(a + 1) * U^(1/a), evaluated in log space; tiny shapes may
    // legitimately underflow to 0.
    const double boosted = sample_gamma(rng, shape + 1.0, 1.0);
    const double log_value = std::log(boosted) + std::log(rng.uniform_open()) / shape;
    return std::exp(log_value) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform_open();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v / rate;
  }
}

}  // namespace jdfem
