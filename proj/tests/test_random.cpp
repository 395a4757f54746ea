#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "jdfem/random.hpp"
#include "stats.hpp"

using namespace jdfem;
using namespace jdfem::testing;

TEST(RandomStream, SameSeedSameDraws) {
  RandomStream a(42);
  RandomStream b(42);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.next_u64(), b.next_u64());
    EXPECT_EQ(a.normal(), b.normal());
  }
}

TEST(RandomStream, UniformRanges) {
  RandomStream rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    const double v = rng.uniform_open();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
}

TEST(RandomStream, NormalIsStandardNormal) {
  RandomStream rng(11);
  std::vector<double> x(5000);
  for (double& v : x) v = rng.normal();
  const Moments m = moments(x);
  EXPECT_NEAR(m.mean, 0.0, 4.0 * m.std_error(x.size()));
  EXPECT_NEAR(m.var, 1.0, 0.08);
  EXPECT_GT(ks_normal(x), 0.01);
}

TEST(DeriveSeed, DistinctTagsAndIndices) {
  std::set<std::uint64_t> seen;
  for (const char* tag : {"W1", "W2", "l1", "l2"}) {
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(5, tag, i));
  }
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_EQ(derive_seed(5, "W1", 3), derive_seed(5, "W1", 3));
  EXPECT_NE(derive_seed(5, "W1", 3), derive_seed(6, "W1", 3));
}

TEST(SamplePoisson, MeanAndVariance) {
  for (double mean : {0.3, 4.0, 75.0}) {
    RandomStream rng(3);
    std::vector<double> x(20000);
    for (double& v : x) v = static_cast<double>(sample_poisson(rng, mean));
    const Moments m = moments(x);
    EXPECT_NEAR(m.mean, mean, 4.0 * std::sqrt(mean / x.size())) << mean;
    EXPECT_NEAR(m.var / mean, 1.0, 0.06) << mean;
  }
  RandomStream rng(1);
  EXPECT_EQ(sample_poisson(rng, 0.0), 0u);
  EXPECT_THROW(sample_poisson(rng, -1.0), std::exception);
}

TEST(SampleGamma, MeanAndVariance) {
  for (auto [shape, rate] : {std::pair{0.04, 10.0}, std::pair{0.4, 10.0}, std::pair{4.0, 10.0},
                             std::pair{25.0, 2.0}}) {
    RandomStream rng(9);
    std::vector<double> x(20000);
    for (double& v : x) v = sample_gamma(rng, shape, rate);
    const Moments m = moments(x);
    const double mean = shape / rate;
    const double var = shape / (rate * rate);
    EXPECT_NEAR(m.mean, mean, 4.0 * std::sqrt(var / x.size())) << shape;
    EXPECT_NEAR(m.var / var, 1.0, 0.15) << shape;
    for (double v : x) ASSERT_GE(v, 0.0);
  }
}
