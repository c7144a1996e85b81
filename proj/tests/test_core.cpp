// Primitives: RNG determinism and distribution sanity, exact numeric
// formatting, pooling, distances.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <set>
#include <vector>

#include "bwsnet/core.hpp"

using bwsnet::Rng;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
  }
  Rng c(42), d(42);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(c.uniform(), d.uniform());
    ASSERT_EQ(c.gaussian(), d.gaussian());
    ASSERT_EQ(c.below(17), d.below(17));
  }
}

TEST(Rng, DifferentSeedsDiverge) {
  Rng a(1), b(2);
  int differ = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() != b.next_u64()) ++differ;
  EXPECT_GT(differ, 60);
}

TEST(Rng, UniformRangeAndMoments) {
  Rng rng(7);
  double sum = 0.0, sumsq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sumsq += u * u;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  EXPECT_NEAR(mean, 0.5, 0.01);
  EXPECT_NEAR(var, 1.0 / 12.0, 0.005);
}

TEST(Rng, UniformLoHi) {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    double u = rng.uniform(-1.0, 1.0);
    ASSERT_GE(u, -1.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, GaussianMoments) {
  Rng rng(11);
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double g = rng.gaussian();
    sum += g;
    sumsq += g * g;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Rng, BelowCoversRangeUniformly) {
  Rng rng(13);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    std::uint64_t v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) {
    EXPECT_GT(c, 9000);
    EXPECT_LT(c, 11000);
  }
  EXPECT_THROW((void)rng.below(0), bwsnet::error);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(17);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  rng.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  EXPECT_EQ(s.size(), 100u);
  EXPECT_EQ(*s.begin(), 0);
  EXPECT_EQ(*s.rbegin(), 99);

  std::vector<int> w(100);
  for (int i = 0; i < 100; ++i) w[i] = i;
  Rng rng2(17);
  rng2.shuffle(w);
  EXPECT_EQ(v, w);
}

TEST(FmtG17, RoundTripsBitExactly) {
  Rng rng(23);
  std::vector<double> cases = {0.0,    1.0,   -1.0,       0.1,       1.0 / 3.0,
                               1e308,  5e-324, -2.5e-17,  3.141592653589793,
                               1e-300, 123456789.123456789};
  for (int i = 0; i < 1000; ++i) cases.push_back(rng.gaussian(0.0, std::pow(10.0, rng.uniform(-20, 20))));
  for (double x : cases) {
    std::string s = bwsnet::fmt_g17(x);
    double back = std::strtod(s.c_str(), nullptr);
    EXPECT_EQ(back, x) << s;
  }
}

TEST(MeanPool, ColumnwiseMean) {
  bwsnet::Mat m(2, 3);
  m.a = {1, 2, 3, 3, 4, 5};
  std::vector<double> p = bwsnet::mean_pool(m);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0], 2.0);
  EXPECT_EQ(p[1], 3.0);
  EXPECT_EQ(p[2], 4.0);
  bwsnet::Mat empty;
  EXPECT_THROW((void)bwsnet::mean_pool(empty), bwsnet::error);
}

TEST(Euclidean, KnownDistances) {
  EXPECT_EQ(bwsnet::euclidean({0, 0}, {3, 4}), 5.0);
  EXPECT_EQ(bwsnet::euclidean({1, 1, 1}, {1, 1, 1}), 0.0);
  EXPECT_THROW((void)bwsnet::euclidean({1.0}, {1.0, 2.0}), bwsnet::error);
}
