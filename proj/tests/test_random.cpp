#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include <phca/random.hpp>

using phca::Rng;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.uniform(), b.uniform());
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.normal(), b.normal());
}

TEST(Rng, UniformStaysInHalfOpenUnitInterval) {
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, IndexCoversRange) {
  Rng rng(3);
  std::set<std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto k = rng.index(7);
    ASSERT_LT(k, 7u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Rng, NormalMoments) {
  Rng rng(5);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z, s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, TruncatedNormalRespectsBound) {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) ASSERT_LE(std::abs(rng.truncated_normal(0.5)), 0.5);
}

TEST(Rng, SplitGivesDistinctChildren) {
  Rng rng(11);
  const auto a = rng.split(), b = rng.split();
  EXPECT_NE(a, b);
  Rng ca(a), cb(b);
  EXPECT_NE(ca.uniform(), cb.uniform());
}

TEST(LatinHypercube, OnePointPerStratum) {
  Rng rng(13);
  const std::size_t n = 17, dim = 3;
  const auto pts = phca::latin_hypercube(n, dim, rng);
  ASSERT_EQ(pts.size(), n);
  for (std::size_t d = 0; d < dim; ++d) {
    std::vector<int> hits(n, 0);
    for (const auto& p : pts) {
      ASSERT_EQ(p.size(), dim);
      ASSERT_GE(p[d], 0.0);
      ASSERT_LT(p[d], 1.0);
      ++hits[static_cast<std::size_t>(p[d] * n)];
    }
    EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
}
