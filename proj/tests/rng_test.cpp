#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "coinvest/rng.hpp"

namespace coinvest {
namespace {

TEST(RngStream, SameKeySameDraws) {
  RngStream a(1, 2, 3), b(1, 2, 3);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, EpisodeAndSubstreamChangeTheStream) {
  RngStream base(1, 2, 3), ep(1, 3, 3), sub(1, 2, 4), seed(2, 2, 3);
  int diff_ep = 0, diff_sub = 0, diff_seed = 0;
  RngStream b1(1, 2, 3), b2(1, 2, 3);
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t x = base.next_u64();
    diff_ep += x != ep.next_u64();
    diff_sub += x != sub.next_u64();
    diff_seed += x != seed.next_u64();
    b1.next_u64();
    b2.next_u64();
  }
  EXPECT_GT(diff_ep, 60);
  EXPECT_GT(diff_sub, 60);
  EXPECT_GT(diff_seed, 60);
}

TEST(RngStream, DoublesAreInUnitIntervalWithSaneMean) {
  RngStream rng(7, 0, 0);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_double();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // 4-sigma band around 1/2 for the mean of U(0,1) draws.
  const double sigma = std::sqrt(1.0 / 12.0 / n);
  EXPECT_NEAR(sum / n, 0.5, 4.0 * sigma);
}

}  // namespace
}  // namespace coinvest
