#include "qrng/philox.hpp"

#include <gtest/gtest.h>

#include <cmath>

using qrng::Philox4x32;
using qrng::PhiloxEngine;

// Random123 known-answer vectors for philox4x32-10.
TEST(Philox, KnownAnswerZero) {
  const Philox4x32 g(0);
  const auto out = g({0, 0, 0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5U);
  EXPECT_EQ(out[1], 0xe169c58dU);
  EXPECT_EQ(out[2], 0xbc57ac4cU);
  EXPECT_EQ(out[3], 0x9b00dbd8U);
}

TEST(Philox, KnownAnswerOnes) {
  const Philox4x32 g(0xffffffffffffffffULL);
  const auto out = g({0xffffffffU, 0xffffffffU, 0xffffffffU, 0xffffffffU});
  EXPECT_EQ(out[0], 0x408f276dU);
  EXPECT_EQ(out[1], 0x41c83b0eU);
  EXPECT_EQ(out[2], 0xa20bc7c6U);
  EXPECT_EQ(out[3], 0x6d5451fdU);
}

TEST(Philox, KnownAnswerPi) {
  // key = {0xa4093822, 0x299f31d0}
  const Philox4x32 k(static_cast<std::uint64_t>(0x299f31d0U) << 32 | 0xa4093822U);
  const auto out = k({0x243f6a88U, 0x85a308d3U, 0x13198a2eU, 0x03707344U});
  EXPECT_EQ(out[0], 0xd16cfe09U);
  EXPECT_EQ(out[1], 0x94fdccebU);
  EXPECT_EQ(out[2], 0x5001e420U);
  EXPECT_EQ(out[3], 0x24126ea1U);
}

TEST(Philox, EngineIsCounterAddressed) {
  PhiloxEngine a(7, 3);
  const Philox4x32 g(7);
  for (std::uint64_t blk = 0; blk < 4; ++blk) {
    const auto w = g.block(blk, 3);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(a(), w[i]);
  }
}

TEST(Philox, GaussianMoments) {
  const Philox4x32 g(42);
  const int n = 200000;
  double s = 0, s2 = 0, c = 0;
  for (int i = 0; i < n; ++i) {
    const auto [a, b] = qrng::gaussian_pair(g, i, 0);
    s += a + b;
    s2 += a * a + b * b;
    c += a * b;
  }
  const double m = 2.0 * n;
  EXPECT_NEAR(s / m, 0.0, 5.0 / std::sqrt(m));
  EXPECT_NEAR(s2 / m, 1.0, 5.0 * std::sqrt(2.0 / m));
  EXPECT_NEAR(c / n, 0.0, 5.0 / std::sqrt(n));
}

TEST(Philox, BelowIsInRange) {
  PhiloxEngine e(1);
  for (int i = 0; i < 10000; ++i) EXPECT_LT(e.below(7), 7u);
  EXPECT_EQ(e.below(1), 0u);
}
