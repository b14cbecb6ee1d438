#include <gtest/gtest.h>

#include <cmath>

#include "advas/rng.hpp"

using advas::Rng;

// Known-answer vectors from the Random123 reference implementation.
TEST(Philox, KnownAnswerZero) {
  const auto out = Rng::philox_block({0, 0, 0, 0}, 0);
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = Rng::philox_block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, 0xffffffffffffffffull);
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  const auto out = Rng::philox_block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                     (std::uint64_t{0x299f31d0u} << 32) | 0xa4093822u);
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(Rng, Reproducible) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, SplitStreamsDifferByName) {
  const Rng root(7);
  Rng a = root.split("adversary"), b = root.split("generator"), c = root.split("adversary");
  const auto x = a.next_u64();
  EXPECT_NE(x, b.next_u64());
  EXPECT_EQ(x, c.next_u64());
}

TEST(Rng, SplitDoesNotAdvanceParent) {
  Rng a(3), b(3);
  (void)a.split("x");
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, UniformRange) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, UniformIndexCoversRange) {
  Rng rng(2);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);  // about 4 sigma
}

TEST(Rng, NormalMoments) {
  Rng rng(5);
  const int n = 1000000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  const double mean = s / n;
  // 3 sigma CLT bounds: sd(mean) = 1e-3, sd(var) = sqrt(2/n) ~ 1.4e-3.
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR(s2 / n - mean * mean, 1.0, 0.01);
}
