#include "qrng/diagnostics/battery.hpp"

#include <gtest/gtest.h>

#include <random>

#include "qrng/diagnostics/ks.hpp"
#include "qrng/error.hpp"
#include "test_util.hpp"

using namespace qrng;
using namespace qrng::diagnostics;

namespace {

std::vector<std::uint8_t> bits(const char* s) {
  std::vector<std::uint8_t> v;
  for (; *s; ++s) v.push_back(*s == '1');
  return v;
}

// First 100 binary digits of e.
const char* kE100 =
    "1100100100001111110110101010001000100001011010001100001000110100110001001100011001100010100010111000";

}  // namespace

// Worked examples from the NIST statistical test suite documentation.
TEST(Nist, Monobit) {
  EXPECT_NEAR(nist::monobit(bits("1011010101")), 0.527089, 1e-6);
  EXPECT_NEAR(nist::monobit(bits(kE100)), 0.109599, 1e-6);
}

TEST(Nist, BlockFrequency) {
  EXPECT_NEAR(nist::block_frequency(bits("0110011010"), 3), 0.801252, 1e-6);
  EXPECT_NEAR(nist::block_frequency(bits(kE100), 10), 0.706438, 1e-6);
}

TEST(Nist, Runs) {
  EXPECT_NEAR(nist::runs(bits("1001101011")), 0.147232, 1e-6);
  EXPECT_NEAR(nist::runs(bits(kE100)), 0.500798, 1e-6);
}

TEST(Nist, LongestRun) {
  const auto v = bits(
      "11001100000101010110110001001100111000000000001001001101010100010001001111010110100000001101011111001100"
      "111001101101100010110010");
  ASSERT_EQ(v.size(), 128u);
  // Counts (4, 9, 3, 0) against the tabulated class probabilities give
  // chi2 = 4.882605 and p = 0.180598; the documentation prints 0.180609.
  EXPECT_NEAR(nist::longest_run(v), 0.18059797678556, 1e-10);
  EXPECT_NEAR(nist::longest_run(v), 0.180609, 2e-5);
  EXPECT_THROW((void)nist::longest_run(bits("0101")), ValidationError);
}

TEST(Nist, Serial) {
  const auto p = nist::serial(bits("0011011101"), 3);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(p[0], 0.808792, 1e-6);
  EXPECT_NEAR(p[1], 0.670320, 1e-6);
}

TEST(Nist, Cusum) {
  // z = 2 at n = 10, evaluated from the series by hand.
  const auto p = nist::cusum(bits("1011010101"));
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(p[0], 0.94174062908004, 1e-10);
  const auto e = nist::cusum(bits(kE100));
  EXPECT_NEAR(e[0], 0.219194, 1e-6);
  EXPECT_NEAR(e[1], 0.114866, 1e-6);
}

TEST(Nist, ApproximateEntropy) {
  EXPECT_NEAR(nist::approximate_entropy(bits("0100110101"), 3), 0.261961, 1e-6);
  EXPECT_NEAR(nist::approximate_entropy(bits(kE100), 2), 0.235301, 1e-6);
}

TEST(Nist, Autocorrelation) {
  // Alternating bits: every odd lag disagrees everywhere.
  std::vector<std::uint8_t> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i & 1;
  const auto p = nist::autocorrelation(v, 4);
  ASSERT_EQ(p.size(), 4u);
  EXPECT_LT(p[0], 1e-100);
  EXPECT_LT(p[1], 1e-100);
  const auto r = nist::autocorrelation(bits(kE100), 1);
  std::size_t a = 0;
  const auto e = bits(kE100);
  for (std::size_t i = 0; i + 1 < e.size(); ++i) a += e[i] ^ e[i + 1];
  EXPECT_NEAR(r[0], std::erfc(std::abs(2.0 * (a - 49.5) / std::sqrt(99.0)) / std::sqrt(2.0)), 1e-12);
}

TEST(Ks, KolmogorovQ) {
  EXPECT_NEAR(kolmogorov_q(1.0), 0.2699996717, 1e-9);
  EXPECT_NEAR(kolmogorov_q(0.5), 0.9639452436, 1e-9);
  EXPECT_NEAR(kolmogorov_q(1.36), 0.0494858, 1e-6);
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
}

TEST(Ks, UniformSample) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u;
  std::vector<double> v(10000);
  for (auto& x : v) x = u(g);
  const auto r = ks_uniform(v);
  EXPECT_GT(r.p, 0.01);
  EXPECT_EQ(r.n, v.size());
  for (auto& x : v) x = x * x;
  EXPECT_LT(ks_uniform(v).p, 1e-10);

  const std::vector<double> one{0.3};
  EXPECT_DOUBLE_EQ(ks_uniform(one).d, 0.7);
  EXPECT_THROW((void)ks_uniform(std::vector<double>{}), ValidationError);
}

TEST(Battery, PseudorandomBitsPass) {
  const auto b = testutil::random_bits(4'000'000, 2024);
  const auto rep = test_battery(b);
  EXPECT_EQ(rep.sequences, 4u);
  EXPECT_EQ(rep.sequence_bits, kBatterySequenceBits);
  EXPECT_FALSE(rep.tests.empty());
  for (const auto& t : rep.tests) {
    EXPECT_EQ(t.first_level.size() % 4, 0u) << t.name;
    EXPECT_GT(t.p, 0.01) << t.name;
  }
  EXPECT_TRUE(rep.all_pass());
  EXPECT_LE(rep.min_p(), rep.ks_p);
}

TEST(Battery, BiasedBitsFail) {
  std::mt19937_64 g(5);
  std::bernoulli_distribution d(0.51);
  BitStream b(1'000'000);
  for (std::size_t i = 0; i < b.size(); ++i) b.set(i, d(g));
  const auto rep = test_battery(b);
  EXPECT_FALSE(rep.all_pass());
  EXPECT_LT(rep.tests[0].p, 1e-10);
}

TEST(Battery, Validation) {
  EXPECT_THROW((void)test_battery(testutil::random_bits(5000, 1), 999), ValidationError);
  EXPECT_THROW((void)test_battery(testutil::random_bits(5000, 1), 10000), ValidationError);
}
