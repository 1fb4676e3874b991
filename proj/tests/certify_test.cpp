#include "qrng/certify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qrng/error.hpp"

using namespace qrng;
using namespace qrng::certify;

namespace {

// Binomial tail by direct summation in log space.
double binom_cdf(std::size_t k, std::size_t n, double p) {
  double s = 0;
  for (std::size_t i = 0; i <= k; ++i) {
    const double lt = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) + i * std::log(p) +
                      (n - i) * std::log1p(-p);
    s += std::exp(lt);
  }
  return s;
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(lo) * f(mid) <= 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

CertifyInputs operating_inputs() {
  CertifyInputs in;
  in.deltap_x = 0.0300;
  in.deltap_p = 0.0319;
  in.deltap_override = true;
  in.clip = estimate_clip_fraction(0, 1'000'000);
  in.f_s = Rational(3'200'000'000ULL);
  return in;
}

}  // namespace

TEST(Certify, PublishedPerRoundBound) {
  EXPECT_NEAR(hmin_per_round(0.0300, 0.0319), 12.681, 1e-3);
  EXPECT_NEAR(hmin_per_round(0.0300, 0.0319), -std::log2(0.0300 * 0.0319 / (2 * std::numbers::pi)), 1e-12);
  EXPECT_GE(120 * hmin_per_round(0.0300, 0.0319), 1521.0);
  EXPECT_EQ(hmin_per_round(3.0, 3.0), 0.0);
  EXPECT_THROW((void)hmin_per_round(0.0, 1.0), ValidationError);
}

TEST(Certify, NoClipBound) {
  const double h = hmin_per_round(0.0300, 0.0319);
  EXPECT_EQ(hmin_no_clip(0.0300, 0.0319, 0.0), h);
  EXPECT_NEAR(hmin_no_clip(0.0300, 0.0319, 0.5), h - 1.0, 1e-12);
  const double shift = h - hmin_no_clip(0.0300, 0.0319, 2.3e-6);
  EXPECT_GT(shift, 0.0);
  EXPECT_LT(shift, 4e-6);
  EXPECT_NEAR(shift, -std::log2(1 - 2.3e-6), 1e-12);
  EXPECT_THROW((void)hmin_no_clip(0.03, 0.03, 1.0), ValidationError);
  EXPECT_THROW((void)hmin_no_clip(0.03, 0.03, -0.1), ValidationError);
}

TEST(Certify, ClopperPearsonZeroSuccesses) {
  const std::size_t n = 1'000'000;
  const auto iv = clopper_pearson(0, n);
  EXPECT_EQ(iv.lo, 0.0);
  EXPECT_NEAR(iv.hi, 1.0 - std::pow(0.025, 1.0 / n), 1e-9);
  EXPECT_NEAR(iv.hi, 3.69e-6, 5e-9);
}

TEST(Certify, ClopperPearsonInteriorMatchesBinomialInversion) {
  for (auto [k, n] : {std::pair<std::size_t, std::size_t>{10, 100}, {1, 50}, {49, 50}, {300, 1000}}) {
    const auto iv = clopper_pearson(k, n);
    const double lo = bisect([&](double p) { return (1.0 - binom_cdf(k - 1, n, p)) - 0.025; }, 1e-12, 1 - 1e-12);
    const double hi = bisect([&](double p) { return binom_cdf(k, n, p) - 0.025; }, 1e-12, 1 - 1e-12);
    EXPECT_NEAR(iv.lo, lo, 1e-9) << k << "/" << n;
    EXPECT_NEAR(iv.hi, hi, 1e-9) << k << "/" << n;
  }
  const auto all = clopper_pearson(20, 20);
  EXPECT_EQ(all.hi, 1.0);
  EXPECT_NEAR(all.lo, std::pow(0.025, 1.0 / 20), 1e-12);
  EXPECT_THROW((void)clopper_pearson(3, 2), ValidationError);
}

TEST(Certify, ClipEstimateCoverage) {
  std::mt19937_64 g(2024);
  const std::size_t n = 10'000'000;
  std::binomial_distribution<std::size_t> draw(n, 1e-3);
  int inside = 0;
  for (int t = 0; t < 100; ++t) {
    const auto e = estimate_clip_fraction(draw(g), n);
    inside += e.ci_lo <= 1e-3 && 1e-3 <= e.ci_hi;
  }
  EXPECT_GE(inside, 93);
}

TEST(Certify, ClipEstimateFields) {
  const auto e = estimate_clip_fraction(23, 10'000'000);
  EXPECT_DOUBLE_EQ(e.f_clip, 2.3e-6);
  EXPECT_DOUBLE_EQ(e.n_valid, 10'000'000 - 23.0);
  const auto all = estimate_clip_fraction(5, 5);
  EXPECT_EQ(all.f_clip, 1.0);
  EXPECT_THROW((void)hmin_no_clip(0.03, 0.03, all.f_clip), ValidationError);
}

TEST(Certify, ExtractionLength) {
  const double h = hmin_per_round(0.0300, 0.0319);
  EXPECT_EQ(extraction_length(h, 120, pow2(-64), Rational(1)), 1393u);
  // Two blocks sharing the budget cost 2 bits.
  EXPECT_EQ(extraction_length(h, 120, pow2(-64), Rational(2)), 1391u);
  EXPECT_EQ(extraction_length(h, 5, pow2(-64), Rational(1)), 0u);
  EXPECT_EQ(extraction_length(1.0, 10, Rational(1), Rational(1)), 10u);
  const auto b = EntropyBudget::from_log2(-64, -64, -64);
  EXPECT_EQ(extraction_length(h, 120, b, 1), 1393u);
  EXPECT_THROW((void)extraction_length(h, 0, pow2(-64), Rational(1)), ValidationError);
}

TEST(Certify, BudgetValidation) {
  EXPECT_THROW((void)EntropyBudget::from_log2(0, -64, -64), ValidationError);
  EXPECT_THROW((void)EntropyBudget::from_log2(-64, -64, -64, 0), ValidationError);
  const auto b = EntropyBudget::from_log2(-10, -20, -30, 4).per_block();
  EXPECT_EQ(b.eps_s, pow2(-12));
  EXPECT_EQ(b.eps_pa, pow2(-22));
  EXPECT_EQ(b.eps_sec(), pow2(-12) + pow2(-22) + pow2(-32));
}

TEST(Certify, NetRateIsExact) {
  const auto r = net_rate(1272, 120, Rational(3'200'000'000ULL));
  EXPECT_EQ(r, Rational(33'920'000'000ULL));
  EXPECT_EQ(to_decimal(r), "33920000000");
  EXPECT_EQ(to_decimal(Rational(1272) / Rational(2880), 9), "0.441666666");
}

TEST(Certify, FloorToWord) {
  static_assert(floor_to_word(1393, 24) == 1392);
  static_assert(floor_to_word(1600, 24) == 1584);
  static_assert(floor_to_word(1272, 24) == 1272);
}

TEST(Certify, CertificateAtOperatingPoint) {
  auto in = operating_inputs();
  const auto c = make_certificate(in);
  EXPECT_NEAR(c.h_min_1, 12.681, 1e-3);
  EXPECT_EQ(c.n_eff, 120u);
  EXPECT_EQ(c.k_in, 2880u);
  EXPECT_EQ(c.ell_bound, 1393u);
  EXPECT_EQ(c.ell_admissible, 1392u);
  EXPECT_TRUE(c.admissible());
  EXPECT_EQ(c.r_net, Rational(33'920'000'000ULL));
  EXPECT_EQ(c.ratio, Rational(1272, 2880));

  in.ell = 1600;
  EXPECT_FALSE(make_certificate(in).admissible());
  in.ell = 1393;
  EXPECT_TRUE(make_certificate(in).admissible());
  in.ell = 1394;
  EXPECT_FALSE(make_certificate(in).admissible());
}

TEST(Certify, DecimationMode) {
  auto in = operating_inputs();
  in.mode = Mode::decimation;
  in.decimation = 3;
  const auto c = make_certificate(in);
  EXPECT_EQ(c.n_eff, 40u);
  EXPECT_EQ(c.f_s_eff, Rational(3'200'000'000ULL, 3));
  EXPECT_EQ(c.r_net, Rational(1272) / Rational(40) * Rational(3'200'000'000ULL, 3));
  in.mode = Mode::transform;
  EXPECT_THROW((void)make_certificate(in), ValidationError);
}

TEST(Certify, SerializationIsStable) {
  const auto c = make_certificate(operating_inputs());
  const auto a = serialize(c);
  EXPECT_EQ(a, serialize(make_certificate(operating_inputs())));
  EXPECT_NE(a.find("ell_bound = 1393 bit\n"), std::string::npos);
  EXPECT_NE(a.find("r_net = 33920000000 bit/s\n"), std::string::npos);
  EXPECT_NE(a.find("eps_pa_log2 = -64\n"), std::string::npos);
  EXPECT_NE(a.find("deltap_x = 0.03 vac\n"), std::string::npos);
  EXPECT_NE(a.find("admissible = true\n"), std::string::npos);
}
