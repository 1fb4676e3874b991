#include "qrng/app/config.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "qrng/error.hpp"
#include "test_util.hpp"

using namespace qrng;
using namespace qrng::app;

namespace {

std::string error_of(const std::string& text) {
  try {
    (void)parse_config(text, "t.ini");
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, UnitsAreScaled) {
  const auto c = parse_config(
      "[source]\n"
      "p_lo = 8.4 mW\n"
      "f_s = 3.2 GHz\n"
      "v_pp = 500 mV\n"
      "m_x = 0.241 V2/W  # trailing comment\n"
      "c_x = 4.35e-4 V2\n"
      "passband_lo = 185 MHz\n"
      "enob_x = 10.2 bit\n"
      "[certify]\n"
      "ell = 1200 bit\n"
      "mode = decimation\n"
      "decimation = 2\n");
  EXPECT_DOUBLE_EQ(c.source.model.p_lo, 8.4e-3);
  EXPECT_DOUBLE_EQ(c.source.model.f_s, 3.2e9);
  EXPECT_DOUBLE_EQ(c.source.model.v_pp, 0.5);
  EXPECT_DOUBLE_EQ(c.source.model.m_x, 0.241);
  EXPECT_DOUBLE_EQ(c.source.model.passband_lo, 185e6);
  EXPECT_DOUBLE_EQ(c.source.model.enob_x, 10.2);
  EXPECT_EQ(c.certify.ell, 1200u);
  EXPECT_EQ(c.certify.mode, certify::Mode::decimation);
  EXPECT_EQ(c.toeplitz().j, 1200u);
}

TEST(Config, Lists) {
  const auto c = parse_config("[calibration]\nsweep_powers = 0, 5, 10 mW\n");
  ASSERT_EQ(c.calibration.sweep_powers.size(), 3u);
  EXPECT_DOUBLE_EQ(c.calibration.sweep_powers[2], 10e-3);
}

TEST(Config, ErrorsCarryLineNumbers) {
  const auto e = error_of("[source]\np_lo = 8.4 mW\nbogus = 3\n");
  EXPECT_NE(e.find("t.ini:3"), std::string::npos) << e;
  EXPECT_NE(e.find("bogus"), std::string::npos) << e;
}

TEST(Config, MissingOrWrongUnit) {
  EXPECT_NE(error_of("[source]\np_lo = 8.4\n").find("missing unit"), std::string::npos);
  EXPECT_NE(error_of("[source]\np_lo = 8.4 V\n").find("not power"), std::string::npos);
  EXPECT_NE(error_of("[source]\nrho_xp = 0.01 V\n").find("unexpected unit"), std::string::npos);
}

TEST(Config, AllErrorsReportedTogether) {
  const auto e = error_of("[source]\np_lo = x mW\nnope = 1\n[source]\np_lo = 1 mW\n");
  EXPECT_NE(e.find("t.ini:2"), std::string::npos) << e;
  EXPECT_NE(e.find("t.ini:3"), std::string::npos) << e;
}

TEST(Config, SemanticValidation) {
  EXPECT_NE(error_of("[source]\nrounds = 0\n").find("rounds"), std::string::npos);
  EXPECT_FALSE(error_of("[certify]\nell = 12 bit\n").empty());
  EXPECT_TRUE(error_of("[certify]\nell = 1273 bit\n").empty());
  EXPECT_FALSE(error_of("[certify]\neps_pa_log2 = 0\n").empty());
  EXPECT_FALSE(error_of("[calibration]\ndeltap_x = 0.03\n").empty());
  EXPECT_FALSE(error_of("[extractor]\nn_b = 19\n").empty());
  EXPECT_FALSE(error_of("[diagnostics]\nn_fft = 1023\n").empty());
  EXPECT_FALSE(error_of("[certify]\ndecimation = 2\n").empty());
  EXPECT_TRUE(error_of("").empty());
}

TEST(Config, RelativePathsFollowTheConfigFile) {
  const auto dir = testutil::scratch_dir("config_paths");
  std::filesystem::create_directories(dir / "sub");
  {
    std::ofstream out(dir / "sub" / "run.ini");
    out << "[extractor]\nseed_file = seed.bin\n[output]\ndir = out\n";
  }
  const auto c = load_config(dir / "sub" / "run.ini");
  EXPECT_EQ(*c.extractor.seed_file, dir / "sub" / "seed.bin");
  EXPECT_EQ(c.output_dir, dir / "sub" / "out");
  EXPECT_THROW((void)load_config(dir / "missing.ini"), IoError);
}

TEST(Config, ReferenceDefaults) {
  const auto c = reference_defaults();
  EXPECT_DOUBLE_EQ(*c.calibration.deltap_x, 0.0300);
  EXPECT_DOUBLE_EQ(*c.calibration.deltap_p, 0.0319);
  EXPECT_EQ(c.certify.ell, 1272u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ShippedReferenceFileMatchesDefaults) {
  const auto c = load_config(std::filesystem::path(QRNG_SOURCE_DIR) / "configs" / "reference.ini");
  const auto d = reference_defaults();
  EXPECT_DOUBLE_EQ(c.source.model.p_lo, d.source.model.p_lo);
  EXPECT_EQ(c.source.model.m_x, d.source.model.m_x);
  EXPECT_DOUBLE_EQ(c.source.model.passband_hi, d.source.model.passband_hi);
  EXPECT_EQ(c.source.rounds, d.source.rounds);
  ASSERT_EQ(c.calibration.sweep_powers.size(), d.calibration.sweep_powers.size());
  for (std::size_t i = 0; i < d.calibration.sweep_powers.size(); ++i) {
    EXPECT_DOUBLE_EQ(c.calibration.sweep_powers[i], d.calibration.sweep_powers[i]);
  }
  EXPECT_EQ(*c.calibration.deltap_x, *d.calibration.deltap_x);
  EXPECT_EQ(c.certify.ell, d.certify.ell);
  EXPECT_EQ(c.extractor.k_in, d.extractor.k_in);
  EXPECT_EQ(c.diagnostics.n_fft, d.diagnostics.n_fft);
  EXPECT_EQ(c.diagnostics.bootstrap.block_len, d.diagnostics.bootstrap.block_len);
}
