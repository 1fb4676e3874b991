#include "qrng/app/run.hpp"

#include <gtest/gtest.h>

#include "qrng/digest.hpp"
#include "qrng/extracted_file.hpp"
#include "qrng/report.hpp"
#include "test_util.hpp"

using namespace qrng;
using namespace qrng::app;

namespace {

RunConfig small_run(const std::string& name) {
  auto c = reference_defaults();
  c.source.rounds = 200'000;
  c.calibration.sweep_rounds = 50'000;
  c.diagnostics.enabled = false;
  c.output_dir = testutil::scratch_dir(name);
  return c;
}

}  // namespace

TEST(Run, InadmissibleLengthStopsBeforeExtraction) {
  auto c = small_run("run_1600");
  c.certify.ell = 1584;
  const auto r = run_pipeline(c);
  EXPECT_EQ(r.exit_code, 2);
  ASSERT_TRUE(r.certificate);
  EXPECT_FALSE(r.certificate->admissible());
  EXPECT_FALSE(r.extracted);
  EXPECT_FALSE(std::filesystem::exists(c.output_dir / "extracted.qrngext"));
  EXPECT_TRUE(std::filesystem::exists(c.output_dir / "certificate.txt"));
}

TEST(Run, AdmissibleLengthExtracts) {
  const auto c = small_run("run_1272");
  const auto r = run_pipeline(c);
  ASSERT_EQ(r.exit_code, 0) << (r.messages.empty() ? "" : r.messages.back());
  ASSERT_TRUE(r.extracted);
  EXPECT_EQ(r.extracted->size() % 1272, 0u);
  EXPECT_GT(r.extracted->size(), 0u);

  const auto f = extractor::read_extracted(c.output_dir / "extracted.qrngext");
  EXPECT_TRUE(f.certified());
  EXPECT_EQ(f.payload, *r.extracted);
  const auto cert_text = report::read_text(c.output_dir / "certificate.txt");
  EXPECT_EQ(f.certificate, cert_text);
  EXPECT_EQ(f.certificate_digest, sha256(cert_text));
}

TEST(Run, RepeatedRunsAreByteIdentical) {
  const auto a = small_run("run_rep_a");
  const auto b = small_run("run_rep_b");
  ASSERT_EQ(run_pipeline(a).exit_code, 0);
  ASSERT_EQ(run_pipeline(b).exit_code, 0);
  for (const char* name : {"extracted.qrngext", "certificate.txt", "calibration.txt"}) {
    EXPECT_EQ(report::read_text(a.output_dir / name), report::read_text(b.output_dir / name)) << name;
  }
}

TEST(Run, CertifyOnlyWritesNoPayload) {
  auto c = small_run("run_cert_only");
  const auto r = run_pipeline(c, {.stages = kCalibrate | kCertify});
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_TRUE(r.certificate);
  EXPECT_FALSE(r.extracted);
  EXPECT_EQ(r.certificate->ell_bound, 1393u);
}

TEST(Run, NoFilesMode) {
  auto c = small_run("run_nofiles");
  const auto r = run_pipeline(c, {.stages = kAllStages, .write_files = false});
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_TRUE(r.written.empty());
  EXPECT_TRUE(std::filesystem::is_empty(c.output_dir));
}

TEST(Run, MissingInputIsAnIoError) {
  auto c = small_run("run_missing");
  c.source.input = c.output_dir / "nope.qrngraw";
  const auto r = run_pipeline(c);
  EXPECT_EQ(r.exit_code, 3);
  ASSERT_FALSE(r.messages.empty());
}

TEST(Run, SweepFile) {
  const auto dir = testutil::scratch_dir("run_sweep");
  report::write_text(dir / "s.csv",
                     "# p_lo_W, var_x_V2, var_p_V2, n_samples\n"
                     "0, 4.35e-4, 5.60e-4, 100000\n"
                     "0.004, 1.399e-3, 1.492e-3, 100000\n"
                     "0.008, 2.363e-3, 2.424e-3, 100000\n");
  const auto pts = read_sweep_file(dir / "s.csv");
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_DOUBLE_EQ(pts[1].p_lo, 0.004);
  EXPECT_EQ(pts[2].n_samples, 100000u);
  report::write_text(dir / "bad.csv", "0, 1, 2\n");
  EXPECT_ANY_THROW((void)read_sweep_file(dir / "bad.csv"));
}

TEST(Run, DiagnosticsStage) {
  auto c = small_run("run_diag");
  c.diagnostics.enabled = true;
  c.diagnostics.n_fft = 4096;
  c.diagnostics.n_avg = 16;
  c.diagnostics.bootstrap.block_len = 2000;
  c.diagnostics.bootstrap.resamples = 50;
  c.diagnostics.max_lag = 32;
  c.diagnostics.husimi_gate = false;
  const auto r = run_pipeline(c);
  ASSERT_TRUE(r.diagnostics);
  EXPECT_TRUE(r.diagnostics->psd_on);
  EXPECT_TRUE(r.diagnostics->qcnr_x);
  EXPECT_TRUE(r.diagnostics->autocorr_x);
  EXPECT_TRUE(r.diagnostics->husimi);
  // About 2.1e6 extracted bits: two battery sequences.
  ASSERT_TRUE(r.diagnostics->battery);
  EXPECT_EQ(r.diagnostics->battery->sequences, 2u);
  EXPECT_TRUE(std::filesystem::exists(c.output_dir / "diagnostics.txt"));
  EXPECT_TRUE(std::filesystem::exists(c.output_dir / "psd.csv"));
}
