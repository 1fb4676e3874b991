// One line per acceptance criterion; exit status is nonzero if any fails.
// Tolerances and sizes are fixed here and must not be tuned to force a pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "qrng/app/config.hpp"
#include "qrng/app/run.hpp"
#include "qrng/bitstream.hpp"
#include "qrng/calibration.hpp"
#include "qrng/certify.hpp"
#include "qrng/diagnostics/autocorr.hpp"
#include "qrng/diagnostics/battery.hpp"
#include "qrng/diagnostics/husimi.hpp"
#include "qrng/diagnostics/psd.hpp"
#include "qrng/digest.hpp"
#include "qrng/extracted_file.hpp"
#include "qrng/parallel_extractor.hpp"
#include "qrng/pipeline.hpp"
#include "qrng/source.hpp"
#include "qrng/toeplitz.hpp"

using namespace qrng;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr double kHminTol = 1e-3;
constexpr double kHminLimitSeconds = 1e-3;
constexpr double kPenaltyTol = 1e-3;
constexpr double kLog2Tol = 1e-14;
constexpr double kCorrLimit = 8e-5;
constexpr double kQcnrTol = 0.15;
constexpr double kQcnrLimitSeconds = 60.0;
constexpr double kExtractorLimitSeconds = 120.0;
constexpr double kHusimiAlpha = 1e-6;
constexpr std::size_t kHusimiRounds = 10'000'000;
constexpr double kTauRelTol = 0.05;
constexpr std::size_t kTauSamples = 10'000'000;
constexpr std::size_t kBatteryBits = 100'000'000;
constexpr double kBatteryAlpha = 0.01;
constexpr double kCpTol = 1e-9;
constexpr int kCoverageMin = 93;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& fn) {
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  failures += o.pass ? 0 : 1;
  std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str());
  std::fflush(stdout);
}

std::string f(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

// Materialized Toeplitz matrix times each frame, over GF(2).
BitStream dense_extract(const BitStream& in, const extractor::ToeplitzConfig& cfg, const BitStream& seed) {
  std::vector<std::uint8_t> t(cfg.j * cfg.k_in);
  for (std::size_t r = 0; r < cfg.j; ++r)
    for (std::size_t c = 0; c < cfg.k_in; ++c) t[r * cfg.k_in + c] = seed.get(r + cfg.k_in - 1 - c);
  BitStream out;
  for (std::size_t fr = 0; fr < in.size() / cfg.k_in; ++fr) {
    std::vector<std::uint8_t> x(cfg.k_in);
    for (std::size_t c = 0; c < cfg.k_in; ++c) x[c] = in.get(fr * cfg.k_in + c);
    for (std::size_t r = 0; r < cfg.j; ++r) {
      std::uint8_t acc = 0;
      const std::uint8_t* row = &t[r * cfg.k_in];
      for (std::size_t c = 0; c < cfg.k_in; ++c) acc ^= row[c] & x[c];
      out.push_back(acc != 0);
    }
  }
  return out;
}

BitStream random_bits(std::size_t n, std::mt19937_64& g) {
  BitStream b(n);
  for (auto& w : b.words()) w = g();
  b.truncate(n);
  return b;
}

std::size_t mismatches(const BitStream& a, const BitStream& b) {
  if (a.size() != b.size()) return std::max(a.size(), b.size());
  return (a ^ b).popcount();
}

Outcome c1() {
  const auto t0 = Clock::now();
  const double h = certify::hmin_per_round(0.0300, 0.0319);
  const double dt = seconds_since(t0);
  const double block = 120 * h;
  return {std::abs(h - 12.681) <= kHminTol && block >= 1521.0 && dt < kHminLimitSeconds,
          f("h_min = %.6f bit/round, H_min(120) = %.3f bit, %.3g s", h, block, dt)};
}

Outcome c2() {
  const auto r = certify::net_rate(1272, 120, certify::Rational(3'200'000'000ULL));
  const auto s = certify::to_decimal(r);
  return {r == certify::Rational(33'920'000'000ULL), "r_net = " + s + " bit/s"};
}

Outcome c3() {
  const double pen = calibration::inflation_penalty(0.616, 0.647);
  bool ok = std::abs(pen - 0.336) <= kPenaltyTol;
  double worst = 0;
  for (double xi : {0.1, 0.5, 1.0}) {
    const double s2 = (1 + xi) / 2;
    worst = std::max(worst, std::abs(calibration::inflation_penalty(s2, s2) - std::log2(1 + xi)));
  }
  ok = ok && worst <= kLog2Tol;
  const double corr = calibration::correlation_penalty(1e-4);
  ok = ok && corr < kCorrLimit;
  return {ok, f("penalty = %.6f bit, max |sym - log2(1+xi)| = %.3g, dh_corr(1e-4) = %.3g bit", pen, worst, corr)};
}

Outcome c4() {
  const auto t0 = Clock::now();
  const source::SourceModel m;
  const std::size_t n_fft = 1U << 18, n_avg = 16;
  const auto on = source::simulate(m, n_fft * n_avg, 21);
  auto off_model = m;
  off_model.p_lo = 0.0;
  const auto off = source::simulate(off_model, n_fft * n_avg, 22);
  const auto a = diagnostics::psd(on, m.code_step_x(), m.code_step_p(), m.f_s, n_fft, n_avg);
  const auto b = diagnostics::psd(off, m.code_step_x(), m.code_step_p(), m.f_s, n_fft, n_avg);
  const double qx = diagnostics::qcnr(a.x, b.x, 185e6, 1600e6).db;
  const double qp = diagnostics::qcnr(a.p, b.p, 185e6, 1600e6).db;
  const double dt = seconds_since(t0);
  return {std::abs(qx - 7.52) <= kQcnrTol && std::abs(qp - 6.52) <= kQcnrTol && dt < kQcnrLimitSeconds,
          f("QCNR_X = %.3f dB, QCNR_P = %.3f dB, %.1f s", qx, qp, dt)};
}

Outcome c5() {
  const auto t0 = Clock::now();
  std::mt19937_64 g(0xacce55);
  std::size_t bad = 0, bits = 0;
  extractor::ToeplitzConfig small;
  small.j = 64;
  small.k_in = 128;
  small.b = 16;
  small.n_s = small.n_b = 4;
  for (int i = 0; i < 1000; ++i) {
    const auto seed = random_bits(small.seed_bits(), g);
    const auto in = random_bits((1 + g() % 12) * small.k_in, g);
    const auto out = extractor::pipeline_run(in, small, seed).output;
    bad += mismatches(out, dense_extract(in, small, seed));
    bits += out.size();
  }
  const extractor::ToeplitzConfig full;
  for (int i = 0; i < 10; ++i) {
    const auto seed = random_bits(full.seed_bits(), g);
    const auto in = random_bits((1 + i % 3) * full.n_b * full.k_in / 2, g);
    const auto out = extractor::pipeline_run(in, full, seed).output;
    bad += mismatches(out, dense_extract(in, full, seed));
    bits += out.size();
  }
  const double dt = seconds_since(t0);
  return {bad == 0 && dt < kExtractorLimitSeconds,
          f("%zu mismatched of %zu bits over 1010 cases, %.1f s", bad, bits, dt)};
}

Outcome c6() {
  const extractor::ToeplitzConfig cfg;
  const auto seed = extractor::make_seed(cfg.seed_bits(), app::RunConfig{}.extractor.seed_key);
  const auto blk = source::simulate(source::SourceModel{}, 120 * 200 + 50, 5);
  const auto in = rounds_to_bits(blk);
  const auto ref = extractor::ParallelExtractor(cfg, seed, 1).extract(in);
  const auto used = in.size() / cfg.k_in * cfg.k_in;
  const bool ratio = certify::Rational(ref.size()) / certify::Rational(used) == certify::Rational(1272, 2880);
  bool same = true;
  for (unsigned w : {4U, 8U}) same = same && extractor::ParallelExtractor(cfg, seed, w).extract(in) == ref;

  auto c = app::reference_defaults();
  c.source.rounds = 200'000;
  c.calibration.sweep_rounds = 50'000;
  c.diagnostics.enabled = false;
  const auto dir = std::filesystem::current_path() / "acceptance_c6";
  std::filesystem::remove_all(dir);
  std::string digest[2];
  for (int run = 0; run < 2; ++run) {
    c.output_dir = dir / std::to_string(run);
    c.extractor.workers = run == 0 ? 1 : 8;
    const auto r = app::run_pipeline(c);
    if (r.exit_code != 0) return {false, "pipeline run failed: " + (r.messages.empty() ? "" : r.messages.back())};
    digest[run] = to_hex(sha256_file(c.output_dir / "extracted.qrngext"));
  }
  const bool identical = digest[0] == digest[1];
  return {ratio && same && identical,
          f("ratio %s, workers 1/4/8 %s, repeated runs %s", ratio ? "= 1272/2880" : "wrong",
            same ? "identical" : "differ", identical ? "byte-identical" : "differ")};
}

Outcome c7() {
  auto c = app::reference_defaults();
  c.source.rounds = 200'000;
  c.calibration.sweep_rounds = 50'000;
  c.diagnostics.enabled = false;
  const app::RunOptions o{.stages = app::kCalibrate | app::kCertify | app::kExtract, .write_files = false};
  const auto ok = app::run_pipeline(c, o);
  c.certify.ell = 1600;
  const auto no = app::run_pipeline(c, o);
  const auto bound = ok.certificate ? ok.certificate->ell_bound : 0;
  return {ok.exit_code == 0 && ok.extracted && bound == 1393 && no.exit_code == 2 && !no.extracted,
          f("ell=1272 exit %d (bound %llu), ell=1600 exit %d", ok.exit_code,
            static_cast<unsigned long long>(bound), no.exit_code)};
}

Outcome c8() {
  auto c = app::RunConfig{};
  c.source.rounds = kHusimiRounds;
  c.diagnostics.enabled = false;
  const auto r = app::run_pipeline(c, {.stages = app::kCalibrate, .write_files = false});
  if (r.exit_code != 0 || !r.calibration || !r.block) {
    return {false, "calibration failed: " + (r.messages.empty() ? "" : r.messages.back())};
  }
  const auto s = calibration::decorrelate(*r.block, *r.calibration);
  const double dx = r.calibration->vac_x->deltap, dp = r.calibration->vac_p->deltap;
  const auto pos = diagnostics::admissibility_check(diagnostics::husimi(s.x, s.p, dx, dp), dx, dp, kHusimiAlpha);
  const auto neg = diagnostics::admissibility_check(diagnostics::husimi(s.x, s.p, dx / 2, dp / 2), dx / 2,
                                                    dp / 2, kHusimiAlpha);
  return {pos.pass && !neg.pass,
          f("%zu rounds, d'=(%.5f, %.5f): max %.4g vs threshold %.4g (%s); halved: max %.4g vs %.4g (%s)",
            s.x.size(), dx, dp, pos.max_frequency, pos.threshold, pos.pass ? "pass" : "fail", neg.max_frequency,
            neg.threshold, neg.pass ? "pass" : "fail")};
}

Outcome c9() {
  std::mt19937_64 g(909);
  std::normal_distribution<double> d;
  std::vector<double> v(kTauSamples);
  for (auto& x : v) x = d(g);
  diagnostics::AutocorrOptions o;
  const auto white = diagnostics::autocorr_tau(v, o);
  const bool w_ok = white.ci_lo <= 1.0 && 1.0 <= white.ci_hi;

  const double phi = 0.3, expect = (1 + phi) / (1 - phi);
  double s = 0;
  for (auto& x : v) x = s = phi * s + d(g);
  const auto ar = diagnostics::autocorr_tau(v, o);
  const bool ar_ok = std::abs(ar.tau_int - expect) <= kTauRelTol * expect;

  const source::SourceModel m;
  const auto blk = source::simulate(m, 1U << 22, 21);
  const auto filt = diagnostics::autocorr_tau(source::to_volts(blk.codes_x, m.code_step_x()), o);
  const bool f_ok = filt.tau_int >= 2.0 && filt.tau_int <= 3.5;
  return {w_ok && ar_ok && f_ok,
          f("white %.4f [%.4f, %.4f]; AR(1) %.4f vs %.4f; filtered stream %.4f (range [2, 3.5])", white.tau_int,
            white.ci_lo, white.ci_hi, ar.tau_int, expect, filt.tau_int)};
}

Outcome c10() {
  const extractor::ToeplitzConfig cfg;
  const std::size_t frames = (kBatteryBits + cfg.j - 1) / cfg.j;
  const std::size_t rounds = frames * cfg.rounds_per_invocation() + frames;
  const auto blk = source::simulate(source::SourceModel{}, rounds, app::RunConfig{}.source.seed);
  const auto seed = extractor::make_seed(cfg.seed_bits(), app::RunConfig{}.extractor.seed_key);
  auto bits = extractor::ParallelExtractor(cfg, seed, 1).extract(rounds_to_bits(blk));
  if (bits.size() < kBatteryBits) return {false, f("only %zu extracted bits", bits.size())};
  bits.truncate(kBatteryBits);
  const auto rep = diagnostics::test_battery(bits);
  bool all = true;
  for (const auto& t : rep.tests) all = all && t.p > kBatteryAlpha;
  const bool ks = rep.ks_p > kBatteryAlpha;

  // Export: headerless, whole bytes, identical to the packed payload.
  const auto path = std::filesystem::current_path() / "acceptance_c10.bin";
  extractor::export_raw(path, bits);
  std::ifstream in(path, std::ios::binary);
  const std::vector<std::uint8_t> raw{std::istreambuf_iterator<char>(in), {}};
  const bool fmt = raw.size() == kBatteryBits / 8 && raw == bits.to_bytes();
  std::filesystem::remove(path);
  return {all && ks && fmt, f("%zu sequences, min p = %.4g, KS p = %.4g, export %s", rep.sequences, rep.min_p(),
                              rep.ks_p, fmt ? "ok" : "mismatch")};
}

Outcome c11() {
  const std::size_t n = 1'000'000;
  const auto iv = certify::clopper_pearson(0, n);
  const double analytic = 1.0 - std::pow(0.025, 1.0 / static_cast<double>(n));
  const double err = std::abs(iv.hi - analytic);

  // Inject clipped rounds into a real block at a known rate.
  const double rate = 1e-3;
  std::mt19937_64 g(1111);
  std::uniform_int_distribution<int> code(-2000, 2000);
  std::vector<std::int16_t> base_x(n), base_p(n);
  for (std::size_t i = 0; i < n; ++i) {
    base_x[i] = static_cast<std::int16_t>(code(g));
    base_p[i] = static_cast<std::int16_t>(code(g));
  }
  std::geometric_distribution<std::size_t> gap(rate);
  std::bernoulli_distribution which;
  int inside = 0;
  for (int t = 0; t < 100; ++t) {
    auto x = base_x, p = base_p;
    for (std::size_t i = gap(g); i < n; i += 1 + gap(g)) (which(g) ? x : p)[i] = 2047;
    const auto blk = source::SampleBlock::from_codes(std::move(x), std::move(p), source::Origin::synthetic, 1);
    const auto e = certify::estimate_clip_fraction(blk);
    inside += e.ci_lo <= rate && rate <= e.ci_hi;
  }
  return {err <= kCpTol && inside >= kCoverageMin,
          f("CP upper(0/1e6) = %.10g, |diff| = %.3g; coverage %d/100", iv.hi, err, inside)};
}

}  // namespace

int main() {
  report(1, "golden bound arithmetic", c1);
  report(2, "net rate identity", c2);
  report(3, "penalty identities", c3);
  report(4, "QCNR reproduction", c4);
  report(5, "extractor oracle equivalence", c5);
  report(6, "extractor determinism and ratio", c6);
  report(7, "admissibility guardrail", c7);
  report(8, "Husimi admissibility", c8);
  report(9, "tau_int property suite", c9);
  report(10, "uniformity", c10);
  report(11, "clipping statistics", c11);
  std::printf("%d/11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
