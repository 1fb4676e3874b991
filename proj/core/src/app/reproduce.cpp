#include "qrng/app/reproduce.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

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
#include "qrng/error.hpp"
#include "qrng/parallel_extractor.hpp"
#include "qrng/pipeline.hpp"
#include "qrng/source.hpp"
#include "qrng/toeplitz.hpp"

namespace qrng::app {

const char* const kGoldenSeedDigest = "87b62a1401e320e697a5f862f115513794de58ff3892273f2a49e24623d35f09";
const char* const kGoldenOutputDigest = "7b37148d36292b887230f8bcfe64358ba13405305b0ed4389f91321b1dd206d9";

namespace {

constexpr std::uint64_t kGoldenInputKey = 0xfeedULL;
constexpr std::size_t kGoldenFrames = 40;

std::string fmt(double v, int prec = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

struct Table {
  std::vector<GoldenCheck> rows;

  void near(const std::string& name, double measured, double expected, double tol) {
    rows.push_back({name, fmt(measured, 8), fmt(expected, 8), "+- " + fmt(tol, 3),
                    std::abs(measured - expected) <= tol, false, {}});
  }
  void below(const std::string& name, double measured, double limit) {
    rows.push_back({name, fmt(measured, 6), "< " + fmt(limit, 6), "-", measured < limit, false, {}});
  }
  void at_least(const std::string& name, double measured, double limit) {
    rows.push_back({name, fmt(measured, 8), ">= " + fmt(limit, 8), "-", measured >= limit, false, {}});
  }
  void within(const std::string& name, double measured, double lo, double hi) {
    rows.push_back({name, fmt(measured, 6), "[" + fmt(lo) + ", " + fmt(hi) + "]", "-",
                    measured >= lo && measured <= hi, false, {}});
  }
  void exact(const std::string& name, const std::string& measured, const std::string& expected,
             bool uses_seed = false) {
    rows.push_back({name, measured, expected, "exact", measured == expected, uses_seed, {}});
  }

  /// Runs `fn`; a thrown error becomes a failed row named `name`.
  void guarded(const std::string& name, const std::function<void()>& fn, bool uses_seed = false) {
    const std::size_t before = rows.size();
    try {
      fn();
    } catch (const std::exception& e) {
      rows.resize(before);
      rows.push_back({name, "error", "-", "-", false, uses_seed, e.what()});
    }
    if (uses_seed) {
      for (std::size_t i = before; i < rows.size(); ++i) rows[i].uses_seed = true;
    }
  }
};

source::SourceModel reference_model() { return source::SourceModel{}; }

calibration::CalibrationFit exact_fit(const source::SourceModel& m) {
  calibration::CalibrationFit fit;
  fit.x.m = m.m_x;
  fit.x.c = m.c_x;
  fit.x.eta = m.eta_x;
  fit.p.m = m.m_p;
  fit.p.c = m.c_p;
  fit.p.eta = m.eta_p;
  return calibration::vacuum_units(fit, m.p_lo, m.v_pp, m.enob_x, m.enob_p);
}

void source_checks(Table& t) {
  t.guarded("source.variance_x", [&] {
    auto m = reference_model();
    m.filter_taps = 0;
    const std::size_t n = 1'000'000;
    const auto blk = source::simulate(m, n, 11);
    const auto pt = measure_point(blk, m.p_lo, m.code_step_x(), m.code_step_p());
    const double expected = m.variance_x();
    t.near("source.variance_x [V2]", pt.var_x, expected, 3.0 * expected * std::sqrt(2.0 / (n - 1.0)));
  });
}

void calibration_checks(Table& t) {
  t.guarded("calibration.exact_line", [&] {
    const std::vector<double> pw{0.0, 2e-3, 4e-3, 6e-3, 8e-3};
    std::vector<double> var;
    for (double p : pw) var.push_back(2.41e-1 * p + 4.35e-4);
    const std::vector<std::size_t> n(pw.size(), 100'000);
    const auto f = calibration::fit_channel(pw, var, n, calibration::FitModel::linear);
    t.near("calibration.exact_line.m_x [V2/W]", f.m, 2.41e-1, 1e-12);
    t.near("calibration.exact_line.c_x [V2]", f.c, 4.35e-4, 1e-14);
  });
  t.near("calibration.inflation_penalty(0.616, 0.647) [bit]", calibration::inflation_penalty(0.616, 0.647), 0.336,
         1e-3);
  t.guarded("calibration.decorrelation", [&] {
    auto m = reference_model();
    m.rho_xp = 0.012;
    const auto blk = source::simulate(m, 400'000, 12);
    const auto s = calibration::decorrelate(blk, exact_fit(m));
    t.below("calibration.decorrelation |rho_out|", std::abs(s.fit.decorrelation->rho_out), 1e-4);
  });
  t.below("calibration.dh_corr(1e-4) [bit]", calibration::correlation_penalty(1e-4), 8e-5);
  t.guarded("calibration.enob_11_delta_h", [&] {
    const auto m = reference_model();
    auto h = [&](double ex, double ep) {
      const double dx = calibration::conservative_resolution(m.m_x, m.c_x, m.eta_x, m.p_lo, m.v_pp, ex);
      const double dp = calibration::conservative_resolution(m.m_p, m.c_p, m.eta_p, m.p_lo, m.v_pp, ep);
      return certify::hmin_per_round(dx, dp);
    };
    t.near("calibration.enob_11_delta_h [bit]", h(11.0, 11.0) - h(m.enob_x, m.enob_p), 1.5, 1e-9);
  });
}

void certify_checks(Table& t) {
  const double h1 = certify::hmin_per_round(0.0300, 0.0319);
  t.near("certify.h_min_1(0.0300, 0.0319) [bit]", h1, 12.681, 1e-3);
  t.below("certify.noclip_shift(f_clip=2.3e-6) [bit]",
          h1 - certify::hmin_no_clip(0.0300, 0.0319, 2.3e-6) + 0.0, 4e-6);
  t.at_least("certify.h_min_block(120 rounds) [bit]", 120.0 * h1, 1521.0);
  const auto ell = certify::extraction_length(h1, 120, certify::pow2(-64), certify::Rational(1));
  t.exact("certify.ell_bound(eps_PA=2^-64) [bit]", std::to_string(ell), "1393");
  t.exact("certify.r_net(1272, 120, 3.2e9) [bit/s]",
          certify::to_decimal(certify::net_rate(1272, 120, certify::Rational(3'200'000'000ULL))), "33920000000");

  t.guarded("certify.defaults", [&] {
    auto cfg = reference_defaults();
    cfg.source.rounds = 200'000;
    cfg.calibration.sweep_rounds = 50'000;
    RunOptions o;
    o.stages = kCertify;
    o.write_files = false;
    const auto r = run_pipeline(cfg, o);
    if (!r.certificate) throw Error(ErrorKind::validation, r.messages.empty() ? "no certificate" : r.messages.back());
    const auto& c = *r.certificate;
    t.near("certify.defaults.h_min_1 [bit]", c.h_min_1, 12.681, 1e-3);
    t.at_least("certify.defaults.h_min_block [bit]", c.h_min_block, 1521.0);
    t.exact("certify.defaults.ell [bit]", std::to_string(c.ell), "1272");
    t.exact("certify.defaults.admissible", c.admissible() ? "true" : "false", "true");
    t.exact("certify.defaults.r_net [bit/s]", certify::to_decimal(c.r_net), "33920000000");
  });
}

void extractor_checks(Table& t, const ReproduceOptions& opts) {
  const extractor::ToeplitzConfig cfg;
  const auto input = extractor::make_seed(kGoldenFrames * cfg.k_in, kGoldenInputKey);
  auto load_seed = [&] {
    return opts.seed_file ? extractor::read_seed_file(*opts.seed_file, cfg)
                          : extractor::make_seed(cfg.seed_bits(), RunConfig{}.extractor.seed_key);
  };
  t.guarded("extractor.seed_digest", [&] {
    t.exact("extractor.seed_digest", to_hex(sha256(load_seed().to_bytes())), kGoldenSeedDigest, true);
  }, true);
  t.guarded("extractor.output", [&] {
    const auto seed = load_seed();
    const auto out = extractor::ParallelExtractor(cfg, seed, opts.workers).extract(input);
    t.exact("extractor.output_digest", to_hex(sha256(out.to_bytes())), kGoldenOutputDigest, true);
    const certify::Rational ratio = certify::Rational(out.size()) / certify::Rational(input.size());
    t.exact("extractor.ratio", certify::to_decimal(ratio, 9),
            certify::to_decimal(certify::Rational(1272) / certify::Rational(2880), 9), true);
  }, true);
  t.guarded("extractor.pipeline", [&] {
    const auto seed = load_seed();
    const auto run = extractor::pipeline_run(input, cfg, seed);
    bool acc = !run.trace.invocations.empty(), outc = acc;
    for (const auto& inv : run.trace.invocations) {
      acc = acc && inv.acc_cycles == 120;
      outc = outc && inv.out_cycles == 53;
    }
    t.exact("extractor.pipeline.acc_cycles_per_invocation", acc ? "120" : "mismatch", "120", true);
    t.exact("extractor.pipeline.out_cycles_per_invocation", outc ? "53" : "mismatch", "53", true);
    t.exact("extractor.pipeline_equals_reference",
            run.output == extractor::extract_reference(input, cfg, seed) ? "equal" : "differ", "equal", true);
  }, true);
}

void diagnostics_checks(Table& t, const ReproduceOptions& opts) {
  const auto m = reference_model();
  const std::size_t n_fft = 1U << 18, n_avg = 16;
  std::optional<source::SampleBlock> on;
  t.guarded("diagnostics.qcnr", [&] {
    on = source::simulate(m, n_fft * n_avg, 21, opts.workers);
    auto off_model = m;
    off_model.p_lo = 0.0;
    const auto off = source::simulate(off_model, n_fft * n_avg, 22, opts.workers);
    const auto a = diagnostics::psd(*on, m.code_step_x(), m.code_step_p(), m.f_s, n_fft, n_avg);
    const auto b = diagnostics::psd(off, m.code_step_x(), m.code_step_p(), m.f_s, n_fft, n_avg);
    t.near("diagnostics.qcnr_x [dB]", diagnostics::qcnr(a.x, b.x, 185e6, 1600e6).db, 7.52, 0.1);
    t.near("diagnostics.qcnr_p [dB]", diagnostics::qcnr(a.p, b.p, 185e6, 1600e6).db, 6.52, 0.1);
  });
  t.guarded("diagnostics.tau_int", [&] {
    if (!on) on = source::simulate(m, n_fft * n_avg, 21, opts.workers);
    const auto v = source::to_volts(on->codes_x, m.code_step_x());
    diagnostics::AutocorrOptions ao;
    ao.bootstrap.resamples = 200;
    const auto r = diagnostics::autocorr_tau(v, ao);
    t.within("diagnostics.tau_int (filtered stream)", r.tau_int, 2.0, 3.5);
  });
  t.guarded("diagnostics.husimi", [&] {
    if (!on) on = source::simulate(m, n_fft * n_avg, 21, opts.workers);
    const auto fit = exact_fit(m);
    const auto s = calibration::decorrelate(*on, fit);
    const double dx = fit.vac_x->deltap, dp = fit.vac_p->deltap;
    const auto h = diagnostics::husimi(s.x, s.p, dx, dp);
    const auto a = diagnostics::admissibility_check(h, dx, dp, 1e-6);
    t.below("diagnostics.husimi.max_frequency - threshold", a.max_frequency - a.threshold, 0.0);
  });
  t.guarded("diagnostics.battery", [&] {
    const extractor::ToeplitzConfig cfg;
    const std::size_t frames = (opts.battery_bits + cfg.j - 1) / cfg.j;
    const std::size_t rounds = frames * cfg.rounds_per_invocation() + frames;  // headroom for clipped rounds
    const auto blk = source::simulate(m, rounds, RunConfig{}.source.seed, opts.workers);
    const auto seed = extractor::make_seed(cfg.seed_bits(), RunConfig{}.extractor.seed_key);
    auto bits = extractor::ParallelExtractor(cfg, seed, opts.workers).extract(rounds_to_bits(blk, true));
    bits.truncate(std::min(bits.size(), opts.battery_bits));
    const auto rep = diagnostics::test_battery(bits);
    t.at_least("diagnostics.battery.min_p", rep.min_p(), 0.01);
    t.at_least("diagnostics.battery.ks_p", rep.ks_p, 0.01);
  });
}

}  // namespace

std::vector<GoldenCheck> reproduce_paper(const ReproduceOptions& opts) {
  Table t;
  source_checks(t);
  calibration_checks(t);
  certify_checks(t);
  extractor_checks(t, opts);
  diagnostics_checks(t, opts);
  return std::move(t.rows);
}

std::string format_table(const std::vector<GoldenCheck>& rows) {
  std::size_t w = 4;
  for (const auto& r : rows) w = std::max(w, r.name.size());
  std::ostringstream os;
  auto pad = [](const std::string& s, std::size_t n) { return s + std::string(n > s.size() ? n - s.size() : 0, ' '); };
  os << pad("check", w) << "  " << pad("measured", 20) << "  " << pad("expected", 22) << "  " << pad("tolerance", 12)
     << "  result\n";
  std::size_t passed = 0;
  for (const auto& r : rows) {
    os << pad(r.name, w) << "  " << pad(r.measured, 20) << "  " << pad(r.expected, 22) << "  "
       << pad(r.tolerance, 12) << "  " << (r.pass ? "PASS" : "FAIL");
    if (!r.note.empty()) os << "  (" << r.note << ")";
    os << '\n';
    passed += r.pass ? 1 : 0;
  }
  os << passed << "/" << rows.size() << " checks passed\n";
  return os.str();
}

}  // namespace qrng::app
