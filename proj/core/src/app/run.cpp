#include "qrng/app/run.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "qrng/digest.hpp"
#include "qrng/error.hpp"
#include "qrng/extracted_file.hpp"
#include "qrng/parallel_extractor.hpp"
#include "qrng/pipeline.hpp"
#include "qrng/report.hpp"
#include "qrng/toeplitz.hpp"

namespace qrng::app {

namespace {

using report::format_number;

void note(const RunOptions& o, const std::string& line) {
  if (o.log) *o.log << line << '\n';
}

std::uint64_t sample_rate(const RunConfig& cfg, const source::SampleBlock& block) {
  if (block.f_s_hz > 0) return block.f_s_hz;
  return static_cast<std::uint64_t>(std::llround(cfg.source.model.f_s));
}

source::SampleBlock acquire(const RunConfig& cfg) {
  if (cfg.source.input) {
    if (!std::filesystem::exists(*cfg.source.input)) {
      throw IoError("input file not found: " + cfg.source.input->string());
    }
    return source::ingest(*cfg.source.input, cfg.source.input_format,
                          static_cast<std::uint64_t>(std::llround(cfg.source.input_f_s)));
  }
  return source::simulate(cfg.source.model, cfg.source.rounds, cfg.source.seed, cfg.source.workers);
}

std::vector<calibration::PowerSweepPoint> synthetic_sweep(const RunConfig& cfg) {
  std::vector<calibration::PowerSweepPoint> pts;
  const auto& m = cfg.source.model;
  for (std::size_t i = 0; i < cfg.calibration.sweep_powers.size(); ++i) {
    auto model = m;
    model.p_lo = cfg.calibration.sweep_powers[i];
    const auto blk = source::simulate(model, cfg.calibration.sweep_rounds, cfg.source.seed + 1000 + i,
                                      cfg.source.workers);
    pts.push_back(measure_point(blk, model.p_lo, m.code_step_x(), m.code_step_p()));
  }
  return pts;
}

std::string uncertainty_lines(const calibration::Uncertainty& u) {
  report::KvReport r("qrng resolution budget v1");
  r.add("deltap_x", u.deltap_x, "vac", u.ci_deltap_x);
  r.add("deltap_p", u.deltap_p, "vac", u.ci_deltap_p);
  r.add("h_min_1", u.h_min, "bit", u.ci_h_min);
  return r.str();
}

void write_csv_psd(const std::filesystem::path& path, const diagnostics::ChannelPsd& c) {
  std::ostringstream os;
  os << "freq_hz,x_db,p_db\n";
  for (std::size_t i = 0; i < c.x.freqs.size(); ++i) {
    os << format_number(c.x.freqs[i]) << ',' << format_number(c.x.psd_db[i]) << ','
       << format_number(c.p.psd_db[i]) << '\n';
  }
  report::write_text(path, os.str());
}

void write_csv_acf(const std::filesystem::path& path, const diagnostics::AutocorrReport& x,
                   const diagnostics::AutocorrReport& p) {
  std::ostringstream os;
  os << "lag,rho_x,rho_p\n";
  const std::size_t n = std::min(x.rho.size(), p.rho.size());
  for (std::size_t k = 0; k < n; ++k) {
    os << k << ',' << format_number(x.rho[k]) << ',' << format_number(p.rho[k]) << '\n';
  }
  report::write_text(path, os.str());
}

std::vector<double> unclipped_volts(std::span<const std::int16_t> codes, std::span<const std::uint8_t> mask,
                                    double step) {
  std::vector<double> v;
  v.reserve(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (!mask[i]) v.push_back(codes[i] * step);
  }
  return v;
}

}  // namespace

std::vector<calibration::PowerSweepPoint> read_sweep_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("sweep file not found: " + path.string());
  std::istringstream in(report::read_text(path));
  std::vector<calibration::PowerSweepPoint> pts;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    calibration::PowerSweepPoint p;
    if (!(ls >> p.p_lo >> p.var_x >> p.var_p >> p.n_samples)) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": expected p_lo_W, var_x_V2, var_p_V2, n_samples");
    }
    pts.push_back(p);
  }
  return pts;
}

calibration::PowerSweepPoint measure_point(const source::SampleBlock& block, double p_lo, double step_x,
                                           double step_p) {
  const auto x = unclipped_volts(block.codes_x, block.clip_mask, step_x);
  const auto p = unclipped_volts(block.codes_p, block.clip_mask, step_p);
  if (x.size() < 2) throw ValidationError("sweep point needs at least two unclipped rounds");
  auto var = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double a : v) mean += a;
    mean /= static_cast<double>(v.size());
    double s = 0.0;
    for (double a : v) s += (a - mean) * (a - mean);
    return s / static_cast<double>(v.size() - 1);
  };
  return {p_lo, var(x), var(p), x.size()};
}

std::string diagnostics_report(const DiagnosticsBundle& d) {
  report::KvReport r("qrng diagnostics v1");
  if (d.psd_on) {
    r.add("psd.n_fft", static_cast<double>(d.psd_on->x.n_fft));
    r.add("psd.n_avg", static_cast<double>(d.psd_on->x.n_avg));
    r.add("psd.delta_f", d.psd_on->x.delta_f, "Hz");
    r.add("psd.enbw", d.psd_on->x.enbw, "Hz");
    r.add("psd.ci_db", d.psd_on->x.ci_db, "dB");
    r.add("psd.spikes_x", static_cast<double>(d.spikes_x.size()));
    r.add("psd.spikes_p", static_cast<double>(d.spikes_p.size()));
  }
  if (d.qcnr_x) r.add("qcnr_x", d.qcnr_x->db, "dB", d.qcnr_x->uncertainty_db);
  if (d.qcnr_p) r.add("qcnr_p", d.qcnr_p->db, "dB", d.qcnr_p->uncertainty_db);
  auto ac = [&r](const char* ch, const diagnostics::AutocorrReport& a) {
    const std::string p = std::string("autocorr_") + ch + ".";
    r.add(p + "tau_int", a.tau_int);
    r.add(p + "tau_int_ci_lo", a.ci_lo);
    r.add(p + "tau_int_ci_hi", a.ci_hi);
    r.add(p + "k_star", static_cast<double>(a.k_star));
    r.add(p + "k_star_found", a.k_star_found ? "true" : "false");
    r.add(p + "ljung_box_q", a.ljung_box.q);
    r.add(p + "ljung_box_p", a.ljung_box.p);
    r.add(p + "ljung_box_lags", static_cast<double>(a.ljung_box.lags));
    r.add(p + "bootstrap_resamples", static_cast<double>(a.bootstrap.resamples));
    r.add(p + "bootstrap_block", static_cast<double>(a.bootstrap.block_len));
  };
  if (d.autocorr_x) ac("x", *d.autocorr_x);
  if (d.autocorr_p) ac("p", *d.autocorr_p);
  if (d.husimi) {
    r.add("husimi.max_frequency", d.husimi->max_frequency);
    r.add("husimi.bound", d.husimi->bound);
    r.add("husimi.slack", d.husimi->slack);
    r.add("husimi.threshold", d.husimi->threshold);
    r.add("husimi.bins", d.husimi->n_bins);
    r.add("husimi.alpha", d.husimi->alpha);
    r.add("husimi.pass", d.husimi->pass ? "true" : "false");
  }
  if (d.battery) {
    r.add("battery.sequences", static_cast<double>(d.battery->sequences));
    r.add("battery.sequence_bits", static_cast<double>(d.battery->sequence_bits));
    for (const auto& t : d.battery->tests) r.add("battery." + t.name, t.p);
    r.add("battery.ks_p", d.battery->ks_p);
    r.add("battery.pass", d.battery->all_pass() ? "true" : "false");
  }
  for (const auto& s : d.skipped) r.comment("skipped: " + s);
  return r.str();
}

RunResult run_pipeline(const RunConfig& cfg, const RunOptions& opts) {
  RunResult res;
  const char* stage = "config";
  try {
    cfg.validate();
    const auto& model = cfg.source.model;
    const auto out = cfg.output_dir;
    auto emit = [&](const std::string& name, const std::string& text) {
      if (!opts.write_files) return;
      report::write_text(out / name, text);
      res.written.push_back(out / name);
    };
    if (opts.write_files) {
      std::error_code ec;
      std::filesystem::create_directories(out, ec);
      if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
    }
    if ((opts.stages & kExtract) && !cfg.extractor.seed_file) {
      res.messages.push_back("extract: no seed file given, using the built-in public seed");
    }
    if (cfg.extractor.seed_file && !std::filesystem::exists(*cfg.extractor.seed_file)) {
      throw IoError("seed file not found: " + cfg.extractor.seed_file->string());
    }

    stage = "acquire";
    note(opts, "acquire");
    res.block = acquire(cfg);
    const auto& block = *res.block;
    const std::uint64_t f_s = sample_rate(cfg, block);

    stage = "calibrate";
    note(opts, "calibrate");
    const auto sweep =
        cfg.calibration.sweep_file ? read_sweep_file(*cfg.calibration.sweep_file) : synthetic_sweep(cfg);
    auto fit = calibration::fit_power_sweep(sweep, cfg.calibration.model);
    const auto op = measure_point(block, model.p_lo, model.code_step_x(), model.code_step_p());
    fit = calibration::vacuum_units(std::move(fit), model.p_lo, model.v_pp, model.enob_x, model.enob_p,
                                    calibration::OperatingVariance{op.var_x, op.var_p});
    stage = "decorrelate";
    auto stream = calibration::decorrelate(block, fit);
    res.calibration = stream.fit;
    res.uncertainty = calibration::propagate_uncertainty(*res.calibration, cfg.calibration.p_lo_err,
                                                         cfg.calibration.vpp_err, cfg.calibration.enob_err);
    emit("calibration.txt", report::calibration_report(*res.calibration) + uncertainty_lines(*res.uncertainty));
    if (!(opts.stages & (kCertify | kExtract | kDiagnose))) return res;

    const auto tcfg = cfg.toeplitz();
    const bool override_dp = cfg.calibration.deltap_x.has_value();
    const double dx = override_dp ? *cfg.calibration.deltap_x : res.calibration->vac_x->deltap;
    const double dp = override_dp ? *cfg.calibration.deltap_p : res.calibration->vac_p->deltap;

    if (opts.stages & (kCertify | kExtract)) {
      stage = "certify";
      note(opts, "certify");
      certify::CertifyInputs in;
      in.deltap_x = dx;
      in.deltap_p = dp;
      in.deltap_override = override_dp;
      in.clip = certify::estimate_clip_fraction(block);
      in.inflation_penalty = res.calibration->inflation_penalty();
      in.rho_out = res.calibration->decorrelation->rho_out;
      in.rounds_per_invocation = tcfg.rounds_per_invocation();
      in.word_bits = tcfg.b;
      in.n_blocks = cfg.certify.n_blocks;
      in.ell = cfg.certify.ell;
      in.f_s = certify::Rational(f_s);
      in.mode = cfg.certify.mode;
      in.decimation = cfg.certify.decimation;
      in.eps_s_log2 = cfg.certify.eps_s_log2;
      in.eps_pa_log2 = cfg.certify.eps_pa_log2;
      in.beta_log2 = cfg.certify.beta_log2;
      res.certificate = certify::make_certificate(in);
      res.certificate_text = certify::serialize(*res.certificate);
      emit("certificate.txt", res.certificate_text);
      if (!res.certificate->admissible()) {
        res.exit_code = static_cast<int>(ErrorKind::admissibility);
        res.messages.push_back("certify: configured ell = " + std::to_string(cfg.certify.ell) +
                               " bit exceeds the certified bound " + std::to_string(res.certificate->ell_bound) +
                               " bit; refusing to extract");
        return res;
      }
      if (tcfg.j != cfg.certify.ell) {
        res.messages.push_back("certify: ell = " + std::to_string(cfg.certify.ell) + " is not a multiple of b; j = " +
                               std::to_string(tcfg.j));
      }
    }

    if (opts.stages & kExtract) {
      stage = "extract";
      note(opts, "extract");
      const BitStream seed = cfg.extractor.seed_file
                                 ? extractor::read_seed_file(*cfg.extractor.seed_file, tcfg, cfg.extractor.seed_compat)
                                 : extractor::make_seed(tcfg.seed_bits(), cfg.extractor.seed_key);
      extractor::check_seed(tcfg, seed);
      const auto input_block = cfg.certify.mode == certify::Mode::decimation
                                   ? block.decimate(cfg.certify.decimation)
                                   : block;
      BitStream output;
      if (cfg.extractor.emulate_pipeline) {
        output = extractor::pipeline_run(input_block, tcfg, seed).output;
      } else {
        const auto bits = rounds_to_bits(input_block, true);
        output = extractor::ParallelExtractor(tcfg, seed, cfg.extractor.workers).extract(bits);
      }
      if (output.empty()) throw ValidationError("fewer unclipped rounds than one extractor frame");
      extractor::ExtractedFile file;
      file.flags = extractor::kExtFlagCertified;
      file.cfg = tcfg;
      file.seed_digest = cfg.extractor.seed_file ? sha256_file(*cfg.extractor.seed_file) : sha256(seed.to_bytes());
      file.certificate = res.certificate_text;
      file.certificate_digest = sha256(std::string_view(res.certificate_text));
      file.payload = output;
      if (opts.write_files) {
        extractor::write_extracted(out / "extracted.qrngext", file);
        extractor::export_raw(out / "extracted.bin", output);
        res.written.push_back(out / "extracted.qrngext");
        res.written.push_back(out / "extracted.bin");
      }
      res.extracted = std::move(output);
    }

    if (opts.stages & kDiagnose) {
      stage = "diagnose";
      note(opts, "diagnose");
      const auto& dg = cfg.diagnostics;
      DiagnosticsBundle d;
      if (!dg.enabled) {
        d.skipped.emplace_back("diagnostics disabled");
      } else {
        const std::size_t n_avg = std::min(dg.n_avg, block.round_count() / dg.n_fft);
        if (n_avg == 0) {
          d.skipped.emplace_back("psd: fewer than n_fft rounds");
        } else {
          d.psd_on = diagnostics::psd(block, model.code_step_x(), model.code_step_p(), static_cast<double>(f_s),
                                      dg.n_fft, n_avg);
          d.spikes_x = diagnostics::find_spikes(d.psd_on->x);
          d.spikes_p = diagnostics::find_spikes(d.psd_on->p);
          if (block.origin == source::Origin::synthetic) {
            auto off_model = model;
            off_model.p_lo = 0.0;
            const auto off = source::simulate(off_model, dg.n_fft * n_avg, cfg.source.seed + 7, cfg.source.workers);
            const auto psd_off = diagnostics::psd(off, model.code_step_x(), model.code_step_p(),
                                                  static_cast<double>(f_s), dg.n_fft, n_avg);
            d.qcnr_x = diagnostics::qcnr(d.psd_on->x, psd_off.x, dg.qcnr_lo, dg.qcnr_hi);
            d.qcnr_p = diagnostics::qcnr(d.psd_on->p, psd_off.p, dg.qcnr_lo, dg.qcnr_hi);
          } else {
            d.skipped.emplace_back("qcnr: no LO-off reference for ingested data");
          }
        }
        diagnostics::AutocorrOptions ao;
        ao.bootstrap = dg.bootstrap;
        ao.max_lag = dg.max_lag;
        const auto vx = unclipped_volts(block.codes_x, block.clip_mask, model.code_step_x());
        const auto vp = unclipped_volts(block.codes_p, block.clip_mask, model.code_step_p());
        if (vx.size() < 10 * dg.bootstrap.block_len) {
          d.skipped.emplace_back("autocorr: fewer than 10 l_B unclipped rounds");
        } else {
          d.autocorr_x = diagnostics::autocorr_tau(vx, ao);
          d.autocorr_p = diagnostics::autocorr_tau(vp, ao);
        }
        diagnostics::HusimiOptions ho;
        ho.extent_sigma = dg.husimi_extent;
        const auto h = diagnostics::husimi(stream.x, stream.p, dx, dp, ho);
        d.husimi = diagnostics::admissibility_check(h, dx, dp, dg.husimi_alpha);
        if (dg.battery) {
          if (res.extracted && res.extracted->size() >= diagnostics::kBatterySequenceBits) {
            d.battery = diagnostics::test_battery(*res.extracted);
          } else {
            d.skipped.emplace_back("battery: fewer than 10^6 extracted bits");
          }
        }
      }
      emit("diagnostics.txt", diagnostics_report(d));
      if (opts.write_files && d.psd_on) {
        write_csv_psd(out / "psd.csv", *d.psd_on);
        res.written.push_back(out / "psd.csv");
      }
      if (opts.write_files && d.autocorr_x) {
        write_csv_acf(out / "acf.csv", *d.autocorr_x, *d.autocorr_p);
        res.written.push_back(out / "acf.csv");
      }
      if (d.husimi && !d.husimi->pass) {
        res.messages.push_back("diagnose: Husimi max-bin frequency " + format_number(d.husimi->max_frequency) +
                               " exceeds threshold " + format_number(d.husimi->threshold));
        if (dg.husimi_gate) res.exit_code = static_cast<int>(ErrorKind::admissibility);
      }
      res.diagnostics = std::move(d);
    }
  } catch (const Error& e) {
    res.exit_code = e.exit_code();
    res.messages.push_back(std::string(stage) + ": " + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    res.exit_code = static_cast<int>(ErrorKind::io);
    res.messages.push_back(std::string(stage) + ": " + e.what());
  }
  return res;
}

}  // namespace qrng::app
