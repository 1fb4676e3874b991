// qrng: command-line front end for the certification and extraction toolkit.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "qrng/app/config.hpp"
#include "qrng/app/reproduce.hpp"
#include "qrng/app/run.hpp"
#include "qrng/certify.hpp"
#include "qrng/digest.hpp"
#include "qrng/error.hpp"
#include "qrng/extracted_file.hpp"
#include "qrng/report.hpp"
#include "qrng/source.hpp"

namespace {

using qrng::app::RunConfig;

struct Common {
  std::string config;
  std::string input;
  std::string input_format;
  double input_f_s = 0.0;
  std::string out_dir;
  std::optional<std::size_t> rounds;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  bool quiet = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config, "Config file (default: $QRNG_CONFIG, else built-in defaults)");
  sub->add_option("-i,--input", c.input, "Raw sample file to ingest instead of simulating");
  sub->add_option("--input-format", c.input_format, "qrngraw1 or interleaved_i16")
      ->check(CLI::IsMember({"qrngraw1", "interleaved_i16"}));
  sub->add_option("--input-fs", c.input_f_s, "Sample rate in Hz for headerless input");
  sub->add_option("-o,--out-dir", c.out_dir, "Output directory");
  sub->add_option("--rounds", c.rounds, "Simulated rounds");
  sub->add_option("--seed", c.seed, "Simulation seed");
  sub->add_option("-j,--workers", c.workers, "Worker threads");
  sub->add_flag("-q,--quiet", c.quiet, "No progress output");
}

RunConfig load(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) {
    cfg = qrng::app::load_config(c.config);
  } else if (const char* env = std::getenv(qrng::app::kConfigEnv); env && *env) {
    cfg = qrng::app::load_config(env);
  } else {
    cfg = qrng::app::reference_defaults();
  }
  if (!c.input.empty()) cfg.source.input = c.input;
  if (!c.input_format.empty()) {
    cfg.source.input_format =
        c.input_format == "qrngraw1" ? qrng::source::RawFormat::qrngraw1 : qrng::source::RawFormat::interleaved_i16;
  }
  if (c.input_f_s > 0.0) cfg.source.input_f_s = c.input_f_s;
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  if (c.rounds) cfg.source.rounds = *c.rounds;
  if (c.seed) cfg.source.seed = *c.seed;
  if (c.workers) {
    cfg.source.workers = *c.workers;
    cfg.extractor.workers = *c.workers;
  }
  cfg.validate();
  return cfg;
}

int finish(const qrng::app::RunResult& r, bool quiet) {
  for (const auto& m : r.messages) std::cerr << m << '\n';
  if (!quiet) {
    for (const auto& p : r.written) std::cout << "wrote " << p.string() << '\n';
  }
  return r.exit_code;
}

int run_stages(const Common& c, unsigned stages) {
  const RunConfig cfg = load(c);
  qrng::app::RunOptions o;
  o.stages = stages;
  if (!c.quiet) o.log = &std::cerr;
  return finish(qrng::app::run_pipeline(cfg, o), c.quiet);
}

int cmd_simulate(const Common& c, const std::string& out, const std::string& format) {
  const RunConfig cfg = load(c);
  const auto block = qrng::source::simulate(cfg.source.model, cfg.source.rounds, cfg.source.seed, cfg.source.workers);
  const auto fmt =
      format == "interleaved_i16" ? qrng::source::RawFormat::interleaved_i16 : qrng::source::RawFormat::qrngraw1;
  qrng::source::write_raw(out, block, fmt);
  if (!c.quiet) {
    std::cout << "wrote " << out << ": " << block.round_count() << " rounds, " << block.clipped_count()
              << " clipped\n";
  }
  return 0;
}

int cmd_ingest(const Common& c, const std::string& out) {
  const RunConfig cfg = load(c);
  if (!cfg.source.input) throw qrng::ValidationError("ingest needs --input");
  const auto block = qrng::source::ingest(*cfg.source.input, cfg.source.input_format,
                                          static_cast<std::uint64_t>(cfg.source.input_f_s));
  const auto clip = qrng::certify::estimate_clip_fraction(block);
  qrng::report::KvReport r("qrng ingest v1");
  r.add("input", cfg.source.input->string());
  r.add("rounds", static_cast<double>(block.round_count()));
  r.add("f_s", static_cast<double>(block.f_s_hz), "Hz");
  r.add("rounds_clipped", static_cast<double>(clip.clipped));
  r.add("f_clip", clip.f_clip);
  r.add("f_clip_ci_lo", clip.ci_lo);
  r.add("f_clip_ci_hi", clip.ci_hi);
  std::cout << r.str();
  if (!out.empty()) qrng::source::write_raw(out, block, qrng::source::RawFormat::qrngraw1);
  return 0;
}

int cmd_report(const std::string& extracted, const std::string& certificate) {
  const auto f = qrng::extractor::read_extracted(extracted);
  qrng::report::KvReport r("qrng extracted-file report v1");
  r.add("file", extracted);
  r.add("version", static_cast<double>(f.version));
  r.add("certified", f.certified() ? "true" : "false");
  r.add("j", static_cast<double>(f.cfg.j), "bit");
  r.add("k_in", static_cast<double>(f.cfg.k_in), "bit");
  r.add("b", static_cast<double>(f.cfg.b), "bit");
  r.add("n_b", static_cast<double>(f.cfg.n_b));
  r.add("payload_bits", static_cast<double>(f.payload.size()), "bit");
  r.add("seed_sha256", qrng::to_hex(f.seed_digest));
  r.add("certificate_sha256", qrng::to_hex(f.certificate_digest));
  std::cout << r.str();
  if (f.certified()) std::cout << f.certificate;
  if (!certificate.empty()) {
    const auto standalone = qrng::report::read_text(certificate);
    if (qrng::sha256(std::string_view(standalone)) != f.certificate_digest) {
      std::cerr << "certificate " << certificate << " does not match the embedded certificate\n";
      return static_cast<int>(qrng::ErrorKind::admissibility);
    }
    std::cout << "# standalone certificate matches\n";
  }
  if (!f.certified()) {
    std::cerr << "file carries no certificate; treat as uncertified\n";
    return static_cast<int>(qrng::ErrorKind::admissibility);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QRNG calibration, certification and randomness extraction"};
  app.require_subcommand(1);

  Common c;
  auto* sim = app.add_subcommand("simulate", "Write a synthetic acquisition to a raw sample file");
  add_common(sim, c);
  std::string sim_out, sim_format = "qrngraw1";
  sim->add_option("--out", sim_out, "Raw output file")->required();
  sim->add_option("--format", sim_format, "qrngraw1 or interleaved_i16")
      ->check(CLI::IsMember({"qrngraw1", "interleaved_i16"}));

  auto* ing = app.add_subcommand("ingest", "Decode a raw sample file and report clipping statistics");
  add_common(ing, c);
  std::string ing_out;
  ing->add_option("--out", ing_out, "Re-encode as qrngraw1");

  auto* cal = app.add_subcommand("calibrate", "Power-sweep fit, vacuum units and decorrelation");
  add_common(cal, c);

  std::optional<std::uint64_t> ell;
  std::optional<double> dx, dp;
  std::optional<std::uint64_t> decimation;
  auto add_cert = [&](CLI::App* sub) {
    sub->add_option("--ell", ell, "Output bits per invocation");
    sub->add_option("--deltap-x", dx, "Conservative X resolution, vacuum units");
    sub->add_option("--deltap-p", dp, "Conservative P resolution, vacuum units");
    sub->add_option("--decimation", decimation, "Decimation factor D (selects decimation mode)");
  };
  auto* cer = app.add_subcommand("certify", "Min-entropy certificate and extraction length");
  add_common(cer, c);
  add_cert(cer);

  std::string seed_file;
  bool emulate = false;
  auto add_ext = [&](CLI::App* sub) {
    sub->add_option("--seed-file", seed_file, "Toeplitz seed file (raw bits)");
    sub->add_flag("--emulate-pipeline", emulate, "Use the cycle-level pipeline emulator");
  };
  auto* ext = app.add_subcommand("extract", "Certify, then extract with the Toeplitz hash");
  add_common(ext, c);
  add_cert(ext);
  add_ext(ext);

  auto* dia = app.add_subcommand("diagnose", "Full run plus PSD, autocorrelation, Husimi and test battery");
  add_common(dia, c);
  add_cert(dia);
  add_ext(dia);

  std::string rep_file, rep_cert;
  auto* rep = app.add_subcommand("report", "Verify and print an extracted-bits file");
  rep->add_option("file", rep_file, "Extracted-bits file")->required();
  rep->add_option("--certificate", rep_cert, "Standalone certificate to compare with the embedded one");

  std::string rp_seed;
  unsigned rp_workers = 1;
  std::size_t rp_bits = 10'000'000;
  auto* rp = app.add_subcommand("reproduce-paper", "Run every golden-number check and print a table");
  rp->add_option("--seed-file", rp_seed, "Seed file for the extractor rows");
  rp->add_option("-j,--workers", rp_workers, "Worker threads");
  rp->add_option("--battery-bits", rp_bits, "Extracted bits for the battery row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(qrng::ErrorKind::validation);
  }

  auto apply = [&](RunConfig& cfg) {
    if (ell) cfg.certify.ell = *ell;
    if (dx) cfg.calibration.deltap_x = *dx;
    if (dp) cfg.calibration.deltap_p = *dp;
    if (decimation) {
      cfg.certify.mode = qrng::certify::Mode::decimation;
      cfg.certify.decimation = *decimation;
    }
    if (!seed_file.empty()) cfg.extractor.seed_file = seed_file;
    if (emulate) cfg.extractor.emulate_pipeline = true;
  };
  auto staged = [&](unsigned stages) {
    RunConfig cfg = load(c);
    apply(cfg);
    qrng::app::RunOptions o;
    o.stages = stages;
    if (!c.quiet) o.log = &std::cerr;
    return finish(qrng::app::run_pipeline(cfg, o), c.quiet);
  };

  try {
    if (*sim) return cmd_simulate(c, sim_out, sim_format);
    if (*ing) return cmd_ingest(c, ing_out);
    if (*cal) return run_stages(c, qrng::app::kCalibrate);
    if (*cer) return staged(qrng::app::kCertify);
    if (*ext) return staged(qrng::app::kCertify | qrng::app::kExtract);
    if (*dia) return staged(qrng::app::kAllStages);
    if (*rep) return cmd_report(rep_file, rep_cert);
    if (*rp) {
      qrng::app::ReproduceOptions o;
      if (!rp_seed.empty()) o.seed_file = rp_seed;
      o.workers = rp_workers;
      o.battery_bits = rp_bits;
      const auto rows = qrng::app::reproduce_paper(o);
      std::cout << qrng::app::format_table(rows);
      for (const auto& r : rows) {
        if (!r.pass) return static_cast<int>(qrng::ErrorKind::admissibility);
      }
      return 0;
    }
  } catch (const qrng::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(qrng::ErrorKind::io);
  }
  return 0;
}
