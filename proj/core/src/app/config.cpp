#include "qrng/app/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "qrng/error.hpp"
#include "qrng/report.hpp"

namespace qrng::app {

namespace {

enum class Dim { none, power, voltage, variance, slope, rin, frequency, bits };

struct Unit {
  const char* name;
  Dim dim;
  double scale;
};

constexpr Unit kUnits[] = {
    {"W", Dim::power, 1.0},        {"mW", Dim::power, 1e-3},       {"uW", Dim::power, 1e-6},
    {"V", Dim::voltage, 1.0},      {"mV", Dim::voltage, 1e-3},     {"V2", Dim::variance, 1.0},
    {"V2/W", Dim::slope, 1.0},     {"V2/W2", Dim::rin, 1.0},       {"Hz", Dim::frequency, 1.0},
    {"kHz", Dim::frequency, 1e3},  {"MHz", Dim::frequency, 1e6},   {"GHz", Dim::frequency, 1e9},
    {"bit", Dim::bits, 1.0},
};

const char* dim_name(Dim d) {
  switch (d) {
    case Dim::none: return "dimensionless";
    case Dim::power: return "power (W, mW, uW)";
    case Dim::voltage: return "voltage (V, mV)";
    case Dim::variance: return "variance (V2)";
    case Dim::slope: return "slope (V2/W)";
    case Dim::rin: return "quadratic coefficient (V2/W2)";
    case Dim::frequency: return "frequency (Hz, kHz, MHz, GHz)";
    case Dim::bits: return "bits (bit)";
  }
  return "?";
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& tok) {
  double v = 0.0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw std::string("not a number: '" + tok + "'");
  return v;
}

// Numbers (comma separated) scaled to SI, with the unit checked against `dim`.
std::vector<double> parse_quantities(const std::string& raw, Dim dim) {
  std::string body = raw;
  const Unit* unit = nullptr;
  const auto sp = body.find_last_of(" \t");
  if (sp != std::string::npos) {
    const std::string tail = trim(body.substr(sp + 1));
    for (const auto& u : kUnits) {
      if (tail == u.name) unit = &u;
    }
    if (unit) body = trim(body.substr(0, sp));
  }
  if (dim != Dim::none && !unit) throw std::string("missing unit; expected " + std::string(dim_name(dim)));
  if (dim == Dim::none && unit) throw std::string("unexpected unit '" + std::string(unit->name) + "'");
  if (unit && unit->dim != dim) {
    throw std::string("unit '" + std::string(unit->name) + "' is not " + dim_name(dim));
  }
  std::vector<double> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) throw std::string("empty list element");
    out.push_back(parse_number(t) * (unit ? unit->scale : 1.0));
  }
  if (out.empty()) throw std::string("missing value");
  return out;
}

double one(const std::string& raw, Dim dim) {
  const auto v = parse_quantities(raw, dim);
  if (v.size() != 1) throw std::string("expected a single value");
  return v[0];
}

std::int64_t integer(const std::string& raw, Dim dim = Dim::none) {
  const double v = one(raw, dim);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) throw std::string("expected an integer");
  return static_cast<std::int64_t>(v);
}

std::uint64_t count(const std::string& raw, Dim dim = Dim::none) {
  const auto v = integer(raw, dim);
  if (v < 0) throw std::string("must be non-negative");
  return static_cast<std::uint64_t>(v);
}

bool boolean(const std::string& raw) {
  if (raw == "true" || raw == "yes" || raw == "on" || raw == "1") return true;
  if (raw == "false" || raw == "no" || raw == "off" || raw == "0") return false;
  throw std::string("expected true or false");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& registry() {
  static const std::map<std::string, Setter> r = {
      {"source.m_x", [](RunConfig& c, const std::string& v) { c.source.model.m_x = one(v, Dim::slope); }},
      {"source.m_p", [](RunConfig& c, const std::string& v) { c.source.model.m_p = one(v, Dim::slope); }},
      {"source.c_x", [](RunConfig& c, const std::string& v) { c.source.model.c_x = one(v, Dim::variance); }},
      {"source.c_p", [](RunConfig& c, const std::string& v) { c.source.model.c_p = one(v, Dim::variance); }},
      {"source.eta_x", [](RunConfig& c, const std::string& v) { c.source.model.eta_x = one(v, Dim::rin); }},
      {"source.eta_p", [](RunConfig& c, const std::string& v) { c.source.model.eta_p = one(v, Dim::rin); }},
      {"source.p_lo", [](RunConfig& c, const std::string& v) { c.source.model.p_lo = one(v, Dim::power); }},
      {"source.f_s", [](RunConfig& c, const std::string& v) { c.source.model.f_s = one(v, Dim::frequency); }},
      {"source.passband_lo",
       [](RunConfig& c, const std::string& v) { c.source.model.passband_lo = one(v, Dim::frequency); }},
      {"source.passband_hi",
       [](RunConfig& c, const std::string& v) { c.source.model.passband_hi = one(v, Dim::frequency); }},
      {"source.filter_taps", [](RunConfig& c, const std::string& v) { c.source.model.filter_taps = count(v); }},
      {"source.v_pp", [](RunConfig& c, const std::string& v) { c.source.model.v_pp = one(v, Dim::voltage); }},
      {"source.enob_x", [](RunConfig& c, const std::string& v) { c.source.model.enob_x = one(v, Dim::bits); }},
      {"source.enob_p", [](RunConfig& c, const std::string& v) { c.source.model.enob_p = one(v, Dim::bits); }},
      {"source.adc_bits",
       [](RunConfig& c, const std::string& v) { c.source.model.adc_bits = static_cast<int>(integer(v, Dim::bits)); }},
      {"source.rho_xp", [](RunConfig& c, const std::string& v) { c.source.model.rho_xp = one(v, Dim::none); }},
      {"source.rounds", [](RunConfig& c, const std::string& v) { c.source.rounds = count(v); }},
      {"source.seed", [](RunConfig& c, const std::string& v) { c.source.seed = count(v); }},
      {"source.workers",
       [](RunConfig& c, const std::string& v) { c.source.workers = static_cast<unsigned>(count(v)); }},
      {"source.input", [](RunConfig& c, const std::string& v) { c.source.input = v; }},
      {"source.input_format",
       [](RunConfig& c, const std::string& v) {
         if (v == "qrngraw1")
           c.source.input_format = source::RawFormat::qrngraw1;
         else if (v == "interleaved_i16")
           c.source.input_format = source::RawFormat::interleaved_i16;
         else
           throw std::string("input_format must be qrngraw1 or interleaved_i16");
       }},
      {"source.input_f_s", [](RunConfig& c, const std::string& v) { c.source.input_f_s = one(v, Dim::frequency); }},

      {"calibration.sweep_powers",
       [](RunConfig& c, const std::string& v) { c.calibration.sweep_powers = parse_quantities(v, Dim::power); }},
      {"calibration.sweep_rounds", [](RunConfig& c, const std::string& v) { c.calibration.sweep_rounds = count(v); }},
      {"calibration.sweep_file", [](RunConfig& c, const std::string& v) { c.calibration.sweep_file = v; }},
      {"calibration.model",
       [](RunConfig& c, const std::string& v) {
         if (v == "linear")
           c.calibration.model = calibration::FitModel::linear;
         else if (v == "quadratic")
           c.calibration.model = calibration::FitModel::quadratic;
         else
           throw std::string("model must be linear or quadratic");
       }},
      {"calibration.p_lo_err", [](RunConfig& c, const std::string& v) { c.calibration.p_lo_err = one(v, Dim::power); }},
      {"calibration.vpp_err", [](RunConfig& c, const std::string& v) { c.calibration.vpp_err = one(v, Dim::voltage); }},
      {"calibration.enob_err", [](RunConfig& c, const std::string& v) { c.calibration.enob_err = one(v, Dim::bits); }},
      {"calibration.deltap_x", [](RunConfig& c, const std::string& v) { c.calibration.deltap_x = one(v, Dim::none); }},
      {"calibration.deltap_p", [](RunConfig& c, const std::string& v) { c.calibration.deltap_p = one(v, Dim::none); }},

      {"certify.eps_s_log2",
       [](RunConfig& c, const std::string& v) { c.certify.eps_s_log2 = static_cast<int>(integer(v)); }},
      {"certify.eps_pa_log2",
       [](RunConfig& c, const std::string& v) { c.certify.eps_pa_log2 = static_cast<int>(integer(v)); }},
      {"certify.beta_log2",
       [](RunConfig& c, const std::string& v) { c.certify.beta_log2 = static_cast<int>(integer(v)); }},
      {"certify.mode",
       [](RunConfig& c, const std::string& v) {
         if (v == "transform")
           c.certify.mode = certify::Mode::transform;
         else if (v == "decimation")
           c.certify.mode = certify::Mode::decimation;
         else
           throw std::string("mode must be transform or decimation");
       }},
      {"certify.decimation", [](RunConfig& c, const std::string& v) { c.certify.decimation = count(v); }},
      {"certify.n_blocks", [](RunConfig& c, const std::string& v) { c.certify.n_blocks = count(v); }},
      {"certify.ell", [](RunConfig& c, const std::string& v) { c.certify.ell = count(v, Dim::bits); }},

      {"extractor.k_in", [](RunConfig& c, const std::string& v) { c.extractor.k_in = count(v, Dim::bits); }},
      {"extractor.b", [](RunConfig& c, const std::string& v) { c.extractor.b = count(v, Dim::bits); }},
      {"extractor.n_s", [](RunConfig& c, const std::string& v) { c.extractor.n_s = count(v); }},
      {"extractor.n_b", [](RunConfig& c, const std::string& v) { c.extractor.n_b = count(v); }},
      {"extractor.seed_file", [](RunConfig& c, const std::string& v) { c.extractor.seed_file = v; }},
      {"extractor.seed_compat", [](RunConfig& c, const std::string& v) { c.extractor.seed_compat = boolean(v); }},
      {"extractor.seed_key", [](RunConfig& c, const std::string& v) { c.extractor.seed_key = count(v); }},
      {"extractor.workers",
       [](RunConfig& c, const std::string& v) { c.extractor.workers = static_cast<unsigned>(count(v)); }},
      {"extractor.emulate_pipeline",
       [](RunConfig& c, const std::string& v) { c.extractor.emulate_pipeline = boolean(v); }},

      {"diagnostics.enabled", [](RunConfig& c, const std::string& v) { c.diagnostics.enabled = boolean(v); }},
      {"diagnostics.n_fft", [](RunConfig& c, const std::string& v) { c.diagnostics.n_fft = count(v); }},
      {"diagnostics.n_avg", [](RunConfig& c, const std::string& v) { c.diagnostics.n_avg = count(v); }},
      {"diagnostics.bootstrap_resamples",
       [](RunConfig& c, const std::string& v) { c.diagnostics.bootstrap.resamples = count(v); }},
      {"diagnostics.bootstrap_block",
       [](RunConfig& c, const std::string& v) { c.diagnostics.bootstrap.block_len = count(v); }},
      {"diagnostics.bootstrap_seed",
       [](RunConfig& c, const std::string& v) { c.diagnostics.bootstrap.seed = count(v); }},
      {"diagnostics.max_lag", [](RunConfig& c, const std::string& v) { c.diagnostics.max_lag = count(v); }},
      {"diagnostics.husimi_extent",
       [](RunConfig& c, const std::string& v) { c.diagnostics.husimi_extent = one(v, Dim::none); }},
      {"diagnostics.husimi_alpha",
       [](RunConfig& c, const std::string& v) { c.diagnostics.husimi_alpha = one(v, Dim::none); }},
      {"diagnostics.qcnr_lo",
       [](RunConfig& c, const std::string& v) { c.diagnostics.qcnr_lo = one(v, Dim::frequency); }},
      {"diagnostics.qcnr_hi",
       [](RunConfig& c, const std::string& v) { c.diagnostics.qcnr_hi = one(v, Dim::frequency); }},
      {"diagnostics.husimi_gate", [](RunConfig& c, const std::string& v) { c.diagnostics.husimi_gate = boolean(v); }},
      {"diagnostics.battery", [](RunConfig& c, const std::string& v) { c.diagnostics.battery = boolean(v); }},

      {"output.dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
  };
  return r;
}

}  // namespace

extractor::ToeplitzConfig RunConfig::toeplitz() const {
  extractor::ToeplitzConfig t;
  t.k_in = extractor.k_in;
  t.b = extractor.b;
  t.j = certify::floor_to_word(certify.ell, extractor.b);
  t.n_s = extractor.n_s;
  t.n_b = extractor.n_b;
  return t;
}

void RunConfig::validate() const {
  std::vector<std::string> errs;
  auto check = [&errs](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      errs.emplace_back(e.what());
    }
  };
  if (!source.input && source.rounds == 0) errs.emplace_back("source.rounds must be >= 1");
  check([&] { (void)source::validate(source.model); });
  if (source.input && source.input_format == source::RawFormat::interleaved_i16 && !(source.input_f_s > 0.0)) {
    errs.emplace_back("source.input_f_s is required for interleaved_i16 input");
  }
  if (!calibration.sweep_file) {
    const std::set<double> distinct(calibration.sweep_powers.begin(), calibration.sweep_powers.end());
    const std::size_t need = calibration.model == calibration::FitModel::linear ? 3 : 4;
    if (distinct.size() < need) errs.emplace_back("calibration.sweep_powers needs " + std::to_string(need) + " distinct levels");
    if (calibration.sweep_rounds < 2) errs.emplace_back("calibration.sweep_rounds must be >= 2");
  }
  if (calibration.deltap_x.has_value() != calibration.deltap_p.has_value()) {
    errs.emplace_back("calibration.deltap_x and deltap_p must be given together");
  }
  if (calibration.deltap_x && (!(*calibration.deltap_x > 0.0) || !(*calibration.deltap_p > 0.0))) {
    errs.emplace_back("calibration.deltap_x/deltap_p must be positive");
  }
  for (int e : {certify.eps_s_log2, certify.eps_pa_log2, certify.beta_log2}) {
    if (e >= 0 || e < -1000) errs.emplace_back("certify epsilon exponents must lie in [-1000, -1]");
  }
  if (certify.mode == certify::Mode::transform && certify.decimation != 1) {
    errs.emplace_back("certify.decimation must be 1 in transform mode");
  }
  if (certify.mode == certify::Mode::decimation && certify.decimation < 1) {
    errs.emplace_back("certify.decimation must be >= 1");
  }
  if (certify.n_blocks == 0) errs.emplace_back("certify.n_blocks must be >= 1");
  if (!(diagnostics.qcnr_lo < diagnostics.qcnr_hi)) errs.emplace_back("diagnostics.qcnr_lo must be below qcnr_hi");
  if (certify.ell < extractor.b) errs.emplace_back("certify.ell must hold at least one output word");
  check([&] { toeplitz().validate(); });
  if (extractor.b > 0 && extractor.k_in / extractor.b < 4) errs.emplace_back("extractor.k_in / b must be >= 4");
  if (diagnostics.n_fft < 2 || diagnostics.n_fft % 2) errs.emplace_back("diagnostics.n_fft must be even");
  if (diagnostics.n_avg == 0) errs.emplace_back("diagnostics.n_avg must be >= 1");
  if (!(diagnostics.husimi_alpha > 0.0) || diagnostics.husimi_alpha >= 1.0) {
    errs.emplace_back("diagnostics.husimi_alpha must lie in (0, 1)");
  }
  if (!errs.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ValidationError(msg);
  }
}

RunConfig parse_config(std::string_view text, const std::string& origin) {
  RunConfig cfg;
  std::vector<std::string> errs;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (t.front() == '[') {
      if (t.back() != ']') {
        errs.push_back(where + "malformed section header");
        continue;
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      errs.push_back(where + "expected key = value");
      continue;
    }
    const std::string key = section + "." + trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const auto it = registry().find(key);
    if (it == registry().end()) {
      errs.push_back(where + "unknown key '" + key + "'");
      continue;
    }
    if (!seen.insert(key).second) {
      errs.push_back(where + "duplicate key '" + key + "'");
      continue;
    }
    try {
      it->second(cfg, value);
    } catch (const std::string& e) {
      errs.push_back(where + key + ": " + e);
    }
  }
  if (!errs.empty()) {
    std::string msg = "configuration errors:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ValidationError(msg);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path.string());
  RunConfig cfg = parse_config(report::read_text(path), path.string());
  const auto base = path.parent_path();
  auto rebase = [&base](std::optional<std::filesystem::path>& p) {
    if (p && p->is_relative()) p = base / *p;
  };
  rebase(cfg.source.input);
  rebase(cfg.calibration.sweep_file);
  rebase(cfg.extractor.seed_file);
  if (cfg.output_dir.is_relative()) cfg.output_dir = base / cfg.output_dir;
  return cfg;
}

RunConfig reference_defaults() {
  RunConfig cfg;
  cfg.calibration.deltap_x = 0.0300;
  cfg.calibration.deltap_p = 0.0319;
  return cfg;
}

}  // namespace qrng::app
