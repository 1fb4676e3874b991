#include "qrng/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qrng/error.hpp"

namespace qrng::report {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void KvReport::add(const std::string& key, double value, const std::string& unit,
                   std::optional<double> ci) {
  std::string line = key + " = " + format_number(value);
  if (!unit.empty()) line += " " + unit;
  if (ci) line += " +- " + format_number(*ci);
  lines_.push_back(std::move(line));
}

void KvReport::add(const std::string& key, const std::string& text) {
  lines_.push_back(key + " = " + text);
}

void KvReport::comment(const std::string& text) { lines_.push_back("# " + text); }

std::string KvReport::str() const {
  std::string out = "# " + title_ + "\n";
  for (const auto& l : lines_) out += l + "\n";
  return out;
}

std::string calibration_report(const calibration::CalibrationFit& fit) {
  KvReport r("qrng calibration v1");
  auto channel = [&r](const char* ch, const calibration::ChannelFit& f) {
    const std::string p = std::string(ch) + ".";
    r.add(p + "model", f.model == calibration::FitModel::linear ? "linear" : "quadratic");
    r.add(p + "m", f.m, "V2/W", f.ci_m);
    r.add(p + "c", f.c, "V2", f.ci_c);
    r.add(p + "eta", f.eta, "V2/W2", f.ci_eta);
    r.add(p + "lof_p", f.lof_p);
    r.add(p + "chi2", f.chi2);
  };
  channel("x", fit.x);
  channel("p", fit.p);
  if (fit.complete()) {
    r.add("p_lo", fit.p_lo, "W");
    r.add("v_pp", fit.v_pp, "V");
    auto vac = [&r](const char* ch, const calibration::VacuumUnits& v) {
      const std::string p = std::string(ch) + ".";
      r.add(p + "enob", v.enob, "bit");
      r.add(p + "code_width", v.code_width, "V");
      r.add(p + "alpha", v.alpha, "V");
      r.add(p + "variance", v.variance_v, "V2");
      r.add(p + "sigma2", v.sigma2, "vac2");
      r.add(p + "gamma", v.gamma);
      r.add(p + "delta", v.delta, "vac");
      r.add(p + "deltap", v.deltap, "vac");
    };
    vac("x", *fit.vac_x);
    vac("p", *fit.vac_p);
    r.add("inflation_penalty", fit.inflation_penalty(), "bit");
  }
  if (fit.decorrelation) {
    const auto& d = *fit.decorrelation;
    r.add("rho_xp", d.rho_xp);
    r.add("rho_xp_ci_lo", d.rho_ci_lo);
    r.add("rho_xp_ci_hi", d.rho_ci_hi);
    r.add("rotation", format_number(d.rotation[0]) + " " + format_number(d.rotation[1]) + " " +
                          format_number(d.rotation[2]) + " " + format_number(d.rotation[3]));
    r.add("rho_out", d.rho_out);
    r.add("dh_corr", d.dh_corr, "bit");
    r.add("decorrelation_rounds", static_cast<double>(d.rounds_used));
  }
  for (const auto& w : fit.warnings) r.comment("warning: " + w);
  return r.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed on " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace qrng::report
