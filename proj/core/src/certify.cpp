#include "qrng/certify.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "qrng/error.hpp"

namespace qrng::certify {

namespace bmp = boost::multiprecision;

Rational pow2(int e) {
  const bmp::cpp_int one = 1;
  if (e >= 0) return Rational(one << e);
  return Rational(bmp::cpp_int(1), one << (-e));
}

namespace {

double log2_int(const bmp::cpp_int& v) {
  const auto top = static_cast<long>(bmp::msb(v));
  if (top <= 52) return std::log2(v.convert_to<double>());
  const auto shift = static_cast<unsigned>(top - 52);
  const bmp::cpp_int head = v >> shift;
  return static_cast<double>(shift) + std::log2(head.convert_to<double>());
}

}  // namespace

double log2_of(const Rational& r) {
  if (r <= 0) throw ValidationError("log2 of a non-positive quantity");
  return log2_int(bmp::numerator(r)) - log2_int(bmp::denominator(r));
}

double to_double(const Rational& r) {
  if (r == 0) return 0.0;
  const double sign = r < 0 ? -1.0 : 1.0;
  return sign * std::exp2(log2_of(r < 0 ? Rational(-r) : r));
}

std::string to_decimal(const Rational& r, int max_frac_digits) {
  bmp::cpp_int num = bmp::numerator(r);
  const bmp::cpp_int den = bmp::denominator(r);
  std::string out;
  if (num < 0) {
    out = "-";
    num = -num;
  }
  out += bmp::cpp_int(num / den).str();
  bmp::cpp_int rem = num % den;
  if (rem != 0) {
    out += '.';
    for (int i = 0; i < max_frac_digits && rem != 0; ++i) {
      rem *= 10;
      out += bmp::cpp_int(rem / den).str();
      rem %= den;
    }
  }
  return out;
}

void EntropyBudget::validate() const {
  for (const Rational* e : {&eps_s, &eps_pa, &beta}) {
    if (*e <= 0 || *e >= 1) throw ValidationError("epsilon budget entries must lie in (0, 1)");
  }
  if (n_blocks_allocated == 0) throw ValidationError("epsilon budget needs at least one block");
}

EntropyBudget EntropyBudget::per_block() const {
  const Rational n(n_blocks_allocated);
  return {eps_s / n, eps_pa / n, beta / n, 1};
}

EntropyBudget EntropyBudget::from_log2(int log2_s, int log2_pa, int log2_beta, std::uint64_t n_blocks) {
  EntropyBudget b{pow2(log2_s), pow2(log2_pa), pow2(log2_beta), n_blocks};
  b.validate();
  return b;
}

double hmin_per_round(double deltap_x, double deltap_p) {
  if (!(deltap_x > 0.0) || !(deltap_p > 0.0)) {
    throw ValidationError("conservative resolutions must be positive");
  }
  const double mass = deltap_x * deltap_p / (2.0 * std::numbers::pi);
  return mass >= 1.0 ? 0.0 : -std::log2(mass);
}

double hmin_no_clip(double deltap_x, double deltap_p, double f_clip) {
  if (!(f_clip >= 0.0) || f_clip >= 1.0) throw ValidationError("clip fraction must lie in [0, 1)");
  if (!(deltap_x > 0.0) || !(deltap_p > 0.0)) {
    throw ValidationError("conservative resolutions must be positive");
  }
  const double mass = deltap_x * deltap_p / (2.0 * std::numbers::pi * (1.0 - f_clip));
  return mass >= 1.0 ? 0.0 : -std::log2(mass);
}

Interval clopper_pearson(std::size_t k, std::size_t n, double confidence) {
  if (n == 0) throw ValidationError("Clopper-Pearson interval needs at least one trial");
  if (k > n) throw ValidationError("Clopper-Pearson: successes exceed trials");
  const double a = 1.0 - confidence;
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  Interval iv;
  // At the boundaries the beta quantiles collapse to closed forms.
  if (k == 0) {
    iv.lo = 0.0;
    iv.hi = -std::expm1(std::log(a / 2.0) / nd);
  } else if (k == n) {
    iv.lo = std::exp(std::log(a / 2.0) / nd);
    iv.hi = 1.0;
  } else {
    iv.lo = boost::math::ibeta_inv(kd, nd - kd + 1.0, a / 2.0);
    iv.hi = boost::math::ibeta_inv(kd + 1.0, nd - kd, 1.0 - a / 2.0);
  }
  return iv;
}

ClipEstimate estimate_clip_fraction(std::size_t clipped, std::size_t rounds) {
  if (rounds == 0) throw ValidationError("clip fraction of an empty block");
  ClipEstimate e;
  e.rounds = rounds;
  e.clipped = clipped;
  e.f_clip = static_cast<double>(clipped) / static_cast<double>(rounds);
  const auto iv = clopper_pearson(clipped, rounds);
  e.ci_lo = iv.lo;
  e.ci_hi = iv.hi;
  e.n_valid = static_cast<double>(rounds - clipped);
  return e;
}

ClipEstimate estimate_clip_fraction(const source::SampleBlock& block) {
  return estimate_clip_fraction(block.clipped_count(), block.round_count());
}

std::uint64_t extraction_length(double h1_noclip, std::uint64_t n_eff, const Rational& eps_pa,
                                const Rational& n_blocks) {
  if (n_eff == 0) throw ValidationError("extraction length needs n_eff >= 1");
  if (eps_pa <= 0 || eps_pa > 1) throw ValidationError("eps_PA must lie in (0, 1]");
  if (n_blocks < 1) throw ValidationError("n_blocks must be >= 1");
  const double penalty = 2.0 * (log2_of(n_blocks) - log2_of(eps_pa));
  const double raw = static_cast<double>(n_eff) * h1_noclip - penalty;
  if (!(raw > 0.0)) return 0;
  return static_cast<std::uint64_t>(std::floor(raw));
}

std::uint64_t extraction_length(double h1_noclip, std::uint64_t n_eff, const EntropyBudget& budget,
                                std::uint64_t n_blocks) {
  budget.validate();
  return extraction_length(h1_noclip, n_eff, budget.eps_pa, Rational(n_blocks));
}

Rational net_rate(std::uint64_t ell, std::uint64_t n_eff, const Rational& f_s_eff) {
  if (n_eff == 0) throw ValidationError("net rate needs n_eff >= 1");
  if (f_s_eff <= 0) throw ValidationError("net rate needs a positive sample rate");
  return Rational(ell) / Rational(n_eff) * f_s_eff;
}

double chernoff_slack(double p_bound, double n_bins, double alpha, double n_samples) {
  return std::sqrt(3.0 * p_bound * std::log(n_bins / alpha) / n_samples);
}

Certificate make_certificate(const CertifyInputs& in) {
  if (in.word_bits == 0 || in.rounds_per_invocation == 0) {
    throw ValidationError("certificate: invocation size must be positive");
  }
  std::uint64_t d = 1;
  if (in.mode == Mode::decimation) {
    if (in.decimation == 0) throw ValidationError("decimation factor must be >= 1");
    d = in.decimation;
  } else if (in.decimation != 1) {
    throw ValidationError("decimation factor is only valid in decimation mode");
  }
  if (in.rounds_per_invocation < d) throw ValidationError("decimation leaves no rounds per invocation");

  const auto budget = EntropyBudget::from_log2(in.eps_s_log2, in.eps_pa_log2, in.beta_log2, in.n_blocks);

  Certificate c;
  c.deltap_x = in.deltap_x;
  c.deltap_p = in.deltap_p;
  c.deltap_override = in.deltap_override;
  c.clip = in.clip;
  c.h_min_1 = hmin_per_round(in.deltap_x, in.deltap_p);
  c.h_min_1_noclip = hmin_no_clip(in.deltap_x, in.deltap_p, in.clip.f_clip);
  c.inflation_penalty = in.inflation_penalty;
  c.rho_out = in.rho_out;
  c.dh_corr = -0.5 * std::log2(1.0 - in.rho_out * in.rho_out);
  c.d_decimation = d;
  c.mode = in.mode;
  c.n_eff = in.rounds_per_invocation / d;
  c.k_in = in.rounds_per_invocation * in.word_bits;
  c.word_bits = in.word_bits;
  c.n_blocks = in.n_blocks;
  c.h_min_block = static_cast<double>(c.n_eff) * c.h_min_1_noclip;
  c.ell_bound = extraction_length(c.h_min_1_noclip, c.n_eff, budget, in.n_blocks);
  c.ell_admissible = floor_to_word(c.ell_bound, in.word_bits);
  c.ell = in.ell;
  c.ratio = Rational(c.ell) / Rational(c.k_in);
  c.f_s_eff = in.f_s / Rational(d);
  c.r_net = net_rate(c.ell, c.n_eff, c.f_s_eff);
  c.r_net_admissible = net_rate(c.ell_admissible, c.n_eff, c.f_s_eff);
  c.eps_s_log2 = in.eps_s_log2;
  c.eps_pa_log2 = in.eps_pa_log2;
  c.beta_log2 = in.beta_log2;
  return c;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string serialize(const Certificate& c) {
  std::ostringstream os;
  auto line = [&os](const char* key, const std::string& value, const char* unit = "") {
    os << key << " = " << value;
    if (*unit) os << ' ' << unit;
    os << '\n';
  };
  os << "# qrng certificate v1\n";
  line("mode", c.mode == Mode::transform ? "transform" : "decimation");
  line("d_decimation", std::to_string(c.d_decimation));
  line("deltap_x", num(c.deltap_x), "vac");
  line("deltap_p", num(c.deltap_p), "vac");
  line("deltap_source", c.deltap_override ? "override" : "calibration");
  line("rounds", std::to_string(c.clip.rounds));
  line("rounds_clipped", std::to_string(c.clip.clipped));
  line("f_clip", num(c.clip.f_clip));
  line("f_clip_ci_lo", num(c.clip.ci_lo));
  line("f_clip_ci_hi", num(c.clip.ci_hi));
  line("h_min_1", num(c.h_min_1), "bit");
  line("h_min_1_noclip", num(c.h_min_1_noclip), "bit");
  line("h_min_block", num(c.h_min_block), "bit");
  line("inflation_penalty", num(c.inflation_penalty), "bit");
  line("rho_out", num(c.rho_out));
  line("dh_corr", num(c.dh_corr), "bit");
  line("eps_s_log2", std::to_string(c.eps_s_log2));
  line("eps_pa_log2", std::to_string(c.eps_pa_log2));
  line("beta_log2", std::to_string(c.beta_log2));
  line("n_blocks", std::to_string(c.n_blocks));
  line("n_eff", std::to_string(c.n_eff));
  line("k_in", std::to_string(c.k_in), "bit");
  line("word_bits", std::to_string(c.word_bits), "bit");
  line("ell_bound", std::to_string(c.ell_bound), "bit");
  line("ell_admissible", std::to_string(c.ell_admissible), "bit");
  line("ell", std::to_string(c.ell), "bit");
  line("ratio", to_decimal(c.ratio, 9));
  line("f_s_eff", to_decimal(c.f_s_eff, 3), "Hz");
  line("r_net", to_decimal(c.r_net, 3), "bit/s");
  line("r_net_admissible", to_decimal(c.r_net_admissible, 3), "bit/s");
  line("admissible", c.admissible() ? "true" : "false");
  return os.str();
}

}  // namespace qrng::certify
