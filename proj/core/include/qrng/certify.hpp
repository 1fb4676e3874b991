#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <cstdint>
#include <string>

#include "qrng/source.hpp"

namespace qrng::certify {

using Rational = boost::multiprecision::cpp_rational;

/// 2^e as an exact rational.
[[nodiscard]] Rational pow2(int e);

/// log2 of a positive rational; exact for powers of two.
[[nodiscard]] double log2_of(const Rational& r);

[[nodiscard]] double to_double(const Rational& r);

/// Decimal rendering, exact when the denominator divides a power of ten.
[[nodiscard]] std::string to_decimal(const Rational& r, int max_frac_digits = 12);

struct EntropyBudget {
  Rational eps_s;
  Rational eps_pa;
  Rational beta;
  std::uint64_t n_blocks_allocated = 1;

  [[nodiscard]] Rational eps_sec() const { return eps_s + eps_pa + beta; }

  /// Throws unless every epsilon lies in (0, 1) and n_blocks >= 1.
  void validate() const;

  /// Union-bound share of one block.
  [[nodiscard]] EntropyBudget per_block() const;

  [[nodiscard]] static EntropyBudget from_log2(int log2_s, int log2_pa, int log2_beta,
                                               std::uint64_t n_blocks = 1);
};

/// -log2(min{dx dp / 2pi, 1}).
[[nodiscard]] double hmin_per_round(double deltap_x, double deltap_p);

/// Bound conditioned on the no-clip event: bin mass renormalized by 1/(1 - f_clip).
[[nodiscard]] double hmin_no_clip(double deltap_x, double deltap_p, double f_clip);

struct ClipEstimate {
  std::size_t rounds = 0;
  std::size_t clipped = 0;
  double f_clip = 0.0;
  double ci_lo = 0.0;  // Clopper-Pearson, 95%
  double ci_hi = 0.0;
  double n_valid = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

[[nodiscard]] Interval clopper_pearson(std::size_t successes, std::size_t trials, double confidence = 0.95);

[[nodiscard]] ClipEstimate estimate_clip_fraction(const source::SampleBlock& block);
[[nodiscard]] ClipEstimate estimate_clip_fraction(std::size_t clipped, std::size_t rounds);

/// floor(n_eff h1 - 2 log2(n_blocks / eps_pa)), clamped at 0. eps_pa may be 1.
[[nodiscard]] std::uint64_t extraction_length(double h1_noclip, std::uint64_t n_eff, const Rational& eps_pa,
                                              const Rational& n_blocks);
[[nodiscard]] std::uint64_t extraction_length(double h1_noclip, std::uint64_t n_eff,
                                              const EntropyBudget& budget, std::uint64_t n_blocks);

/// Largest multiple of `word_bits` not above `ell`.
[[nodiscard]] constexpr std::uint64_t floor_to_word(std::uint64_t ell, std::uint64_t word_bits) {
  return word_bits == 0 ? ell : ell - ell % word_bits;
}

/// (ell / n_eff) * f_s_eff in bits/s, exact.
[[nodiscard]] Rational net_rate(std::uint64_t ell, std::uint64_t n_eff, const Rational& f_s_eff);

/// Per-bin multiplicative-Chernoff slack sqrt(3 p ln(N_bins / alpha) / N).
[[nodiscard]] double chernoff_slack(double p_bound, double n_bins, double alpha, double n_samples);

enum class Mode { transform, decimation };

struct Certificate {
  double deltap_x = 0.0;
  double deltap_p = 0.0;
  bool deltap_override = false;
  ClipEstimate clip;
  double h_min_1 = 0.0;
  double h_min_1_noclip = 0.0;
  double h_min_block = 0.0;       // n_eff * h_min_1_noclip
  double inflation_penalty = 0.0;
  double rho_out = 0.0;
  double dh_corr = 0.0;
  std::uint64_t n_eff = 0;
  std::uint64_t k_in = 0;
  std::uint64_t word_bits = 24;
  std::uint64_t n_blocks = 1;
  std::uint64_t ell_bound = 0;       // privacy-amplification bound
  std::uint64_t ell_admissible = 0;  // ell_bound floored to a word multiple (largest usable j)
  std::uint64_t ell = 0;             // configured
  Rational ratio;                    // ell / k_in
  Rational r_net;             // at the configured ell
  Rational r_net_admissible;
  Rational f_s_eff;
  std::uint64_t d_decimation = 1;
  Mode mode = Mode::transform;
  int eps_s_log2 = -64;
  int eps_pa_log2 = -64;
  int beta_log2 = -64;

  [[nodiscard]] bool admissible() const { return ell <= ell_bound; }
};

struct CertifyInputs {
  double deltap_x = 0.0;
  double deltap_p = 0.0;
  bool deltap_override = false;
  ClipEstimate clip;
  double inflation_penalty = 0.0;
  double rho_out = 0.0;
  std::uint64_t rounds_per_invocation = 120;  // k_in / word_bits
  std::uint64_t word_bits = 24;
  std::uint64_t n_blocks = 1;
  std::uint64_t ell = 1272;
  Rational f_s;
  Mode mode = Mode::transform;
  std::uint64_t decimation = 1;
  int eps_s_log2 = -64;
  int eps_pa_log2 = -64;
  int beta_log2 = -64;
};

[[nodiscard]] Certificate make_certificate(const CertifyInputs& in);

/// Key-value text, one quantity per line. Byte-stable for a given certificate.
[[nodiscard]] std::string serialize(const Certificate& c);

}  // namespace qrng::certify
