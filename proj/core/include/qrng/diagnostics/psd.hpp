#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qrng/source.hpp"

namespace qrng::diagnostics {

struct PsdEstimate {
  std::vector<double> freqs;   // Hz, 0 .. f_s/2
  std::vector<double> psd;     // V^2/Hz, one-sided
  std::vector<double> psd_db;  // dB re 1 V^2/Hz; -inf where psd == 0
  std::size_t n_fft = 0;
  std::size_t n_avg = 0;
  double f_s = 0.0;
  double delta_f = 0.0;
  double enbw = 0.0;   // 1.5 delta_f for Hann
  double ci_db = 0.0;  // +- 1.96 / sqrt(M), as stated for the averaged estimate

  /// Sum of psd * delta_f over every bin.
  [[nodiscard]] double integral() const;
};

/// Hann-windowed one-sided periodogram normalized by f_s * sum(w^2), averaged
/// over `n_avg` non-overlapping segments of `n_fft` samples.
[[nodiscard]] PsdEstimate psd(std::span<const double> x, double f_s, std::size_t n_fft, std::size_t n_avg);

struct ChannelPsd {
  PsdEstimate x;
  PsdEstimate p;
};

/// Both channels of a block, codes scaled to volts by each channel's step.
[[nodiscard]] ChannelPsd psd(const source::SampleBlock& block, double step_x, double step_p, double f_s,
                             std::size_t n_fft, std::size_t n_avg);

struct Qcnr {
  double db = 0.0;
  double uncertainty_db = 0.0;  // 95%
  double power_on = 0.0;        // V^2 in band
  double power_off = 0.0;
};

[[nodiscard]] Qcnr qcnr(const PsdEstimate& on, const PsdEstimate& off, double band_lo, double band_hi);

struct Spike {
  double freq = 0.0;
  double excess_db = 0.0;
};

/// Bins more than `threshold_db` above the median of +-`half_window` neighbours.
[[nodiscard]] std::vector<Spike> find_spikes(const PsdEstimate& est, double threshold_db = 6.0,
                                             std::size_t half_window = 32);

}  // namespace qrng::diagnostics
