#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace qrng::diagnostics {

struct HusimiOptions {
  /// Grid half-extent in sample standard deviations; widened to cover every sample.
  double extent_sigma = 5.0;
  /// Optional acceptance region {x_lo, x_hi, p_lo, p_hi}; bins it cuts get truncated areas.
  std::optional<std::array<double, 4>> support;
};

/// Bins are [m dx, (m+1) dx) x [n dp, (n+1) dp), edges on multiples of the resolutions.
struct HusimiHistogram {
  double deltap_x = 0.0;
  double deltap_p = 0.0;
  long m0 = 0;  // x index of column 0
  long n0 = 0;  // p index of row 0
  std::size_t nx = 0;
  std::size_t np = 0;
  std::vector<std::uint32_t> counts;  // [ix * np + ip]
  std::vector<double> area;           // per bin
  std::vector<double> q_hat;          // 2 H / (N A)
  std::size_t n_total = 0;
  double mean_x = 0.0;
  double mean_p = 0.0;
  double var_x = 0.0;
  double var_p = 0.0;

  [[nodiscard]] std::size_t bins() const noexcept { return nx * np; }
  /// sum q_hat * A / 2; 1 by construction.
  [[nodiscard]] double normalization() const;
  [[nodiscard]] std::uint32_t max_count() const;
};

[[nodiscard]] HusimiHistogram husimi(std::span<const double> x, std::span<const double> p, double deltap_x,
                                     double deltap_p, const HusimiOptions& opts = {});

struct Admissibility {
  double max_frequency = 0.0;
  double bound = 0.0;   // min{dx dp / 2pi, 1} at the claimed resolutions
  double slack = 0.0;   // Chernoff, union over bins
  double threshold = 0.0;
  double n_bins = 0.0;
  double alpha = 0.0;
  bool pass = false;
};

/// Max empirical bin frequency against the per-round bound evaluated at the
/// claimed resolutions (the histogram keeps its own binning).
[[nodiscard]] Admissibility admissibility_check(const HusimiHistogram& h, double claimed_dx, double claimed_dp,
                                                double alpha = 1e-6);

}  // namespace qrng::diagnostics
