#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qrng::diagnostics {

struct BootstrapParams {
  std::size_t resamples = 1000;   // B
  std::size_t block_len = 10000;  // l_B
  std::uint64_t seed = 0x7a0ULL;
};

struct AutocorrOptions {
  BootstrapParams bootstrap;
  std::size_t max_lag = 256;
  std::size_t ljung_box_lags = 50;
};

struct LjungBox {
  double q = 0.0;
  double p = 1.0;
  std::size_t lags = 0;
};

struct AutocorrReport {
  std::vector<double> rho;  // rho[0] = 1
  std::size_t n = 0;
  std::size_t k_star = 0;
  bool k_star_found = true;
  double tau_int = 1.0;
  double ci_lo = 1.0;  // 95% percentile bootstrap
  double ci_hi = 1.0;
  LjungBox ljung_box;
  BootstrapParams bootstrap;
};

/// Biased (divide-by-N) autocorrelation of the mean-removed series at lags
/// 0..max_lag, by segmented FFT cross-correlation.
[[nodiscard]] std::vector<double> acf(std::span<const double> x, std::size_t max_lag);

/// First k >= 1 with |rho(k)| < 2/sqrt(n); rho.size() - 1 when none is found.
[[nodiscard]] std::size_t k_star(std::span<const double> rho, std::size_t n, bool* found = nullptr);

/// max{1, 1 + 2 sum_{k=1}^{K*} rho(k)}.
[[nodiscard]] double tau_int(std::span<const double> rho, std::size_t k_star);

[[nodiscard]] LjungBox ljung_box(std::span<const double> rho, std::size_t n, std::size_t lags = 50);

/// ACF, K*, tau_int with a moving-block bootstrap CI, and Ljung-Box.
/// Needs at least 10 l_B samples.
[[nodiscard]] AutocorrReport autocorr_tau(std::span<const double> x, const AutocorrOptions& opts = {});

}  // namespace qrng::diagnostics
