#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrng/source.hpp"

namespace qrng::calibration {

struct PowerSweepPoint {
  double p_lo = 0.0;   // W
  double var_x = 0.0;  // V^2
  double var_p = 0.0;  // V^2
  std::size_t n_samples = 0;
};

enum class FitModel { linear, quadratic };

/// Weighted fit of variance = m * P + c (+ eta * P^2) for one channel.
struct ChannelFit {
  FitModel model = FitModel::linear;
  double m = 0.0;
  double c = 0.0;
  double eta = 0.0;
  // 95% half-widths.
  double ci_m = 0.0;
  double ci_c = 0.0;
  double ci_eta = 0.0;
  /// 1-sigma covariance of (m, c, eta); eta row/col is zero for linear fits.
  std::array<std::array<double, 3>, 3> cov{};
  /// Partial F-test p-value, quadratic vs linear. NaN with fewer than 4 powers.
  double lof_p = 1.0;
  double chi2 = 0.0;
  std::size_t dof = 0;

  [[nodiscard]] double predict(double p_lo) const { return m * p_lo + c + eta * p_lo * p_lo; }
  /// True when the quadratic term is significant at the 5% level.
  [[nodiscard]] bool eta_required() const { return lof_p < 0.05; }
};

/// Per-channel conversion to vacuum units at the operating point.
struct VacuumUnits {
  double enob = 0.0;
  double code_width = 0.0;   // Delta V_eff, V
  double alpha = 0.0;        // V per vacuum unit
  double variance_v = 0.0;   // operating-point voltage variance, V^2
  bool variance_measured = false;
  double sigma2 = 0.0;       // vacuum-unit variance
  double gamma = 1.0;
  double delta = 0.0;
  double deltap = 0.0;
};

struct Decorrelation {
  double rho_xp = 0.0;
  double rho_ci_lo = 0.0;
  double rho_ci_hi = 0.0;
  /// Row-major 2x2 orthonormal rotation; rows are covariance eigenvectors.
  std::array<double, 4> rotation{1.0, 0.0, 0.0, 1.0};
  double rho_out = 0.0;
  double dh_corr = 0.0;
  /// Input axis (0 = X, 1 = P) that dominates each output axis.
  std::array<int, 2> axis_source{0, 1};
  std::size_t rounds_used = 0;
};

struct CalibrationFit {
  ChannelFit x;
  ChannelFit p;
  double p_lo = 0.0;  // operating point, W
  double v_pp = 0.0;
  std::optional<VacuumUnits> vac_x;
  std::optional<VacuumUnits> vac_p;
  std::optional<Decorrelation> decorrelation;
  std::vector<std::string> warnings;

  [[nodiscard]] bool complete() const { return vac_x.has_value() && vac_p.has_value(); }
  /// Single-shot bound reduction log2(gamma_x * gamma_p).
  [[nodiscard]] double inflation_penalty() const;
};

/// Weighted least squares with Gaussian variance-of-variance weights
/// 2 sigma^4 / (n - 1), 95% CIs from the parameter covariance, and a
/// lack-of-fit F-test of the quadratic term.
[[nodiscard]] CalibrationFit fit_power_sweep(std::span<const PowerSweepPoint> points, FitModel model);

[[nodiscard]] ChannelFit fit_channel(std::span<const double> powers, std::span<const double> variances,
                                     std::span<const std::size_t> n_samples, FitModel model,
                                     std::vector<std::string>* warnings = nullptr);

struct OperatingVariance {
  double var_x = 0.0;
  double var_p = 0.0;
};

/// Completes `fit` with gains, resolutions and inflation factors. When
/// `measured` is absent the fitted curve is evaluated at `p_lo`.
[[nodiscard]] CalibrationFit vacuum_units(CalibrationFit fit, double p_lo, double v_pp, double enob_x,
                                          double enob_p,
                                          std::optional<OperatingVariance> measured = std::nullopt);

/// gamma = max{1, sqrt(2 sigma^2)}.
[[nodiscard]] double inflation_factor(double sigma2);

/// log2(gamma_x gamma_p) for vacuum-unit variances.
[[nodiscard]] double inflation_penalty(double sigma2_x, double sigma2_p);

/// -1/2 log2(1 - rho^2).
[[nodiscard]] double correlation_penalty(double rho);

struct DecorrelatedStream {
  std::vector<double> x;  // rotated vacuum-unit coordinates, clipped rounds removed
  std::vector<double> p;
  CalibrationFit fit;
};

inline constexpr std::size_t kMinDecorrelationRounds = 10000;

/// Converts codes to vacuum units and rotates into the covariance eigenbasis.
[[nodiscard]] DecorrelatedStream decorrelate(const source::SampleBlock& block, const CalibrationFit& fit);

/// Eigenbasis rotation of a symmetric 2x2 covariance, eigenvalues descending,
/// each row's first nonzero component positive.
[[nodiscard]] std::array<double, 4> eigen_rotation(double sxx, double sxp, double spp);

struct Uncertainty {
  double deltap_x = 0.0;
  double deltap_p = 0.0;
  double ci_deltap_x = 0.0;  // 95% half-widths
  double ci_deltap_p = 0.0;
  double h_min = 0.0;
  double ci_h_min = 0.0;
};

/// First-order propagation of (m, c, eta) covariances plus 95% half-widths of
/// P_LO, V_pp and ENOB (ENOB error common to both channels).
[[nodiscard]] Uncertainty propagate_uncertainty(const CalibrationFit& fit, double p_lo_err,
                                                double vpp_err, double enob_err);

/// Resolution chain for one channel; exposed for independent checks.
[[nodiscard]] double conservative_resolution(double m, double c, double eta, double p_lo, double v_pp,
                                             double enob);

}  // namespace qrng::calibration
