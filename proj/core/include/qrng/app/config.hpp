#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrng/calibration.hpp"
#include "qrng/certify.hpp"
#include "qrng/diagnostics/autocorr.hpp"
#include "qrng/source.hpp"
#include "qrng/toeplitz.hpp"

namespace qrng::app {

struct SourceSection {
  source::SourceModel model;
  std::size_t rounds = 1U << 22;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::optional<std::filesystem::path> input;
  source::RawFormat input_format = source::RawFormat::qrngraw1;
  double input_f_s = 0.0;  // Hz, headerless input only
};

struct CalibrationSection {
  std::vector<double> sweep_powers{0.0, 2e-3, 4e-3, 6e-3, 8e-3, 10e-3, 12e-3, 15e-3};  // W
  std::size_t sweep_rounds = 200'000;
  std::optional<std::filesystem::path> sweep_file;
  calibration::FitModel model = calibration::FitModel::linear;
  double p_lo_err = 0.0;  // W, 95%
  double vpp_err = 0.0;   // V, 95%
  double enob_err = 0.0;  // bit, 95%
  std::optional<double> deltap_x;  // direct resolution inputs
  std::optional<double> deltap_p;
};

struct CertifySection {
  int eps_s_log2 = -64;
  int eps_pa_log2 = -64;
  int beta_log2 = -64;
  certify::Mode mode = certify::Mode::transform;
  std::uint64_t decimation = 1;
  std::uint64_t ell = 1272;  // bit
  std::uint64_t n_blocks = 1;  // blocks sharing the epsilon budget
};

struct ExtractorSection {
  std::size_t k_in = 2880;
  std::size_t b = 24;
  std::size_t n_s = 20;
  std::size_t n_b = 20;
  std::optional<std::filesystem::path> seed_file;
  bool seed_compat = false;
  std::uint64_t seed_key = 0x51a7ULL;  // public seed generator key when no file is given
  unsigned workers = 1;
  bool emulate_pipeline = false;
};

struct DiagnosticsSection {
  bool enabled = true;
  std::size_t n_fft = 1U << 18;
  std::size_t n_avg = 16;
  diagnostics::BootstrapParams bootstrap;
  std::size_t max_lag = 256;
  double husimi_extent = 5.0;
  double husimi_alpha = 1e-6;
  double qcnr_lo = 185e6;   // Hz
  double qcnr_hi = 1600e6;  // Hz
  bool husimi_gate = true;
  bool battery = true;
};

struct RunConfig {
  SourceSection source;
  CalibrationSection calibration;
  CertifySection certify;
  ExtractorSection extractor;
  DiagnosticsSection diagnostics;
  std::filesystem::path output_dir = "qrng_out";

  /// Extractor dimensions; j is the configured ell floored to a word multiple.
  [[nodiscard]] extractor::ToeplitzConfig toeplitz() const;

  /// Throws ValidationError listing every inconsistency.
  void validate() const;
};

/// `[section]` headers and `key = value [unit]` lines; `#` starts a comment.
/// Every physical quantity must carry a unit. Unknown keys are errors.
[[nodiscard]] RunConfig parse_config(std::string_view text, const std::string& origin = "<config>");
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

/// Operating point and budget of the reference device.
[[nodiscard]] RunConfig reference_defaults();

inline constexpr const char* kConfigEnv = "QRNG_CONFIG";

}  // namespace qrng::app
