#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qrng/app/config.hpp"
#include "qrng/bitstream.hpp"
#include "qrng/calibration.hpp"
#include "qrng/certify.hpp"
#include "qrng/diagnostics/autocorr.hpp"
#include "qrng/diagnostics/battery.hpp"
#include "qrng/diagnostics/husimi.hpp"
#include "qrng/diagnostics/psd.hpp"
#include "qrng/source.hpp"

namespace qrng::app {

enum Stage : unsigned {
  kCalibrate = 1U << 0,
  kCertify = 1U << 1,
  kExtract = 1U << 2,
  kDiagnose = 1U << 3,
  kAllStages = kCalibrate | kCertify | kExtract | kDiagnose,
};

struct RunOptions {
  unsigned stages = kAllStages;
  bool write_files = true;
  /// Progress lines go here when set.
  std::ostream* log = nullptr;
};

struct DiagnosticsBundle {
  std::optional<diagnostics::ChannelPsd> psd_on;
  std::optional<diagnostics::Qcnr> qcnr_x;
  std::optional<diagnostics::Qcnr> qcnr_p;
  std::vector<diagnostics::Spike> spikes_x;
  std::vector<diagnostics::Spike> spikes_p;
  std::optional<diagnostics::AutocorrReport> autocorr_x;
  std::optional<diagnostics::AutocorrReport> autocorr_p;
  std::optional<diagnostics::Admissibility> husimi;
  std::optional<diagnostics::BatteryReport> battery;
  std::vector<std::string> skipped;
};

struct RunResult {
  int exit_code = 0;
  /// Stage-tagged messages; errors and admissibility failures included.
  std::vector<std::string> messages;
  std::optional<source::SampleBlock> block;
  std::optional<calibration::CalibrationFit> calibration;
  std::optional<calibration::Uncertainty> uncertainty;
  std::optional<certify::Certificate> certificate;
  std::string certificate_text;
  std::optional<BitStream> extracted;
  std::optional<DiagnosticsBundle> diagnostics;
  std::vector<std::filesystem::path> written;
};

/// Acquire (simulate or ingest), calibrate, decorrelate, certify, extract and
/// diagnose, as selected by `opts.stages`. Never throws for module errors: the
/// failure class becomes the exit code and the message is tagged with its stage.
[[nodiscard]] RunResult run_pipeline(const RunConfig& cfg, const RunOptions& opts = {});

/// Power-sweep CSV: `p_lo_W, var_x_V2, var_p_V2, n_samples` per line, `#` comments.
[[nodiscard]] std::vector<calibration::PowerSweepPoint> read_sweep_file(const std::filesystem::path& path);

/// Variance of each channel in volts over unclipped rounds.
[[nodiscard]] calibration::PowerSweepPoint measure_point(const source::SampleBlock& block, double p_lo,
                                                         double step_x, double step_p);

[[nodiscard]] std::string diagnostics_report(const DiagnosticsBundle& d);

}  // namespace qrng::app
