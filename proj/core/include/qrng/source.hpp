#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace qrng::source {

inline constexpr int kAdcBits = 12;
inline constexpr std::int16_t kCodeMin = -2048;
inline constexpr std::int16_t kCodeMax = 2047;

/// Detector + front-end model for both heterodyne channels.
///
/// Voltage variance per channel is m * p_lo + c + eta * p_lo^2. The analog
/// chain is a bandpass FIR applied to white Gaussian voltage noise, followed
/// by a mid-tread quantizer of step v_pp / 2^enob.
struct SourceModel {
  double m_x = 2.41e-1;   // V^2/W
  double m_p = 2.33e-1;   // V^2/W
  double c_x = 4.35e-4;   // V^2
  double c_p = 5.60e-4;   // V^2
  double eta_x = 0.0;     // V^2/W^2
  double eta_p = 0.0;     // V^2/W^2
  double p_lo = 8.4e-3;   // W
  double f_s = 3.2e9;     // Hz
  double passband_lo = 185e6;   // Hz
  double passband_hi = 1650e6;  // Hz
  std::size_t filter_taps = 127;  // 0 disables band-limitation
  double v_pp = 0.5;      // V
  double enob_x = 10.2;
  double enob_p = 10.3;
  int adc_bits = kAdcBits;
  double rho_xp = 0.0;    // imposed X/P correlation of the voltage noise

  [[nodiscard]] double variance_x() const { return m_x * p_lo + c_x + eta_x * p_lo * p_lo; }
  [[nodiscard]] double variance_p() const { return m_p * p_lo + c_p + eta_p * p_lo * p_lo; }
  [[nodiscard]] double code_step_x() const;
  [[nodiscard]] double code_step_p() const;
  [[nodiscard]] bool filtered() const { return filter_taps > 0; }
};

/// Throws ValidationError on invariant violations; returns non-fatal warnings.
std::vector<std::string> validate(const SourceModel& model);

/// Effective code width v_pp / 2^enob.
[[nodiscard]] double effective_code_width(double v_pp, double enob);

/// Round-half-away-from-zero, clamped to the 12-bit rails.
[[nodiscard]] std::int16_t quantize(double volts, double step) noexcept;

[[nodiscard]] constexpr bool is_rail(std::int16_t code) noexcept {
  return code == kCodeMin || code == kCodeMax;
}

enum class Origin : std::uint8_t { synthetic, ingested };

struct SampleBlock {
  std::vector<std::int16_t> codes_x;
  std::vector<std::int16_t> codes_p;
  std::vector<std::uint8_t> clip_mask;
  Origin origin = Origin::synthetic;
  std::uint64_t f_s_hz = 0;

  [[nodiscard]] std::size_t round_count() const noexcept { return codes_x.size(); }
  [[nodiscard]] std::size_t clipped_count() const noexcept;

  /// Builds a block, derives clip flags from rail codes and checks ranges.
  static SampleBlock from_codes(std::vector<std::int16_t> x, std::vector<std::int16_t> p,
                                Origin origin, std::uint64_t f_s_hz);

  /// Rounds [first, first+count) as a new block.
  [[nodiscard]] SampleBlock slice(std::size_t first, std::size_t count) const;

  /// Every `factor`-th round, starting at round 0.
  [[nodiscard]] SampleBlock decimate(std::size_t factor) const;

  friend bool operator==(const SampleBlock&, const SampleBlock&) = default;
};

/// Continuous (pre-quantization) voltages for rounds [first, first+count).
struct VoltageStream {
  std::vector<double> x;
  std::vector<double> p;
};

[[nodiscard]] VoltageStream synthesize_voltages(const SourceModel& model, std::uint64_t seed,
                                                std::uint64_t first, std::size_t count);

/// Deterministic synthetic acquisition. Output is identical for any worker count.
[[nodiscard]] SampleBlock simulate(const SourceModel& model, std::size_t rounds, std::uint64_t seed,
                                   unsigned workers = 1);

/// `qrngraw1`: 32-byte header + little-endian i16 X/P pairs.
/// `interleaved_i16`: headerless i16 X/P pairs; f_s must be supplied by the caller.
enum class RawFormat { qrngraw1, interleaved_i16 };

inline constexpr std::size_t kRawHeaderBytes = 32;
inline constexpr std::uint16_t kRawVersion = 1;

void write_raw(const std::filesystem::path& path, const SampleBlock& block,
               RawFormat format = RawFormat::qrngraw1);

[[nodiscard]] SampleBlock ingest(const std::filesystem::path& path,
                                 RawFormat format = RawFormat::qrngraw1,
                                 std::uint64_t f_s_hz = 0);

/// Codes scaled to volts.
[[nodiscard]] std::vector<double> to_volts(std::span<const std::int16_t> codes, double step);

}  // namespace qrng::source
