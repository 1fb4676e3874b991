#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qrng/bitstream.hpp"

namespace qrng::diagnostics {

/// Single-sequence statistics; each returns a p-value (several for the
/// multi-statistic tests). `bits` holds one 0/1 byte per bit.
namespace nist {
[[nodiscard]] double monobit(const std::vector<std::uint8_t>& bits);
[[nodiscard]] double block_frequency(const std::vector<std::uint8_t>& bits, std::size_t m = 128);
[[nodiscard]] double runs(const std::vector<std::uint8_t>& bits);
[[nodiscard]] double longest_run(const std::vector<std::uint8_t>& bits);
[[nodiscard]] std::vector<double> serial(const std::vector<std::uint8_t>& bits, unsigned m = 2);
[[nodiscard]] std::vector<double> cusum(const std::vector<std::uint8_t>& bits);
[[nodiscard]] double approximate_entropy(const std::vector<std::uint8_t>& bits, unsigned m = 2);
[[nodiscard]] std::vector<double> autocorrelation(const std::vector<std::uint8_t>& bits, std::size_t max_lag = 32);
}  // namespace nist

struct TestResult {
  std::string name;
  /// Bonferroni-adjusted minimum over the test's statistics. Each statistic
  /// contributes its p-value (one sequence) or a KS uniformity p across sequences.
  double p = 1.0;
  /// Sequence-major: statistic j of sequence s at [s * arity + j].
  std::vector<double> first_level;
};

struct BatteryReport {
  std::vector<TestResult> tests;
  std::size_t sequences = 0;
  std::size_t sequence_bits = 0;
  /// KS uniformity over every first-level p-value of every test.
  double ks_p = 1.0;
  double ks_d = 0.0;

  [[nodiscard]] bool all_pass(double alpha = 0.01) const;
  [[nodiscard]] double min_p() const;
};

inline constexpr std::size_t kBatterySequenceBits = 1'000'000;

/// Splits `bits` into sequences of `sequence_bits` and runs every test on each.
[[nodiscard]] BatteryReport test_battery(const BitStream& bits, std::size_t sequence_bits = kBatterySequenceBits);

}  // namespace qrng::diagnostics
