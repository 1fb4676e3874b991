#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qrng::app {

struct GoldenCheck {
  std::string name;
  std::string measured;
  std::string expected;
  std::string tolerance;
  bool pass = false;
  /// True for rows whose result depends on the extractor seed.
  bool uses_seed = false;
  std::string note;
};

struct ReproduceOptions {
  /// Replaces the built-in public seed for the extractor rows.
  std::optional<std::filesystem::path> seed_file;
  unsigned workers = 1;
  /// Extracted bits fed to the battery row.
  std::size_t battery_bits = 10'000'000;
};

/// Every published-number check at desk scale. Failures are reported in the
/// table, never thrown.
[[nodiscard]] std::vector<GoldenCheck> reproduce_paper(const ReproduceOptions& opts = {});

[[nodiscard]] std::string format_table(const std::vector<GoldenCheck>& rows);

/// SHA-256 of the built-in public seed at the default dimensions.
extern const char* const kGoldenSeedDigest;
/// SHA-256 of the extractor output for the golden input.
extern const char* const kGoldenOutputDigest;

}  // namespace qrng::app
