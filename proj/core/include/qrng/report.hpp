#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qrng/calibration.hpp"

namespace qrng::report {

/// Line-oriented `key = value unit [+- ci]` text.
class KvReport {
 public:
  explicit KvReport(std::string title) : title_(std::move(title)) {}

  void add(const std::string& key, double value, const std::string& unit = "",
           std::optional<double> ci = std::nullopt);
  void add(const std::string& key, const std::string& text);
  void comment(const std::string& text);

  [[nodiscard]] std::string str() const;

 private:
  std::string title_;
  std::vector<std::string> lines_;
};

[[nodiscard]] std::string format_number(double v);

[[nodiscard]] std::string calibration_report(const calibration::CalibrationFit& fit);

void write_text(const std::filesystem::path& path, const std::string& text);
[[nodiscard]] std::string read_text(const std::filesystem::path& path);

}  // namespace qrng::report
