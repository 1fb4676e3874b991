#pragma once

#include <cstddef>
#include <span>

namespace qrng::diagnostics {

struct KsResult {
  double d = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

/// Q_KS(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
[[nodiscard]] double kolmogorov_q(double lambda);

/// One-sample KS against U(0, 1); p via Q_KS((sqrt(n) + 0.12 + 0.11/sqrt(n)) D).
[[nodiscard]] KsResult ks_uniform(std::span<const double> values);

}  // namespace qrng::diagnostics
