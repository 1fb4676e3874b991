#include "qrng/diagnostics/ks.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "qrng/error.hpp"

namespace qrng::diagnostics {

double kolmogorov_q(double lambda) {
  // Below ~0.2 the alternating series converges too slowly and Q is 1 to double precision.
  if (lambda < 0.2) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) <= 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_uniform(std::span<const double> values) {
  if (values.empty()) throw ValidationError("KS test of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = std::clamp(v[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d), v.size()};
}

}  // namespace qrng::diagnostics
