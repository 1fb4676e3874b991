#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qrng {

/// Linear-phase windowed-sinc (Hamming) bandpass with corners in Hz.
///
/// Taps are scaled to unit energy (sum of squares = 1) so that white input
/// keeps its variance after filtering. `hi_hz` at or above Nyquist yields a
/// pure highpass.
[[nodiscard]] std::vector<double> design_bandpass(std::size_t taps, double lo_hz, double hi_hz,
                                                  double fs_hz);

/// Output sample `n` of the FIR applied to `input` where input index i maps to
/// `input[i - first]`; `input` must cover [n - taps + 1, n].
[[nodiscard]] inline double fir_at(std::span<const double> taps, std::span<const double> history) {
  double acc = 0.0;
  const std::size_t n = taps.size();
  for (std::size_t k = 0; k < n; ++k) acc += taps[k] * history[n - 1 - k];
  return acc;
}

}  // namespace qrng
