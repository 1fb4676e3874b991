#include "qrng/fir.hpp"

#include <cmath>
#include <numbers>

#include "qrng/error.hpp"

namespace qrng {

namespace {

double sinc_lowpass(double cutoff_norm, double m) {
  // Ideal lowpass impulse response; cutoff_norm = fc / fs.
  if (m == 0.0) return 2.0 * cutoff_norm;
  return std::sin(2.0 * std::numbers::pi * cutoff_norm * m) / (std::numbers::pi * m);
}

}  // namespace

std::vector<double> design_bandpass(std::size_t taps, double lo_hz, double hi_hz, double fs_hz) {
  if (taps < 3 || taps % 2 == 0) throw ValidationError("FIR tap count must be odd and >= 3");
  if (!(lo_hz > 0.0) || !(hi_hz > lo_hz) || !(fs_hz > 0.0)) {
    throw ValidationError("FIR passband must satisfy 0 < lo < hi");
  }
  const double nyquist = fs_hz / 2.0;
  const double lo = lo_hz / fs_hz;
  const bool highpass_only = hi_hz >= nyquist;
  const double hi = highpass_only ? 0.5 : hi_hz / fs_hz;

  std::vector<double> h(taps);
  const double centre = static_cast<double>(taps - 1) / 2.0;
  for (std::size_t i = 0; i < taps; ++i) {
    const double m = static_cast<double>(i) - centre;
    const double window =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                               static_cast<double>(taps - 1));
    // Bandpass = lowpass(hi) - lowpass(lo); at hi = fs/2 the first term is a delta.
    const double upper = highpass_only ? (m == 0.0 ? 1.0 : 0.0) : sinc_lowpass(hi, m);
    h[i] = (upper - sinc_lowpass(lo, m)) * window;
  }

  double energy = 0.0;
  for (double v : h) energy += v * v;
  const double scale = 1.0 / std::sqrt(energy);
  for (double& v : h) v *= scale;
  return h;
}

}  // namespace qrng
