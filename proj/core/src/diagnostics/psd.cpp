#include "qrng/diagnostics/psd.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "qrng/error.hpp"

namespace qrng::diagnostics {

namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
std::unique_ptr<T[], FftwFree> fftw_array(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwFree>(p);
}

}  // namespace

double PsdEstimate::integral() const {
  double s = 0.0;
  for (double v : psd) s += v;
  return s * delta_f;
}

PsdEstimate psd(std::span<const double> x, double f_s, std::size_t n_fft, std::size_t n_avg) {
  if (n_fft < 2 || n_fft % 2 != 0) throw ValidationError("n_fft must be even and >= 2");
  if (n_avg == 0) throw ValidationError("n_avg must be >= 1");
  if (!(f_s > 0.0)) throw ValidationError("sample rate must be positive");
  if (x.size() < n_fft * n_avg) {
    throw ValidationError("PSD needs n_fft * n_avg = " + std::to_string(n_fft * n_avg) + " samples, have " +
                          std::to_string(x.size()));
  }

  std::vector<double> w(n_fft);
  double w2 = 0.0;
  for (std::size_t i = 0; i < n_fft; ++i) {
    // Periodic Hann.
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_fft));
    w2 += w[i] * w[i];
  }

  const std::size_t nb = n_fft / 2 + 1;
  auto in = fftw_array<double>(n_fft);
  auto out = fftw_array<fftw_complex>(nb);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), in.get(), out.get(), FFTW_ESTIMATE);

  PsdEstimate est;
  est.n_fft = n_fft;
  est.n_avg = n_avg;
  est.f_s = f_s;
  est.delta_f = f_s / static_cast<double>(n_fft);
  est.enbw = 1.5 * est.delta_f;
  est.ci_db = 1.96 / std::sqrt(static_cast<double>(n_avg));
  est.psd.assign(nb, 0.0);

  for (std::size_t seg = 0; seg < n_avg; ++seg) {
    const double* src = x.data() + seg * n_fft;
    for (std::size_t i = 0; i < n_fft; ++i) in[i] = src[i] * w[i];
    fftw_execute(plan);
    for (std::size_t k = 0; k < nb; ++k) {
      const double m2 = out[k][0] * out[k][0] + out[k][1] * out[k][1];
      est.psd[k] += (k == 0 || k == nb - 1) ? m2 : 2.0 * m2;
    }
  }
  fftw_destroy_plan(plan);

  const double norm = 1.0 / (f_s * w2 * static_cast<double>(n_avg));
  est.freqs.resize(nb);
  est.psd_db.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    est.psd[k] *= norm;
    est.freqs[k] = static_cast<double>(k) * est.delta_f;
    est.psd_db[k] = est.psd[k] > 0.0 ? 10.0 * std::log10(est.psd[k]) : -std::numeric_limits<double>::infinity();
  }
  return est;
}

ChannelPsd psd(const source::SampleBlock& block, double step_x, double step_p, double f_s, std::size_t n_fft,
               std::size_t n_avg) {
  const auto vx = source::to_volts(block.codes_x, step_x);
  const auto vp = source::to_volts(block.codes_p, step_p);
  return {psd(vx, f_s, n_fft, n_avg), psd(vp, f_s, n_fft, n_avg)};
}

Qcnr qcnr(const PsdEstimate& on, const PsdEstimate& off, double band_lo, double band_hi) {
  if (on.freqs.size() != off.freqs.size() || on.delta_f != off.delta_f) {
    throw ValidationError("QCNR needs matching frequency grids");
  }
  if (on.freqs.empty() || band_lo < 0.0 || band_hi <= band_lo || band_hi > on.freqs.back() + 0.5 * on.delta_f) {
    throw ValidationError("QCNR band lies outside the frequency grid");
  }
  Qcnr q;
  double var_on = 0.0, var_off = 0.0;
  for (std::size_t k = 0; k < on.freqs.size(); ++k) {
    const double f = on.freqs[k];
    if (f < band_lo || f > band_hi) continue;
    q.power_on += on.psd[k];
    q.power_off += off.psd[k];
    var_on += on.psd[k] * on.psd[k];
    var_off += off.psd[k] * off.psd[k];
  }
  if (!(q.power_off > 0.0) || !(q.power_on > 0.0)) throw ValidationError("QCNR band holds no power");
  // Per-bin relative standard error 1/sqrt(M). Hann bins are not independent:
  // power correlations (2/3)^2 and (1/6)^2 at offsets 1 and 2 inflate the
  // variance of a band sum by 1 + 2 (4/9 + 1/36) = 35/18.
  constexpr double kHannBandVariance = 35.0 / 18.0;
  const double m_on = static_cast<double>(on.n_avg), m_off = static_cast<double>(off.n_avg);
  const double rel2 = kHannBandVariance * (var_on / (q.power_on * q.power_on) / m_on +
                                           var_off / (q.power_off * q.power_off) / m_off);
  q.db = 10.0 * std::log10(q.power_on / q.power_off);
  q.uncertainty_db = 1.96 * 10.0 / std::numbers::ln10 * std::sqrt(rel2);
  q.power_on *= on.delta_f;
  q.power_off *= off.delta_f;
  return q;
}

std::vector<Spike> find_spikes(const PsdEstimate& est, double threshold_db, std::size_t half_window) {
  std::vector<Spike> out;
  const std::size_t n = est.psd.size();
  std::vector<double> nb;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k > half_window ? k - half_window : 0;
    const std::size_t hi = std::min(n, k + half_window + 1);
    nb.clear();
    for (std::size_t i = lo; i < hi; ++i) {
      if (i != k) nb.push_back(est.psd[i]);
    }
    if (nb.empty()) continue;
    std::nth_element(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(nb.size() / 2), nb.end());
    const double med = nb[nb.size() / 2];
    if (!(med > 0.0) || !(est.psd[k] > 0.0)) continue;
    const double excess = 10.0 * std::log10(est.psd[k] / med);
    if (excess > threshold_db) out.push_back({est.freqs[k], excess});
  }
  return out;
}

}  // namespace qrng::diagnostics
