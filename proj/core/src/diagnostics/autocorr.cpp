#include "qrng/diagnostics/autocorr.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <complex>

#include "qrng/error.hpp"
#include "qrng/philox.hpp"

namespace qrng::diagnostics {

namespace {

std::vector<double> centred(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  std::vector<double> c(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c[i] = x[i] - mean;
  return c;
}

// Unnormalized lag sums sum_t x_t x_{t+k}, k = 0..K.
std::vector<double> lag_sums(const std::vector<double>& x, std::size_t K) {
  const std::size_t n = x.size();
  std::size_t seg = 1024;
  while (seg < 4 * (K + 1)) seg *= 2;
  seg = std::max(seg, std::min<std::size_t>(65536, std::bit_ceil(n)));
  const std::size_t m = 2 * seg;
  const std::size_t nc = m / 2 + 1;

  auto* a = fftw_alloc_real(m);
  auto* y = fftw_alloc_real(m);
  auto* fa = fftw_alloc_complex(nc);
  auto* fy = fftw_alloc_complex(nc);
  auto* r = fftw_alloc_real(m);
  fftw_plan pa = fftw_plan_dft_r2c_1d(static_cast<int>(m), a, fa, FFTW_ESTIMATE);
  fftw_plan py = fftw_plan_dft_r2c_1d(static_cast<int>(m), y, fy, FFTW_ESTIMATE);
  fftw_plan pr = fftw_plan_dft_c2r_1d(static_cast<int>(m), fa, r, FFTW_ESTIMATE);

  std::vector<double> sums(K + 1, 0.0);
  for (std::size_t s = 0; s < n; s += seg) {
    const std::size_t na = std::min(seg, n - s);
    const std::size_t ny = std::min(seg + K, n - s);
    std::fill(a, a + m, 0.0);
    std::fill(y, y + m, 0.0);
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(s), x.begin() + static_cast<std::ptrdiff_t>(s + na), a);
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(s), x.begin() + static_cast<std::ptrdiff_t>(s + ny), y);
    fftw_execute(pa);
    fftw_execute(py);
    for (std::size_t k = 0; k < nc; ++k) {
      const std::complex<double> ca(fa[k][0], -fa[k][1]);
      const std::complex<double> cy(fy[k][0], fy[k][1]);
      const auto p = ca * cy;
      fa[k][0] = p.real();
      fa[k][1] = p.imag();
    }
    fftw_execute(pr);
    for (std::size_t k = 0; k <= K; ++k) sums[k] += r[k] / static_cast<double>(m);
  }
  fftw_destroy_plan(pa);
  fftw_destroy_plan(py);
  fftw_destroy_plan(pr);
  fftw_free(a);
  fftw_free(y);
  fftw_free(fa);
  fftw_free(fy);
  fftw_free(r);
  return sums;
}

}  // namespace

std::vector<double> acf(std::span<const double> x, std::size_t max_lag) {
  if (x.size() < 2) throw ValidationError("ACF needs at least two samples");
  max_lag = std::min(max_lag, x.size() - 1);
  const auto c = centred(x);
  auto s = lag_sums(c, max_lag);
  if (!(s[0] > 0.0)) throw ValidationError("ACF undefined for a constant stream");
  const double s0 = s[0];
  for (double& v : s) v /= s0;
  return s;
}

std::size_t k_star(std::span<const double> rho, std::size_t n, bool* found) {
  const double thr = 2.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t k = 1; k < rho.size(); ++k) {
    if (std::abs(rho[k]) < thr) {
      if (found) *found = true;
      return k;
    }
  }
  if (found) *found = false;
  return rho.empty() ? 0 : rho.size() - 1;
}

double tau_int(std::span<const double> rho, std::size_t ks) {
  double s = 0.0;
  for (std::size_t k = 1; k <= ks && k < rho.size(); ++k) s += rho[k];
  return std::max(1.0, 1.0 + 2.0 * s);
}

LjungBox ljung_box(std::span<const double> rho, std::size_t n, std::size_t lags) {
  lags = std::min(lags, rho.size() - 1);
  if (lags == 0) throw ValidationError("Ljung-Box needs at least one lag");
  const double nd = static_cast<double>(n);
  double q = 0.0;
  for (std::size_t k = 1; k <= lags; ++k) q += rho[k] * rho[k] / (nd - static_cast<double>(k));
  q *= nd * (nd + 2.0);
  const boost::math::chi_squared dist(static_cast<double>(lags));
  return {q, boost::math::cdf(boost::math::complement(dist, q)), lags};
}

AutocorrReport autocorr_tau(std::span<const double> x, const AutocorrOptions& opts) {
  const auto& bp = opts.bootstrap;
  if (bp.block_len == 0 || bp.resamples == 0) throw ValidationError("bootstrap sizes must be positive");
  if (x.size() < 10 * bp.block_len) {
    throw ValidationError("autocorrelation needs at least 10 * l_B = " + std::to_string(10 * bp.block_len) +
                          " samples");
  }
  const std::size_t n = x.size();
  const auto c = centred(x);
  const std::size_t lag_cap = std::min(std::max(opts.max_lag, opts.ljung_box_lags), n - 1);
  auto sums = lag_sums(c, lag_cap);
  if (!(sums[0] > 0.0)) throw ValidationError("ACF undefined for a constant stream");

  AutocorrReport rep;
  rep.n = n;
  rep.bootstrap = bp;
  rep.rho.resize(sums.size());
  for (std::size_t k = 0; k < sums.size(); ++k) rep.rho[k] = sums[k] / sums[0];
  rep.rho[0] = 1.0;
  rep.k_star = k_star(rep.rho, n, &rep.k_star_found);
  rep.tau_int = tau_int(rep.rho, rep.k_star);
  rep.ljung_box = ljung_box(rep.rho, n, opts.ljung_box_lags);

  // Moving-block bootstrap. Block starts lie on a lattice of stride g | l_B so
  // within-block lag sums come from lattice prefix sums plus end corrections;
  // products across block junctions are left out.
  const std::size_t lb = bp.block_len;
  std::size_t g = std::max<std::size_t>(1, lb / 16);
  while (lb % g != 0) --g;
  const std::size_t kb = std::min({lag_cap, lb - 1, std::max<std::size_t>(32, 4 * rep.k_star)});
  const std::size_t q_count = n / g + 1;  // lattice points 0, g, ..., <= n
  std::vector<double> prefix(q_count * (kb + 1), 0.0);
  std::vector<double> run(kb + 1, 0.0);
  for (std::size_t q = 0, u = 0; q < q_count; ++q) {
    const std::size_t stop = std::min(n, q * g);
    for (; u < stop; ++u) {
      const std::size_t kmax = std::min(kb, n - 1 - u);
      for (std::size_t k = 0; k <= kmax; ++k) run[k] += c[u] * c[u + k];
    }
    std::copy(run.begin(), run.end(), prefix.begin() + static_cast<std::ptrdiff_t>(q * (kb + 1)));
  }
  // end[q][k]: terms u in [qg - k, qg) whose partner u + k crosses qg.
  std::vector<double> ends(q_count * (kb + 1), 0.0);
  for (std::size_t q = 1; q < q_count; ++q) {
    const std::size_t e = q * g;
    if (e > n) break;
    for (std::size_t k = 1; k <= kb; ++k) {
      double s = 0.0;
      for (std::size_t u = e >= k ? e - k : 0; u < e; ++u) {
        if (u + k < n) s += c[u] * c[u + k];
      }
      ends[q * (kb + 1) + k] = s;
    }
  }

  const std::size_t blocks = n / lb;
  const std::size_t starts = (n - lb) / g + 1;
  const std::size_t step = lb / g;
  const std::size_t n_r = blocks * lb;
  PhiloxEngine eng(bp.seed, 0xb007U);
  std::vector<double> taus(bp.resamples);
  std::vector<double> acc(kb + 1);
  for (std::size_t r = 0; r < bp.resamples; ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < blocks; ++i) {
      const std::size_t q0 = eng.below(starts);
      const std::size_t q1 = q0 + step;
      const double* p0 = &prefix[q0 * (kb + 1)];
      const double* p1 = &prefix[q1 * (kb + 1)];
      const double* e1 = &ends[q1 * (kb + 1)];
      for (std::size_t k = 0; k <= kb; ++k) acc[k] += p1[k] - e1[k] - p0[k];
    }
    std::vector<double> rho(kb + 1);
    for (std::size_t k = 0; k <= kb; ++k) rho[k] = acc[k] / acc[0];
    taus[r] = tau_int(rho, k_star(rho, n_r));
  }
  std::sort(taus.begin(), taus.end());
  const double bd = static_cast<double>(bp.resamples);
  const auto lo_i = static_cast<std::size_t>(std::floor(0.025 * bd));
  const auto hi_i = std::min(bp.resamples - 1, static_cast<std::size_t>(std::ceil(0.975 * bd)) - 1);
  rep.ci_lo = taus[lo_i];
  rep.ci_hi = taus[hi_i];
  return rep;
}

}  // namespace qrng::diagnostics
