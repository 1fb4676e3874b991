#include "qrng/diagnostics/husimi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qrng/certify.hpp"
#include "qrng/error.hpp"

namespace qrng::diagnostics {

double HusimiHistogram::normalization() const {
  double s = 0.0;
  for (std::size_t i = 0; i < q_hat.size(); ++i) s += q_hat[i] * area[i];
  return 0.5 * s;
}

std::uint32_t HusimiHistogram::max_count() const {
  return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
}

HusimiHistogram husimi(std::span<const double> x, std::span<const double> p, double dx, double dp,
                       const HusimiOptions& opts) {
  if (x.size() != p.size()) throw ValidationError("Husimi histogram needs paired samples");
  if (x.empty()) throw ValidationError("Husimi histogram of an empty stream");
  if (!(dx > 0.0) || !(dp > 0.0)) throw ValidationError("Husimi bin sizes must be positive");

  HusimiHistogram h;
  h.deltap_x = dx;
  h.deltap_p = dp;
  h.n_total = x.size();
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sp = 0.0, ax = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sp += p[i];
    ax = std::max(ax, std::abs(x[i]));
    ap = std::max(ap, std::abs(p[i]));
  }
  h.mean_x = sx / n;
  h.mean_p = sp / n;
  double vx = 0.0, vp = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    vx += (x[i] - h.mean_x) * (x[i] - h.mean_x);
    vp += (p[i] - h.mean_p) * (p[i] - h.mean_p);
  }
  h.var_x = vx / (n - 1.0 > 0.0 ? n - 1.0 : 1.0);
  h.var_p = vp / (n - 1.0 > 0.0 ? n - 1.0 : 1.0);

  const double ex = std::max(opts.extent_sigma * std::sqrt(h.var_x), ax);
  const double ep = std::max(opts.extent_sigma * std::sqrt(h.var_p), ap);
  h.m0 = static_cast<long>(std::floor(-ex / dx));
  h.n0 = static_cast<long>(std::floor(-ep / dp));
  h.nx = static_cast<std::size_t>(static_cast<long>(std::floor(ex / dx)) - h.m0 + 1);
  h.np = static_cast<std::size_t>(static_cast<long>(std::floor(ep / dp)) - h.n0 + 1);
  if (static_cast<double>(h.nx) * static_cast<double>(h.np) > static_cast<double>(1ULL << 28)) {
    throw ValidationError("Husimi grid too large for the chosen resolutions");
  }

  h.counts.assign(h.bins(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto ix = static_cast<std::size_t>(static_cast<long>(std::floor(x[i] / dx)) - h.m0);
    const auto ip = static_cast<std::size_t>(static_cast<long>(std::floor(p[i] / dp)) - h.n0);
    ++h.counts[std::min(ix, h.nx - 1) * h.np + std::min(ip, h.np - 1)];
  }

  h.area.assign(h.bins(), dx * dp);
  if (opts.support) {
    const auto [xl, xh, pl, ph] = *opts.support;
    for (std::size_t ix = 0; ix < h.nx; ++ix) {
      const double a0 = static_cast<double>(h.m0 + static_cast<long>(ix)) * dx;
      const double wx = std::max(0.0, std::min(a0 + dx, xh) - std::max(a0, xl));
      for (std::size_t ip = 0; ip < h.np; ++ip) {
        const double b0 = static_cast<double>(h.n0 + static_cast<long>(ip)) * dp;
        const double wp = std::max(0.0, std::min(b0 + dp, ph) - std::max(b0, pl));
        h.area[ix * h.np + ip] = wx * wp;
      }
    }
  }

  h.q_hat.assign(h.bins(), 0.0);
  for (std::size_t i = 0; i < h.bins(); ++i) {
    if (h.counts[i] == 0) continue;
    if (!(h.area[i] > 0.0)) throw ValidationError("Husimi sample outside the support region");
    h.q_hat[i] = 2.0 * h.counts[i] / (n * h.area[i]);
  }
  return h;
}

Admissibility admissibility_check(const HusimiHistogram& h, double claimed_dx, double claimed_dp, double alpha) {
  if (h.n_total == 0) throw ValidationError("admissibility check of an empty histogram");
  Admissibility a;
  a.alpha = alpha;
  a.n_bins = static_cast<double>(h.bins());
  a.max_frequency = static_cast<double>(h.max_count()) / static_cast<double>(h.n_total);
  a.bound = std::min(claimed_dx * claimed_dp / (2.0 * std::numbers::pi), 1.0);
  a.slack = certify::chernoff_slack(a.bound, a.n_bins, alpha, static_cast<double>(h.n_total));
  a.threshold = a.bound + a.slack;
  a.pass = a.max_frequency <= a.threshold;
  return a;
}

}  // namespace qrng::diagnostics
