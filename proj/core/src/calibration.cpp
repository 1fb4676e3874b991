#include "qrng/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>
#include <numbers>
#include <set>

#include "qrng/certify.hpp"
#include "qrng/error.hpp"

namespace qrng::calibration {

namespace {

constexpr double kZ95 = 1.959963984540054;

struct WlsResult {
  Eigen::VectorXd coef;
  Eigen::MatrixXd cov;
  double chi2 = 0.0;
};

WlsResult weighted_least_squares(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> w, int order) {
  const auto n = static_cast<Eigen::Index>(x.size());
  const int k = order + 1;
  Eigen::MatrixXd a(n, k);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sw = std::sqrt(w[i]);
    double pw = 1.0;
    for (int j = 0; j < k; ++j) {
      a(i, j) = sw * pw;
      pw *= x[i];
    }
    b(i) = sw * y[i];
  }
  // Column equilibration keeps the P^2 column from dominating the conditioning.
  Eigen::VectorXd scale(k);
  for (int j = 0; j < k; ++j) {
    scale(j) = a.col(j).norm();
    if (scale(j) == 0.0) throw ValidationError("calibration fit: rank-deficient design");
    a.col(j) /= scale(j);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < k) throw ValidationError("calibration fit: rank-deficient design");

  WlsResult r;
  Eigen::VectorXd z = qr.solve(b);
  r.coef = z.cwiseQuotient(scale);
  const Eigen::MatrixXd normal = a.transpose() * a;
  Eigen::MatrixXd inv = normal.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  r.cov = inv.cwiseQuotient(scale * scale.transpose());
  const Eigen::VectorXd resid = b - a * z;
  r.chi2 = resid.squaredNorm();
  return r;
}

double lack_of_fit_p(double chi2_lin, double chi2_quad, std::size_t n, double scale) {
  const double drop = std::max(0.0, chi2_lin - chi2_quad);
  const double tiny = 1e-24 * scale;
  if (chi2_quad <= tiny) return drop <= tiny ? 1.0 : 0.0;
  const double dof = static_cast<double>(n - 3);
  const double f = drop / (chi2_quad / dof);
  const boost::math::fisher_f dist(1.0, dof);
  return boost::math::cdf(boost::math::complement(dist, f));
}

}  // namespace

double CalibrationFit::inflation_penalty() const {
  if (!complete()) throw ValidationError("calibration fit has no vacuum-unit conversion");
  return std::log2(vac_x->gamma * vac_p->gamma);
}

ChannelFit fit_channel(std::span<const double> powers, std::span<const double> variances,
                       std::span<const std::size_t> n_samples, FitModel model,
                       std::vector<std::string>* warnings) {
  const std::size_t n = powers.size();
  if (variances.size() != n || n_samples.size() != n) {
    throw ValidationError("calibration fit: mismatched sweep arrays");
  }
  const std::set<double> distinct(powers.begin(), powers.end());
  const std::size_t need = model == FitModel::linear ? 3 : 4;
  if (distinct.size() < need) {
    throw ValidationError("calibration fit: need at least " + std::to_string(need) +
                          " distinct LO powers");
  }
  double vmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (powers[i] < 0.0) throw ValidationError("calibration fit: negative LO power");
    if (variances[i] < 0.0) throw ValidationError("calibration fit: negative variance");
    if (n_samples[i] < 2) throw ValidationError("calibration fit: n_samples must be >= 2");
    vmax = std::max(vmax, variances[i]);
  }

  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = vmax > 0.0 ? std::max(variances[i], 1e-12 * vmax) : 1.0;
    w[i] = static_cast<double>(n_samples[i] - 1) / (2.0 * v * v);
  }

  const auto lin = weighted_least_squares(powers, variances, w, 1);
  std::optional<WlsResult> quad;
  if (distinct.size() >= 4) quad = weighted_least_squares(powers, variances, w, 2);

  ChannelFit fit;
  fit.model = model;
  double yscale = 0.0;
  for (std::size_t i = 0; i < n; ++i) yscale += w[i] * variances[i] * variances[i];
  fit.lof_p = quad ? lack_of_fit_p(lin.chi2, quad->chi2, n, yscale)
                   : std::numeric_limits<double>::quiet_NaN();

  const WlsResult& chosen = model == FitModel::linear ? lin : *quad;
  fit.c = chosen.coef(0);
  fit.m = chosen.coef(1);
  fit.eta = model == FitModel::quadratic ? chosen.coef(2) : 0.0;
  fit.chi2 = chosen.chi2;
  fit.dof = n - static_cast<std::size_t>(chosen.coef.size());
  // cov is ordered (m, c, eta) while the design is (c, m, eta).
  const int idx[3] = {1, 0, 2};
  const auto k = chosen.coef.size();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      fit.cov[i][j] = (idx[i] < k && idx[j] < k) ? chosen.cov(idx[i], idx[j]) : 0.0;
    }
  }
  fit.ci_m = kZ95 * std::sqrt(fit.cov[0][0]);
  fit.ci_c = kZ95 * std::sqrt(fit.cov[1][1]);
  fit.ci_eta = kZ95 * std::sqrt(fit.cov[2][2]);

  if (fit.c < 0.0) {
    if (warnings) warnings->push_back("fitted offset c < 0 clamped to 0");
    fit.c = 0.0;
  }
  return fit;
}

CalibrationFit fit_power_sweep(std::span<const PowerSweepPoint> points, FitModel model) {
  std::vector<double> powers, vx, vp;
  std::vector<std::size_t> ns;
  for (const auto& pt : points) {
    powers.push_back(pt.p_lo);
    vx.push_back(pt.var_x);
    vp.push_back(pt.var_p);
    ns.push_back(pt.n_samples);
  }
  CalibrationFit fit;
  if (std::none_of(powers.begin(), powers.end(), [](double p) { return p == 0.0; })) {
    fit.warnings.push_back("sweep has no LO-off (P = 0) point; offset is extrapolated");
  }
  std::vector<std::string> wx, wp;
  fit.x = fit_channel(powers, vx, ns, model, &wx);
  fit.p = fit_channel(powers, vp, ns, model, &wp);
  for (auto& w : wx) fit.warnings.push_back("X: " + w);
  for (auto& w : wp) fit.warnings.push_back("P: " + w);
  if (fit.x.eta_required()) fit.warnings.push_back("X: quadratic (RIN) term significant");
  if (fit.p.eta_required()) fit.warnings.push_back("P: quadratic (RIN) term significant");
  return fit;
}

double inflation_factor(double sigma2) { return std::max(1.0, std::sqrt(2.0 * sigma2)); }

double inflation_penalty(double sigma2_x, double sigma2_p) {
  return 0.5 * std::log2(std::max(1.0, 2.0 * sigma2_x)) +
         0.5 * std::log2(std::max(1.0, 2.0 * sigma2_p));
}

double correlation_penalty(double rho) { return -0.5 * std::log2(1.0 - rho * rho); }

namespace {

VacuumUnits complete_channel(const ChannelFit& f, double p_lo, double v_pp, double enob,
                             std::optional<double> measured, const char* name,
                             std::vector<std::string>& warnings) {
  VacuumUnits v;
  v.enob = enob;
  v.code_width = source::effective_code_width(v_pp, enob);
  v.alpha = std::sqrt(2.0 * f.m * p_lo);
  if (!(v.alpha > 0.0)) throw ValidationError("vacuum units: slope must be positive");
  v.variance_measured = measured.has_value();
  v.variance_v = measured.value_or(f.predict(p_lo));
  v.sigma2 = v.variance_v / (v.alpha * v.alpha);
  if (v.sigma2 < 0.5) {
    warnings.push_back(std::string(name) + ": sub-vacuum variance " + std::to_string(v.sigma2) +
                       ", gamma clamped to 1");
  }
  v.gamma = inflation_factor(v.sigma2);
  v.delta = v.code_width / v.alpha;
  v.deltap = v.gamma * v.delta;
  return v;
}

}  // namespace

CalibrationFit vacuum_units(CalibrationFit fit, double p_lo, double v_pp, double enob_x,
                            double enob_p, std::optional<OperatingVariance> measured) {
  if (!(p_lo > 0.0)) throw ValidationError("vacuum units: operating LO power must be > 0");
  if (!(v_pp > 0.0)) throw ValidationError("vacuum units: v_pp must be > 0");
  fit.p_lo = p_lo;
  fit.v_pp = v_pp;
  std::optional<double> mx, mp;
  if (measured) {
    mx = measured->var_x;
    mp = measured->var_p;
  }
  fit.vac_x = complete_channel(fit.x, p_lo, v_pp, enob_x, mx, "X", fit.warnings);
  fit.vac_p = complete_channel(fit.p, p_lo, v_pp, enob_p, mp, "P", fit.warnings);
  return fit;
}

std::array<double, 4> eigen_rotation(double sxx, double sxp, double spp) {
  Eigen::Matrix2d s;
  s << sxx, sxp, sxp, spp;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(s);
  // Eigen sorts ascending; the first row takes the larger eigenvalue.
  Eigen::Vector2d r0 = es.eigenvectors().col(1);
  if (r0(0) < 0.0 || (r0(0) == 0.0 && r0(1) < 0.0)) r0 = -r0;
  // Second row completes a proper rotation (det = +1).
  const Eigen::Vector2d r1(-r0(1), r0(0));
  return {r0(0), r0(1), r1(0), r1(1)};
}

DecorrelatedStream decorrelate(const source::SampleBlock& block, const CalibrationFit& fit) {
  if (!fit.complete()) throw ValidationError("decorrelate: calibration fit lacks vacuum units");
  const double sx = fit.vac_x->code_width / fit.vac_x->alpha;
  const double sp = fit.vac_p->code_width / fit.vac_p->alpha;

  DecorrelatedStream out;
  out.x.reserve(block.round_count());
  out.p.reserve(block.round_count());
  for (std::size_t i = 0; i < block.round_count(); ++i) {
    if (block.clip_mask[i]) continue;
    out.x.push_back(block.codes_x[i] * sx);
    out.p.push_back(block.codes_p[i] * sp);
  }
  const std::size_t n = out.x.size();
  if (n < kMinDecorrelationRounds) {
    throw ValidationError("decorrelate: need at least 10^4 unclipped rounds");
  }

  auto moments = [n](const std::vector<double>& a, const std::vector<double>& b) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ma += a[i];
      mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sab = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double da = a[i] - ma, db = b[i] - mb;
      saa += da * da;
      sab += da * db;
      sbb += db * db;
    }
    const double d = static_cast<double>(n - 1);
    return std::array<double, 3>{saa / d, sab / d, sbb / d};
  };

  const auto [sxx, sxp, spp] = moments(out.x, out.p);
  if (!(sxx > 0.0) || !(spp > 0.0)) throw ValidationError("decorrelate: degenerate covariance");

  Decorrelation d;
  d.rounds_used = n;
  d.rho_xp = sxp / std::sqrt(sxx * spp);
  const double z = std::atanh(d.rho_xp);
  const double se = 1.0 / std::sqrt(static_cast<double>(n) - 3.0);
  d.rho_ci_lo = std::tanh(z - kZ95 * se);
  d.rho_ci_hi = std::tanh(z + kZ95 * se);
  d.rotation = eigen_rotation(sxx, sxp, spp);
  const auto& r = d.rotation;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = out.x[i], b = out.p[i];
    out.x[i] = r[0] * a + r[1] * b;
    out.p[i] = r[2] * a + r[3] * b;
  }
  const auto [txx, txp, tpp] = moments(out.x, out.p);
  d.rho_out = txp / std::sqrt(txx * tpp);
  d.dh_corr = correlation_penalty(d.rho_out);
  d.axis_source = {std::abs(r[0]) >= std::abs(r[1]) ? 0 : 1,
                   std::abs(r[2]) >= std::abs(r[3]) ? 0 : 1};

  out.fit = fit;
  out.fit.decorrelation = d;
  return out;
}

double conservative_resolution(double m, double c, double eta, double p_lo, double v_pp, double enob) {
  const double alpha = std::sqrt(2.0 * m * p_lo);
  const double sigma2 = (m * p_lo + c + eta * p_lo * p_lo) / (alpha * alpha);
  return inflation_factor(sigma2) * source::effective_code_width(v_pp, enob) / alpha;
}

namespace {

// d ln(deltap) / d(m, c, eta, P, v_pp, enob) for one channel.
std::array<double, 6> log_gradient(const ChannelFit& f, const VacuumUnits& v, double p_lo,
                                   double v_pp) {
  std::array<double, 6> g{};
  g[0] = -0.5 / f.m;
  g[3] = -0.5 / p_lo;
  if (v.gamma > 1.0) {
    // ln gamma = 1/2 ln V - 1/2 ln(m P); V is fixed when it was measured directly.
    g[0] -= 0.5 / f.m;
    g[3] -= 0.5 / p_lo;
    if (!v.variance_measured) {
      const double var = v.variance_v;
      g[0] += 0.5 * p_lo / var;
      g[1] += 0.5 / var;
      g[2] += 0.5 * p_lo * p_lo / var;
      g[3] += 0.5 * (f.m + 2.0 * f.eta * p_lo) / var;
    }
  }
  g[4] = 1.0 / v_pp;
  g[5] = -std::numbers::ln2;
  return g;
}

}  // namespace

Uncertainty propagate_uncertainty(const CalibrationFit& fit, double p_lo_err, double vpp_err,
                                  double enob_err) {
  if (!fit.complete()) throw ValidationError("propagate_uncertainty: fit is incomplete");
  const auto gx = log_gradient(fit.x, *fit.vac_x, fit.p_lo, fit.v_pp);
  const auto gp = log_gradient(fit.p, *fit.vac_p, fit.p_lo, fit.v_pp);

  // Work in 1-sigma units; shared inputs are fully correlated across channels.
  const double sd_p = p_lo_err / kZ95;
  const double sd_v = vpp_err / kZ95;
  const double sd_e = enob_err / kZ95;

  auto quad_form = [](const std::array<double, 6>& g, const ChannelFit& f) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s += g[i] * f.cov[i][j] * g[j];
    return s;
  };
  auto shared = [&](const std::array<double, 6>& a, const std::array<double, 6>& b) {
    return a[3] * b[3] * sd_p * sd_p + a[4] * b[4] * sd_v * sd_v + a[5] * b[5] * sd_e * sd_e;
  };

  const double var_lx = quad_form(gx, fit.x) + shared(gx, gx);
  const double var_lp = quad_form(gp, fit.p) + shared(gp, gp);
  // Channels share (P, v_pp, ENOB) but have independent fits.
  const double cov_lxlp = shared(gx, gp);

  Uncertainty u;
  u.deltap_x = fit.vac_x->deltap;
  u.deltap_p = fit.vac_p->deltap;
  u.ci_deltap_x = kZ95 * u.deltap_x * std::sqrt(var_lx);
  u.ci_deltap_p = kZ95 * u.deltap_p * std::sqrt(var_lp);
  u.h_min = certify::hmin_per_round(u.deltap_x, u.deltap_p);
  const bool saturated = u.deltap_x * u.deltap_p >= 2.0 * std::numbers::pi;
  const double var_h = (var_lx + var_lp + 2.0 * cov_lxlp) / (std::numbers::ln2 * std::numbers::ln2);
  u.ci_h_min = saturated ? 0.0 : kZ95 * std::sqrt(var_h);
  return u;
}

}  // namespace qrng::calibration
