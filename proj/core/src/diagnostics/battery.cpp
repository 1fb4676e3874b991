#include "qrng/diagnostics/battery.hpp"

#include <algorithm>
#include <array>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "qrng/diagnostics/ks.hpp"
#include "qrng/error.hpp"

namespace qrng::diagnostics {

namespace nist {

namespace {

double igamc(double a, double x) { return x <= 0.0 ? 1.0 : boost::math::gamma_q(a, x); }

double phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Pattern counts of overlapping m-bit windows with wraparound.
std::vector<std::size_t> pattern_counts(const std::vector<std::uint8_t>& bits, unsigned m) {
  std::vector<std::size_t> c(std::size_t{1} << m, 0);
  if (m == 0) return c;
  const std::size_t n = bits.size();
  const std::size_t mask = (std::size_t{1} << m) - 1;
  std::size_t w = 0;
  for (unsigned i = 0; i + 1 < m; ++i) w = (w << 1) | bits[i];
  for (std::size_t i = 0; i < n; ++i) {
    w = ((w << 1) | bits[(i + m - 1) % n]) & mask;
    ++c[w];
  }
  return c;
}

double psi2(const std::vector<std::uint8_t>& bits, unsigned m) {
  if (m == 0) return 0.0;
  const auto c = pattern_counts(bits, m);
  const double n = static_cast<double>(bits.size());
  double s = 0.0;
  for (auto v : c) s += static_cast<double>(v) * static_cast<double>(v);
  return s * std::ldexp(1.0, static_cast<int>(m)) / n - n;
}

double phi_m(const std::vector<std::uint8_t>& bits, unsigned m) {
  if (m == 0) return 0.0;
  const auto c = pattern_counts(bits, m);
  const double n = static_cast<double>(bits.size());
  double s = 0.0;
  for (auto v : c) {
    if (v) {
      const double pi = static_cast<double>(v) / n;
      s += pi * std::log(pi);
    }
  }
  return s;
}

}  // namespace

double monobit(const std::vector<std::uint8_t>& bits) {
  long s = 0;
  for (auto b : bits) s += b ? 1 : -1;
  const double obs = std::abs(static_cast<double>(s)) / std::sqrt(static_cast<double>(bits.size()));
  return std::erfc(obs / std::numbers::sqrt2);
}

double block_frequency(const std::vector<std::uint8_t>& bits, std::size_t m) {
  const std::size_t nblk = bits.size() / m;
  if (nblk == 0) throw ValidationError("block frequency test needs at least one block");
  double chi2 = 0.0;
  for (std::size_t i = 0; i < nblk; ++i) {
    std::size_t ones = 0;
    for (std::size_t k = 0; k < m; ++k) ones += bits[i * m + k];
    const double pi = static_cast<double>(ones) / static_cast<double>(m) - 0.5;
    chi2 += pi * pi;
  }
  chi2 *= 4.0 * static_cast<double>(m);
  return igamc(static_cast<double>(nblk) / 2.0, chi2 / 2.0);
}

double runs(const std::vector<std::uint8_t>& bits) {
  const double n = static_cast<double>(bits.size());
  std::size_t ones = 0;
  for (auto b : bits) ones += b;
  const double pi = static_cast<double>(ones) / n;
  if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(n)) return 0.0;
  std::size_t v = 1;
  for (std::size_t i = 0; i + 1 < bits.size(); ++i) v += bits[i] != bits[i + 1];
  const double num = std::abs(static_cast<double>(v) - 2.0 * n * pi * (1.0 - pi));
  return std::erfc(num / (2.0 * std::sqrt(2.0 * n) * pi * (1.0 - pi)));
}

double longest_run(const std::vector<std::uint8_t>& bits) {
  const std::size_t n = bits.size();
  std::size_t m = 0;
  unsigned lo = 0;
  std::vector<double> pi;
  if (n >= 750000) {
    m = 10000;
    lo = 10;
    pi = {0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727};
  } else if (n >= 6272) {
    m = 128;
    lo = 4;
    pi = {0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124};
  } else if (n >= 128) {
    m = 8;
    lo = 1;
    pi = {0.2148, 0.3672, 0.2305, 0.1875};
  } else {
    throw ValidationError("longest-run test needs at least 128 bits");
  }
  const std::size_t nblk = n / m;
  const std::size_t classes = pi.size();
  std::vector<double> v(classes, 0.0);
  for (std::size_t i = 0; i < nblk; ++i) {
    unsigned run = 0, best = 0;
    for (std::size_t k = 0; k < m; ++k) {
      run = bits[i * m + k] ? run + 1 : 0;
      best = std::max(best, run);
    }
    const std::size_t cls = best <= lo ? 0 : std::min<std::size_t>(best - lo, classes - 1);
    v[cls] += 1.0;
  }
  double chi2 = 0.0;
  const double nb = static_cast<double>(nblk);
  for (std::size_t i = 0; i < classes; ++i) chi2 += (v[i] - nb * pi[i]) * (v[i] - nb * pi[i]) / (nb * pi[i]);
  return igamc(static_cast<double>(classes - 1) / 2.0, chi2 / 2.0);
}

std::vector<double> serial(const std::vector<std::uint8_t>& bits, unsigned m) {
  if (m < 2) throw ValidationError("serial test needs m >= 2");
  const double p0 = psi2(bits, m), p1 = psi2(bits, m - 1), p2 = psi2(bits, m - 2);
  const double d1 = p0 - p1;
  const double d2 = p0 - 2.0 * p1 + p2;
  return {igamc(std::ldexp(1.0, static_cast<int>(m) - 2), d1 / 2.0),
          igamc(std::ldexp(1.0, static_cast<int>(m) - 3), d2 / 2.0)};
}

std::vector<double> cusum(const std::vector<std::uint8_t>& bits) {
  const std::size_t n = bits.size();
  auto pvalue = [n](double z) {
    const double nd = static_cast<double>(n);
    const double sn = std::sqrt(nd);
    double s1 = 0.0, s2 = 0.0;
    for (long k = static_cast<long>((-nd / z + 1.0) / 4.0); k <= static_cast<long>((nd / z - 1.0) / 4.0); ++k) {
      s1 += phi((4.0 * k + 1.0) * z / sn) - phi((4.0 * k - 1.0) * z / sn);
    }
    for (long k = static_cast<long>((-nd / z - 3.0) / 4.0); k <= static_cast<long>((nd / z - 1.0) / 4.0); ++k) {
      s2 += phi((4.0 * k + 3.0) * z / sn) - phi((4.0 * k + 1.0) * z / sn);
    }
    return std::clamp(1.0 - s1 + s2, 0.0, 1.0);
  };
  long s = 0, zf = 0;
  for (auto b : bits) {
    s += b ? 1 : -1;
    zf = std::max(zf, std::abs(s));
  }
  s = 0;
  long zb = 0;
  for (std::size_t i = n; i-- > 0;) {
    s += bits[i] ? 1 : -1;
    zb = std::max(zb, std::abs(s));
  }
  return {pvalue(static_cast<double>(std::max(zf, 1L))), pvalue(static_cast<double>(std::max(zb, 1L)))};
}

double approximate_entropy(const std::vector<std::uint8_t>& bits, unsigned m) {
  const double apen = phi_m(bits, m) - phi_m(bits, m + 1);
  const double chi2 = 2.0 * static_cast<double>(bits.size()) * (std::numbers::ln2 - apen);
  return igamc(std::ldexp(1.0, static_cast<int>(m) - 1), chi2 / 2.0);
}

std::vector<double> autocorrelation(const std::vector<std::uint8_t>& bits, std::size_t max_lag) {
  std::vector<double> p;
  const std::size_t n = bits.size();
  for (std::size_t d = 1; d <= max_lag; ++d) {
    std::size_t a = 0;
    for (std::size_t i = 0; i + d < n; ++i) a += bits[i] ^ bits[i + d];
    const double m = static_cast<double>(n - d);
    const double z = 2.0 * (static_cast<double>(a) - m / 2.0) / std::sqrt(m);
    p.push_back(std::erfc(std::abs(z) / std::numbers::sqrt2));
  }
  return p;
}

}  // namespace nist

bool BatteryReport::all_pass(double alpha) const {
  if (ks_p <= alpha) return false;
  return std::all_of(tests.begin(), tests.end(), [alpha](const TestResult& t) { return t.p > alpha; });
}

double BatteryReport::min_p() const {
  double m = ks_p;
  for (const auto& t : tests) m = std::min(m, t.p);
  return m;
}

BatteryReport test_battery(const BitStream& bits, std::size_t sequence_bits) {
  if (sequence_bits < 1000) throw ValidationError("battery sequences must hold at least 1000 bits");
  if (bits.size() < sequence_bits) {
    throw ValidationError("test battery needs at least " + std::to_string(sequence_bits) + " bits");
  }
  BatteryReport rep;
  rep.sequence_bits = sequence_bits;
  rep.sequences = bits.size() / sequence_bits;

  const std::array<const char*, 8> names{"monobit",       "block_frequency", "runs",
                                         "longest_run",   "serial",          "cumulative_sums",
                                         "approximate_entropy", "autocorrelation"};
  rep.tests.resize(names.size());
  for (std::size_t t = 0; t < names.size(); ++t) rep.tests[t].name = names[t];
  std::vector<std::size_t> arity(names.size(), 1);

  std::vector<std::uint8_t> seq(sequence_bits);
  for (std::size_t s = 0; s < rep.sequences; ++s) {
    const std::size_t base = s * sequence_bits;
    for (std::size_t i = 0; i < sequence_bits; ++i) seq[i] = bits.get(base + i);
    auto push = [&](std::size_t t, const std::vector<double>& ps) {
      arity[t] = ps.size();
      rep.tests[t].first_level.insert(rep.tests[t].first_level.end(), ps.begin(), ps.end());
    };
    push(0, {nist::monobit(seq)});
    push(1, {nist::block_frequency(seq)});
    push(2, {nist::runs(seq)});
    push(3, {nist::longest_run(seq)});
    push(4, nist::serial(seq));
    push(5, nist::cusum(seq));
    push(6, {nist::approximate_entropy(seq)});
    push(7, nist::autocorrelation(seq));
  }

  std::vector<double> pooled;
  for (std::size_t t = 0; t < rep.tests.size(); ++t) {
    auto& tr = rep.tests[t];
    pooled.insert(pooled.end(), tr.first_level.begin(), tr.first_level.end());
    const std::size_t k = arity[t];
    double mn = 1.0;
    if (rep.sequences == 1) {
      mn = *std::min_element(tr.first_level.begin(), tr.first_level.end());
    } else {
      // One KS per statistic across sequences; statistics of one test are not independent.
      std::vector<double> col(rep.sequences);
      for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t s = 0; s < rep.sequences; ++s) col[s] = tr.first_level[s * k + j];
        mn = std::min(mn, ks_uniform(col).p);
      }
    }
    tr.p = std::min(1.0, mn * static_cast<double>(k));
  }
  const auto ks = ks_uniform(pooled);
  rep.ks_p = ks.p;
  rep.ks_d = ks.d;
  return rep;
}

}  // namespace qrng::diagnostics
