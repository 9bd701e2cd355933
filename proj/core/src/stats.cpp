#include "fedfence/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedfence {

MomentSummary summarize_moments(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("summarize_moments: need >= 2 samples");
  MomentSummary s;
  s.count = n;
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : samples) {
    double d = x - mean;
    double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  s.mean = mean;
  s.variance = m2;
  if (m2 > 0.0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return s;
}

namespace {

// Lower regularized gamma by series: P(a, x) = gamma(a, x) / Gamma(a).
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma by Lentz continued fraction.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0)
    throw std::invalid_argument("gamma_q: need a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_sf(double statistic, double dof) {
  if (statistic <= 0.0) return 1.0;
  return gamma_q(dof / 2.0, statistic / 2.0);
}

ChiSquareResult chi_square_uniform(const std::vector<u64>& counts) {
  if (counts.size() < 2)
    throw std::invalid_argument("chi_square_uniform: need >= 2 bins");
  double total = 0.0;
  for (u64 c : counts) total += static_cast<double>(c);
  if (total == 0.0)
    throw std::invalid_argument("chi_square_uniform: empty histogram");
  const double expected = total / static_cast<double>(counts.size());
  ChiSquareResult r;
  for (u64 c : counts) {
    double d = static_cast<double>(c) - expected;
    r.statistic += d * d / expected;
  }
  r.dof = static_cast<double>(counts.size() - 1);
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

ChiSquareResult chi_square_two_sample(const std::vector<u64>& a,
                                      const std::vector<u64>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("chi_square_two_sample: bin count mismatch");
  double na = 0.0, nb = 0.0;
  for (u64 c : a) na += static_cast<double>(c);
  for (u64 c : b) nb += static_cast<double>(c);
  if (na == 0.0 || nb == 0.0)
    throw std::invalid_argument("chi_square_two_sample: empty histogram");
  const double ra = std::sqrt(nb / na);
  const double rb = std::sqrt(na / nb);
  ChiSquareResult r;
  std::size_t used = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double ca = static_cast<double>(a[i]);
    double cb = static_cast<double>(b[i]);
    if (ca == 0.0 && cb == 0.0) continue;
    double d = ra * ca - rb * cb;
    r.statistic += d * d / (ca + cb);
    ++used;
  }
  if (used < 2)
    throw std::invalid_argument("chi_square_two_sample: too few occupied bins");
  r.dof = static_cast<double>(used - 1);
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

}  // namespace fedfence
