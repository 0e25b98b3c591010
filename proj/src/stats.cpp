#include "divmkt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace divmkt {

WilsonInterval wilson_interval(long successes, long trials, double z) {
  if (trials < 1) throw std::invalid_argument("wilson_interval: trials >= 1");
  if (successes < 0 || successes > trials)
    throw std::invalid_argument("wilson_interval: successes out of range");
  WilsonInterval w;
  w.successes = successes;
  w.trials = trials;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  w.p_hat = p;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  w.lo = std::max(0.0, center - half);
  w.hi = std::min(1.0, center + half);
  return w;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

double ks_statistic(std::vector<double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max(d, std::abs(f - (i + 1) / n));
    d = std::max(d, std::abs(f - i / n));
  }
  return d;
}

double ks_two_sample_pvalue(double d, std::size_t n, std::size_t m) {
  const double ne = static_cast<double>(n) * m / (n + m);
  return kolmogorov_sf(d * std::sqrt(ne));
}

double ks_one_sample_pvalue(double d, std::size_t n) {
  return kolmogorov_sf(d * std::sqrt(static_cast<double>(n)));
}

MeanEstimate mean_with_se(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_with_se: empty sample");
  MeanEstimate e;
  e.n = static_cast<long>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / e.n;
  double ss = 0.0;
  for (double x : xs) ss += (x - e.mean) * (x - e.mean);
  e.se = e.n > 1 ? std::sqrt(ss / (e.n - 1) / e.n) : 0.0;
  return e;
}

}  // namespace divmkt
