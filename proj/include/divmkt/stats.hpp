#pragma once

#include <functional>
#include <vector>

namespace divmkt {

/// Binomial proportion with a Wilson score interval.
struct WilsonInterval {
  double p_hat = 0.0;
  double lo = 0.0;
  double hi = 1.0;
  long successes = 0;
  long trials = 0;
};

WilsonInterval wilson_interval(long successes, long trials, double z = 1.959963984540054);

double normal_cdf(double x);

/// Kolmogorov survival function Q(lambda) = 2 * sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b| (copies are sorted).
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// One-sample KS statistic against a CDF.
double ks_statistic(std::vector<double> a, const std::function<double(double)>& cdf);

/// Asymptotic two-sample KS p-value.
double ks_two_sample_pvalue(double d, std::size_t n, std::size_t m);

/// Asymptotic one-sample KS p-value.
double ks_one_sample_pvalue(double d, std::size_t n);

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  long n = 0;
};

MeanEstimate mean_with_se(const std::vector<double>& xs);

}  // namespace divmkt
