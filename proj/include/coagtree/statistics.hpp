#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace coagtree {

struct SampleSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  double mean_sq = 0.0;
  double se = 0.0;
};

SampleSummary summarize(std::span<const double> xs);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 0;
};

/// P(K > x) for the Kolmogorov distribution.
double kolmogorov_q(double x);

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);
TestResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf);

/// Goodness of fit for counts against category probabilities. Categories
/// with expected count below `min_expected` are pooled together.
TestResult chi_square_gof(std::span<const double> observed, std::span<const double> probabilities,
                          double min_expected = 5.0);

/// Two-sample homogeneity test on a 2 x k contingency table.
TestResult chi_square_homogeneity(std::span<const double> a, std::span<const double> b);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace coagtree
