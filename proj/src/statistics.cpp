#include "coagtree/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace coagtree {

SampleSummary summarize(std::span<const double> xs) {
  SampleSummary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0, sum_sq = 0.0;
  for (double x : xs) {
    sum += x;
    sum_sq += x * x;
  }
  const double n = static_cast<double>(s.n);
  s.mean = sum / n;
  s.mean_sq = sum_sq / n;
  if (s.n > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.variance = acc / (n - 1);
    s.se = std::sqrt(s.variance / n);
  }
  return s;
}

double kolmogorov_q(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double ks_p(double d, double ne) {
  const double root = std::sqrt(ne);
  return kolmogorov_q((root + 0.12 + 0.11 / root) * d);
}

}  // namespace

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS test needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p(d, na * nb / (na + nb)), 0};
}

TestResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw std::invalid_argument("KS test needs a non-empty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p(d, n), 0};
}

TestResult chi_square_gof(std::span<const double> observed, std::span<const double> probabilities,
                          double min_expected) {
  if (observed.size() != probabilities.size()) throw std::invalid_argument("category count mismatch");
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  double stat = 0.0;
  int cells = 0;
  double pooled_o = 0.0, pooled_e = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double e = total * probabilities[k];
    if (e < min_expected) {
      pooled_o += observed[k];
      pooled_e += e;
      continue;
    }
    stat += (observed[k] - e) * (observed[k] - e) / e;
    ++cells;
  }
  if (pooled_e > 0.0) {
    stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++cells;
  } else if (pooled_o > 0.0) {
    return {std::numeric_limits<double>::infinity(), 0.0, cells};
  }
  const int dof = std::max(1, cells - 1);
  return {stat, boost::math::gamma_q(dof / 2.0, stat / 2.0), dof};
}

TestResult chi_square_homogeneity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("category count mismatch");
  const double na = std::accumulate(a.begin(), a.end(), 0.0);
  const double nb = std::accumulate(b.begin(), b.end(), 0.0);
  double stat = 0.0;
  int cells = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double col = a[k] + b[k];
    if (col == 0.0) continue;
    const double ea = na * col / (na + nb), eb = nb * col / (na + nb);
    stat += (a[k] - ea) * (a[k] - ea) / ea + (b[k] - eb) * (b[k] - eb) / eb;
    ++cells;
  }
  const int dof = std::max(1, cells - 1);
  return {stat, boost::math::gamma_q(dof / 2.0, stat / 2.0), dof};
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope needs >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace coagtree
