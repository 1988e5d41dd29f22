#include <cmath>
#include <random>

#include "doctest.h"

#include "coagtree/statistics.hpp"

using namespace coagtree;

TEST_CASE("summary") {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto s = summarize(xs);
  CHECK(s.mean == 2.5);
  CHECK(s.variance == doctest::Approx(5.0 / 3));
  CHECK(s.mean_sq == 7.5);
  CHECK(s.mean_sq >= s.mean * s.mean);
  CHECK(s.se == doctest::Approx(std::sqrt(5.0 / 12)));
}

TEST_CASE("kolmogorov distribution") {
  CHECK(kolmogorov_q(0.0) == 1.0);
  CHECK(kolmogorov_q(1.3580986) == doctest::Approx(0.05).epsilon(1e-4));
  CHECK(kolmogorov_q(1.6276236) == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(kolmogorov_q(0.5) == doctest::Approx(0.9639).epsilon(1e-3));
}

TEST_CASE("ks and chi-square behave on known samples") {
  std::mt19937_64 gen(5);
  std::exponential_distribution<double> e1(1.0), e2(1.5);
  std::vector<double> a, b, c;
  for (int k = 0; k < 3000; ++k) {
    a.push_back(e1(gen));
    b.push_back(e1(gen));
    c.push_back(e2(gen));
  }
  CHECK(ks_two_sample(a, b).p_value > 1e-3);
  CHECK(ks_two_sample(a, c).p_value < 1e-6);
  CHECK(ks_one_sample(a, [](double x) { return 1 - std::exp(-x); }).p_value > 1e-3);

  const std::vector<double> obs{25, 25, 50};
  const std::vector<double> p{0.25, 0.25, 0.5};
  const auto g = chi_square_gof(obs, p);
  CHECK(g.statistic == 0.0);
  CHECK(g.p_value == doctest::Approx(1.0));
  CHECK(g.dof == 2);
  const std::vector<double> skew{80, 10, 10};
  CHECK(chi_square_gof(skew, p).p_value < 1e-6);

  const std::vector<double> h1{100, 200, 300}, h2{110, 190, 300}, h3{300, 200, 100};
  CHECK(chi_square_homogeneity(h1, h2).p_value > 0.1);
  CHECK(chi_square_homogeneity(h1, h3).p_value < 1e-6);
}

TEST_CASE("log-log slope") {
  const std::vector<double> x{10, 100, 1000}, y{1, 0.1, 0.01};
  CHECK(loglog_slope(x, y) == doctest::Approx(-1.0));
}
