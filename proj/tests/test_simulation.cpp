#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"

#include "coagtree/error.hpp"
#include "coagtree/simulation.hpp"
#include "coagtree/statistics.hpp"

using namespace coagtree;

namespace {

SimConfig config(std::vector<double> masses, const char* kernel, double t, std::uint64_t replica = 0) {
  SimConfig cfg;
  cfg.masses = std::move(masses);
  cfg.kernel = builtin_kernel(kernel);
  cfg.horizon = t;
  cfg.seed = 2024;
  cfg.replica = replica;
  return cfg;
}

}  // namespace

TEST_CASE("event log bookkeeping") {
  const auto log = simulate(config(std::vector<double>(50, 1.0), "constant", 3.0));
  CHECK(log.initial_size() == 50);
  CHECK(log.cluster_count() == 50 + log.events().size());
  CHECK(log.final_population().size() == 50 - log.events().size());
  double mass = 0.0;
  for (auto id : log.final_population()) mass += log.tree(id).mass();
  CHECK(mass == 50.0);
  double last = 0.0;
  for (std::size_t k = 0; k < log.events().size(); ++k) {
    const auto& e = log.events()[k];
    CHECK(e.time > last);
    CHECK(e.time < 3.0);
    CHECK(e.result == 50 + k);
    CHECK(log.death_time(e.left).value() == e.time);
    last = e.time;
  }
  CHECK(log.alive_at(0.0).size() == 50);
  CHECK(log.alive_at(3.0).size() == log.final_population().size());
  CHECK(log.events_up_to(3.0) == log.events().size());

  std::ostringstream ev, tr;
  log.write_events_csv(ev);
  log.write_trees(tr);
  CHECK(ev.str().rfind("event_index,time,left_serial,right_serial\n", 0) == 0);
  std::istringstream lines(tr.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    CHECK(parse(line) == log.tree(log.final_population()[n]));
    ++n;
  }
  CHECK(n == log.final_population().size());
}

TEST_CASE("edge cases") {
  CHECK(simulate(config({1.0}, "constant", 5.0)).events().empty());
  CHECK(simulate(config({1.0, 1.0}, "constant", 0.0)).events().empty());
  CHECK_THROWS_AS(simulate(config({}, "constant", 1.0)), ConfigError);
  CHECK_THROWS_AS(simulate(config({1.0, -1.0}, "constant", 1.0)), ConfigError);
  CHECK_THROWS_AS(simulate(config({1.0, 1.0}, "constant", -1.0)), ConfigError);
  CHECK_THROWS_AS(simulate(config(std::vector<double>(10, 1.0), "product", 2.0)), GelationError);
  auto big = config(std::vector<double>(13, 1.0), "constant", 1.0);
  big.construction = Construction::coupled;
  CHECK_THROWS_AS(simulate(big), ConfigError);
  CHECK(parse_construction("coupled") == Construction::coupled);
  CHECK_THROWS_AS(parse_construction("other"), ConfigError);
}

TEST_CASE("same seed, same history") {
  for (auto how : {Construction::direct, Construction::coupled}) {
    auto cfg = config({1, 2, 3, 1, 2, 3, 1, 2}, "additive", 0.8, 5);
    cfg.construction = how;
    std::ostringstream a, b, c;
    simulate(cfg).write_events_csv(a);
    simulate(cfg).write_events_csv(b);
    cfg.replica = 6;
    simulate(cfg).write_events_csv(c);
    CHECK(a.str() == b.str());
    CHECK(a.str() != c.str());
  }
}

TEST_CASE("two particles: no event by t with probability exp(-t K / N)") {
  const int replicas = 20000;
  for (auto how : {Construction::direct, Construction::coupled}) {
    double survived = 0.0;
    for (int r = 0; r < replicas; ++r) {
      auto cfg = config({1.0, 1.0}, "constant", 1.0, r);
      cfg.construction = how;
      survived += simulate(cfg).events().empty();
    }
    const double p = std::exp(-0.5);
    const double se = std::sqrt(p * (1 - p) / replicas);
    CHECK(std::abs(survived / replicas - p) < 4 * se);
  }
}

TEST_CASE("three particles against the matrix exponential of the jump chain") {
  // K = xy, masses (1,2,3), rates K/3. States by final multiset of masses.
  Eigen::Matrix<double, 5, 5> Q = Eigen::Matrix<double, 5, 5>::Zero();
  const double r12 = 2.0 / 3, r13 = 3.0 / 3, r23 = 6.0 / 3;
  Q(0, 1) = r12;  // {3,3}
  Q(0, 2) = r13;  // {2,4}
  Q(0, 3) = r23;  // {1,5}
  Q(1, 4) = 9.0 / 3;
  Q(2, 4) = 8.0 / 3;
  Q(3, 4) = 5.0 / 3;
  for (int i = 0; i < 5; ++i) Q(i, i) = -Q.row(i).sum();
  const double t = 0.4;
  const Eigen::Matrix<double, 5, 5> P = (Q * t).exp();

  const int replicas = 20000;
  std::vector<double> counts(5, 0.0);
  for (int r = 0; r < replicas; ++r) {
    auto cfg = config({1, 2, 3}, "product", t, r);
    cfg.allow_near_gelation = true;
    const auto log = simulate(cfg);
    std::vector<double> ms;
    for (auto id : log.final_population()) ms.push_back(log.tree(id).mass());
    std::sort(ms.begin(), ms.end());
    int state = 0;
    if (ms.size() == 1) state = 4;
    else if (ms.size() == 2) state = ms[0] == 3 ? 1 : ms[0] == 2 ? 2 : 3;
    counts[state] += 1;
  }
  std::vector<double> probs(5);
  for (int i = 0; i < 5; ++i) probs[i] = P(0, i);
  const auto chi = chi_square_gof(counts, probs);
  CAPTURE(chi.statistic);
  CHECK(chi.p_value > 1e-3);
}

TEST_CASE("empirical measure and tightness") {
  const auto log = simulate(config(std::vector<double>(200, 1.0), "constant", 2.0));
  const auto m = empirical_measure(log, 2.0);
  CHECK(m.atom_weight == doctest::Approx(1.0 / 200));
  CHECK(tightness_diagnostic(m, 1) == doctest::Approx(m.trees.size() / 200.0));
  CHECK(tightness_diagnostic(m, 201) == 0.0);
  double prev = 2.0;
  for (int n0 = 1; n0 <= 10; ++n0) {
    const double v = tightness_diagnostic(m, n0);
    CHECK(v <= prev);
    prev = v;
  }
  const auto m0 = empirical_measure(log, 0.0);
  CHECK(m0.trees.size() == 200);
  CHECK(evaluate_functional(m0, leaf_indicator()) == doctest::Approx(1.0));
  CHECK_THROWS_AS(empirical_measure(log, 2.5), std::out_of_range);

  // a cutoff above the total mass changes nothing
  const auto f = cherry_indicator();
  CHECK(evaluate_functional(m, product(f, mass_cutoff(1000.0))) == evaluate_functional(m, f));
}
