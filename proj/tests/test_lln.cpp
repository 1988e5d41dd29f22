#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "coagtree/error.hpp"
#include "coagtree/lln.hpp"

using namespace coagtree;

namespace {

ExperimentPlan small_plan() {
  return plan_from_json(R"({
    "kernel": "constant", "mu0": {"monodisperse": 1}, "t": 1.0,
    "functionals": ["leaf", "cherry", "one"],
    "ladder": [20, 80, 320], "replicas": [400, 100, 30],
    "seed": 3, "jobs": 2
  })");
}

}  // namespace

TEST_CASE("plan parsing and validation") {
  const auto plan = small_plan();
  CHECK(plan.functionals.size() == 3);
  CHECK(plan.ladder == std::vector<std::size_t>{20, 80, 320});
  CHECK(plan.mu0.weight_of(1.0) == 1.0);
  const auto again = plan_from_json(plan_to_json(plan));
  CHECK(plan_to_json(again) == plan_to_json(plan));

  CHECK_THROWS_AS(plan_from_json(R"({"ladder": [10, 20], "replicas": [100]})"), ConfigError);
  CHECK_THROWS_AS(plan_from_json(R"({"ladder": [10, 20], "replicas": [100, 29]})"), ConfigError);
  CHECK_THROWS_AS(plan_from_json(R"({"ladder": [20, 10], "replicas": [100, 100]})"), ConfigError);
  CHECK_THROWS_AS(plan_from_json(R"({"kernel": 3})"), ConfigError);
  CHECK_THROWS_AS(plan_from_json("not json"), ConfigError);

  const auto dir = std::filesystem::temp_directory_path() / "coagtree_plan_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "mu.csv") << "mass,weight\n1.0,0.5\n2.0,0.25\n";
  std::ofstream(dir / "plan.json") << R"({"mu0_file": "mu.csv", "ladder": [10, 20], "replicas": [50, 50]})";
  const auto loaded = load_plan(dir / "plan.json");
  CHECK(loaded.mu0.weight_of(2.0) == 0.25);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run_lln is deterministic and reports sane statistics") {
  const auto plan = small_plan();
  const auto a = run_lln(plan);
  auto plan1 = plan;
  plan1.jobs = 1;
  const auto b = run_lln(plan1);
  REQUIRE(a.functionals.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(a.functionals[k].ladder[j].sample.mean == b.functionals[k].ladder[j].sample.mean);
      const auto& s = a.functionals[k].ladder[j].sample;
      CHECK(s.variance >= 0.0);
      CHECK(s.mean_sq >= s.mean * s.mean - 1e-15);
    }
  }
  CHECK(a.functionals[0].limit == doctest::Approx(1.0 / 2.25).epsilon(1e-8));
  CHECK(a.to_json().find("\"verdict\"") != std::string::npos);
  CHECK(a.to_text().find("leaf") != std::string::npos);

  auto strict = plan;
  strict.max_se = 1e-9;
  const auto c = run_lln(strict);
  CHECK(c.verdict != Verdict::pass);
}

TEST_CASE("finite-N density for two particles") {
  const Kernel K = builtin_kernel("constant");
  const auto a = HistoricalTree::leaf(1.0, 1), b = HistoricalTree::leaf(1.0, 2);
  for (double s : {0.2, 0.9}) {
    CHECK(finite_n_density({HistoricalTree::node(s, a, b)}, 1.0, 2.0, K) == doctest::Approx(0.5 * std::exp(-s / 2)));
  }
  CHECK(finite_n_density({a, b}, 1.0, 2.0, K) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("jump density tests") {
  const auto two = jump_density_test({1.0, 1.0}, builtin_kernel("constant"), 1.0, 20000, 1);
  CHECK(two.pass);
  double total = 0.0;
  for (double p : two.expected) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

  const auto sym = jump_density_test({1.0, 1.0, 1.0}, builtin_kernel("constant"), 3.0, 20000, 2, 0, 5);
  CHECK(sym.pass);
  for (double f : sym.pair_frequencies) CHECK(f == doctest::Approx(sym.pair_frequencies[0]).epsilon(0.1));

  // with a long horizon almost every run has a first event; pair law ~ {2,3,6}
  const auto prod = jump_density_test({1.0, 2.0, 3.0}, builtin_kernel("product"), 5.0, 20000, 3, 0, 5);
  CHECK(prod.pass);
  REQUIRE(prod.pair_frequencies.size() == 3);
  CHECK(prod.pair_frequencies[0] == doctest::Approx(2.0 / 11).epsilon(0.05));
  CHECK(prod.pair_frequencies[1] == doctest::Approx(3.0 / 11).epsilon(0.05));
  CHECK(prod.pair_frequencies[2] == doctest::Approx(6.0 / 11).epsilon(0.05));

  CHECK_THROWS_AS(jump_density_test({1.0}, builtin_kernel("constant"), 1.0, 100, 1), ConfigError);
  CHECK_THROWS_AS(jump_density_test({1.0, 1.0}, builtin_kernel("constant"), 1.0, 10, 1), ConfigError);
}

TEST_CASE("survival estimators") {
  const auto two = survival_test({1.0, 1.0}, builtin_kernel("constant"), 1.0, 20000, 4, 2);
  CHECK(two.formula.mean == doctest::Approx(std::exp(-0.5)));  // N=2: the background has no events
  CHECK(std::abs(two.direct.mean - std::exp(-0.5)) < 4 * two.direct.se);
  CHECK(two.pass);

  const auto zero = survival_test({1.0, 2.0, 3.0}, builtin_kernel("additive"), 0.0, 100, 4, 1);
  CHECK(zero.direct.mean == 1.0);
  CHECK(zero.formula.mean == 1.0);

  const auto six = survival_test({1, 1, 1, 1, 1, 1}, builtin_kernel("constant"), 1.0, 20000, 5, 2);
  CHECK(six.pass);
}

TEST_CASE("direct and coupled constructions agree at small N") {
  const auto r = construction_test({1, 1, 1, 1}, builtin_kernel("constant"), 5000, 6, 2);
  CHECK(r.pass);
  CHECK(r.direct_pairs.size() == 6);
  const auto p = construction_test({1, 2, 3}, builtin_kernel("product"), 5000, 7, 2);
  CHECK(p.pass);
}

TEST_CASE("tree-size tail matches the unenumerated limit mass") {
  // K = 1, t = 2: <1, mu_t> = 1/2 and shapes up to five leaves carry 1/2 - 1/64
  const auto masses = MassSpectrum::monodisperse().sample_counts(10000);
  std::vector<double> tail(100);
  for (std::size_t r = 0; r < tail.size(); ++r) {
    SimConfig cfg;
    cfg.masses = masses;
    cfg.horizon = 2.0;
    cfg.seed = 8;
    cfg.replica = r;
    tail[r] = tightness_diagnostic(empirical_measure(simulate(cfg), 2.0), 6);
  }
  const auto s = summarize(tail);
  CAPTURE(s.mean);
  CHECK(std::abs(s.mean - 1.0 / 64) <= 3 * s.se);
}
