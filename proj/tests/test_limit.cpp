#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "coagtree/functional.hpp"
#include "coagtree/limit_measure.hpp"

using namespace coagtree;

namespace {

const SolutionPath& constant_path() {
  static const SolutionPath path =
      solve(MassSpectrum::monodisperse(), builtin_kernel("constant"), 2.0, {.tol = 1e-10});
  return path;
}

// Node times for a template: parents before children in pre-order, each child
// strictly earlier than its parent.
std::vector<double> random_times(const TreeTemplate& tpl, double t, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<double> times(tpl.nodes.size());
  for (std::size_t k = 0; k < tpl.nodes.size(); ++k) {
    const int parent = tpl.nodes[k].parent;
    times[k] = (parent < 0 ? t : times[parent]) * u(gen);
  }
  return times;
}

}  // namespace

TEST_CASE("templates") {
  const auto tpl = TreeTemplate::of(TreeShape::parse("((1,1),(1,1))"));
  CHECK(tpl.leaf_count == 4);
  CHECK(tpl.nodes.size() == 3);
  CHECK(tpl.symmetry_factor == 0.125);
  CHECK_FALSE(tpl.fixed_node_order);
  CHECK(TreeTemplate::of(TreeShape::parse("(1,(1,1))")).fixed_node_order);
  const std::vector<double> masses{1, 2, 3, 4};
  const auto nm = tpl.node_masses(masses);
  CHECK(nm[0] == 10.0);
}

TEST_CASE("three density implementations agree on random queries") {
  const MassSpectrum mu0({{1.0, 0.5}, {2.0, 0.3}, {3.0, 0.2}});
  const double t = 1.5;
  for (const char* name : {"constant", "additive", "inverse-sum"}) {
    const auto path = solve(mu0, builtin_kernel(name), t, {.tol = 1e-10});
    std::mt19937_64 gen(99);
    const auto shapes = enumerate_shapes_up_to(4);
    std::uniform_int_distribution<std::size_t> pick(0, shapes.size() - 1);
    std::uniform_int_distribution<int> mass(1, 3);
    for (int k = 0; k < 100; ++k) {
      const auto tau = shapes[pick(gen)];
      const auto tpl = TreeTemplate::of(tau);
      std::vector<double> masses(tpl.leaf_count);
      for (auto& m : masses) m = mass(gen);
      const auto times = random_times(tpl, t, gen);
      const auto xi = tpl.build(masses, times);
      const double a = density({tau, masses, times, t}, path);
      const double b = density_product(xi, t, path);
      const double c = density_recursive(xi, t, path);
      CAPTURE(serialize(xi));
      CHECK(a > 0.0);
      CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, a));
      CHECK(std::abs(b - c) <= 1e-10 * std::max(1.0, b));
    }
  }
}

TEST_CASE("density rejects times that break the tree order") {
  const auto& path = constant_path();
  const auto tau = TreeShape::parse("(1,(1,1))");
  CHECK_THROWS_AS(density({tau, {1, 1, 1}, {0.5, 0.7}, 2.0}, path), std::invalid_argument);
  CHECK_THROWS_AS(density({tau, {1, 1, 1}, {2.5, 0.7}, 2.0}, path), std::invalid_argument);
}

TEST_CASE("cherry density in closed form") {
  // K = 1: (1/2) (1 + s/2)^-2 / (1 + t/2)^2
  const auto& path = constant_path();
  for (double s : {0.1, 0.7, 1.9}) {
    const double expected = 0.5 / std::pow(1 + s / 2, 2) / 4.0;
    CHECK(density({TreeShape::parse("(1,1)"), {1, 1}, {s}, 2.0}, path) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("limit functionals for K = 1, t = 2") {
  const auto& path = constant_path();
  const auto mu0 = MassSpectrum::monodisperse();
  const LimitOptions opt{.max_leaves = 5, .tol = 1e-10};
  CHECK(limit_functional(leaf_indicator(), path, mu0, 2.0, opt).value == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(limit_functional(cherry_indicator(), path, mu0, 2.0, opt).value == doctest::Approx(0.125).epsilon(1e-9));

  const auto boxed = time_box_indicator(TreeShape::parse("(1,1)"), {{0.5, 1.5}});
  const double exact = 0.25 * (1 / 1.25 - 1 / 1.75);
  const auto r = limit_functional(boxed, path, mu0, 2.0, opt);
  CHECK(std::abs(r.value - exact) < 1e-8);
  CHECK(r.tail_bound == 0.0);

  const auto one = limit_functional(one_functional(), path, mu0, 2.0, opt);
  CHECK(one.value == doctest::Approx(1 - 1.0 / 2 - 1.0 / 64).epsilon(1e-9));
  CHECK(one.tail_bound == doctest::Approx(1.0 / 64).epsilon(1e-8));
  CHECK(one.value + one.tail_bound == doctest::Approx(0.5).epsilon(1e-9));

  const auto cut = limit_functional(mass_cutoff(3.0), path, mu0, 2.0, opt);
  CHECK(cut.value == doctest::Approx(0.4375).epsilon(1e-9));
  CHECK(cut.tail_bound == 0.0);
  CHECK(limit_functional(zero_functional(), path, mu0, 2.0, opt).value == 0.0);
}

TEST_CASE("a time-dependent functional goes through the general quadrature") {
  TreeFunctional f;
  f.name = "cherry_time";
  f.eval = [](const HistoricalTree& xi) { return xi.leaves() == 2 ? xi.time() : 0.0; };
  f.support = std::vector<TreeShape>{TreeShape::parse("(1,1)")};
  f.sup_norm = 2.0;
  f.spec = R"({"type":"custom"})";
  const auto r = limit_functional(f, constant_path(), MassSpectrum::monodisperse(), 2.0, {.tol = 1e-9});
  // (1/8) int_0^2 s (1 + s/2)^-2 ds
  CHECK(r.value == doctest::Approx((std::log(2.0) - 0.5) / 2).epsilon(1e-7));
}

TEST_CASE("pushforward to masses reproduces the solver") {
  const auto& path = constant_path();
  const auto rep = pushforward_check(path, MassSpectrum::monodisperse(), 2.0, 4, {.tol = 1e-10});
  REQUIRE(rep.masses.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(std::abs(rep.tree_sums[k] - oracle::constant_kernel_ck(static_cast<int>(k) + 1, 2.0)) < 1e-8);
  }
  CHECK(rep.max_discrepancy < 1e-8);

  const MassSpectrum mu0({{1.0, 0.5}, {2.0, 0.5}});
  const auto p2 = solve(mu0, builtin_kernel("additive"), 0.6, {.tol = 1e-10});
  const auto rep2 = pushforward_check(p2, mu0, 0.6, 4, {.tol = 1e-10});
  CHECK(rep2.max_discrepancy < 1e-7);

  const auto p3 = solve(MassSpectrum::monodisperse(), builtin_kernel("product"), 0.5, {.tol = 1e-10});
  const auto rep3 = pushforward_check(p3, MassSpectrum::monodisperse(), 0.5, 3, {.tol = 1e-10});
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(std::abs(rep3.tree_sums[k] - oracle::product_kernel_ck(static_cast<int>(k) + 1, 0.5)) < 1e-8);
  }
}

TEST_CASE("limit csv") {
  const auto r = limit_functional(cherry_indicator(), constant_path(), MassSpectrum::monodisperse(), 2.0);
  std::ostringstream out;
  write_limit_csv(r, out);
  CHECK(out.str().rfind("shape_serial,mass_assignment,value,error\n\"(1,1)\",1.0;1.0,", 0) == 0);
}
