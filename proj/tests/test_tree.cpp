#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "coagtree/error.hpp"
#include "coagtree/tree.hpp"

using namespace coagtree;

namespace {
TreeShape L() { return TreeShape::leaf(); }
TreeShape N(const TreeShape& a, const TreeShape& b) { return TreeShape::node(a, b); }
}  // namespace

TEST_CASE("shape keys are canonical under child swaps") {
  const auto cherry = N(L(), L());
  CHECK(cherry.key() == "(1,1)");
  CHECK(N(cherry, L()) == N(L(), cherry));
  CHECK(N(cherry, L()).key() == "(1,(1,1))");
  CHECK(TreeShape::parse("((1,1),1)") == N(L(), cherry));
  CHECK(count_leaves(N(cherry, cherry)) == 4);
}

TEST_CASE("symmetry exponent and epsilon") {
  const auto cherry = N(L(), L());
  CHECK(symmetry_exponent(L()) == 0);
  CHECK(symmetry_exponent(cherry) == 1);
  CHECK(symmetry_exponent(N(cherry, L())) == 1);
  CHECK(symmetry_exponent(N(cherry, cherry)) == 3);
  CHECK(epsilon(cherry) == 0.5);
  CHECK(epsilon(N(cherry, L())) == 1.0);
  CHECK_THROWS_AS(epsilon(L()), std::invalid_argument);
}

TEST_CASE("shape enumeration matches brute force for n <= 6") {
  const int wedderburn[] = {0, 1, 1, 1, 2, 3, 6};
  for (int n = 1; n <= 6; ++n) {
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 1);
    std::map<std::string, int> by_shape;
    for (const auto& t : oracle::all_labeled_trees(ids)) by_shape[oracle::shape_of_bracket(t)]++;

    const auto shapes = enumerate_shapes(n);
    CHECK(static_cast<int>(shapes.size()) == wedderburn[n]);
    CHECK(by_shape.size() == shapes.size());
    CHECK(std::is_sorted(shapes.begin(), shapes.end()));
    for (const auto& tau : shapes) {
      const int q = symmetry_exponent(tau);
      const auto labelings = enumerate_labelings(tau);
      CAPTURE(tau.key());
      // labeled trees over the shape: n!/2^q
      CHECK(static_cast<double>(labelings.size()) == oracle::factorial(n) / std::pow(2.0, q));
      CHECK(by_shape.at(oracle::shape_bracket(tau)) == static_cast<int>(labelings.size()));
      std::set<std::string> distinct;
      for (const auto& lt : labelings) {
        distinct.insert(lt.key());
        CHECK(lt.shape() == tau);
      }
      CHECK(distinct.size() == labelings.size());

      // the stabiliser of one labeling under S_n has 2^q elements
      const auto base = oracle::labeled_bracket(labelings.front());
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 1);
      int fixed = 0;
      do {
        if (oracle::permute_bracket(base, perm) == base) ++fixed;
      } while (std::next_permutation(perm.begin(), perm.end()));
      CHECK(fixed == (1 << q));
    }
  }
}

TEST_CASE("labeled trees reject shared ids and order children by min label") {
  const auto a = LabeledTree::node(LabeledTree::leaf(3), LabeledTree::leaf(1));
  CHECK(a.key() == "{1,3}");
  CHECK_THROWS_AS(LabeledTree::node(a, LabeledTree::leaf(3)), std::invalid_argument);
  const auto b = LabeledTree::node(LabeledTree::leaf(2), a);
  CHECK(b.key() == "{{1,3},2}");
  CHECK(b.labels() == std::vector<ParticleId>{1, 2, 3});
}

TEST_CASE("historical tree validation and accessors") {
  const auto x = HistoricalTree::leaf(1.0, 1);
  const auto y = HistoricalTree::leaf(2.0, 2);
  const auto c = HistoricalTree::node(0.5, x, y);
  CHECK(c.mass() == 3.0);
  CHECK(c.time() == 0.5);
  CHECK(c.internal_nodes() == 1);
  CHECK_THROWS_AS(HistoricalTree::node(0.5, c, HistoricalTree::leaf(1.0)), std::invalid_argument);
  CHECK(HistoricalTree::node(0.5, y, x) == c);
  CHECK(shape_of(c) == N(L(), L()));
  CHECK(forget_times(c).serialize() == "(1.0,2.0)");
  CHECK(labeled_structure(c).key() == "{1,2}");
  CHECK_THROWS(labeled_structure(forget_labels(c)));
}

TEST_CASE("edge intervals and interaction rates") {
  const auto c = HistoricalTree::node(0.5, HistoricalTree::leaf(1.0), HistoricalTree::leaf(2.0));
  const auto t = HistoricalTree::node(1.5, c, HistoricalTree::leaf(4.0));
  const auto e = edge_intervals(t, 2.0);
  REQUIRE(e.size() == 5);
  CHECK(e.alive_count(0.1) == 3);
  CHECK(e.alive_count(1.0) == 2);
  CHECK(e.alive_count(1.9) == 1);
  CHECK_THROWS_AS(edge_intervals(t, 1.5), std::invalid_argument);

  const Kernel prod = builtin_kernel("product");
  CHECK(kernel_product(t, prod) == doctest::Approx(2.0 * 12.0));
  CHECK(internal_interaction_rate(t, 0.1, prod) == doctest::Approx(2.0 + 4.0 + 8.0));
  CHECK(internal_interaction_rate(t, 1.0, prod) == doctest::Approx(12.0));
  CHECK(internal_interaction_rate(t, 1.9, prod) == 0.0);
  // 0.5 * 14 + 1.0 * 12
  CHECK(integrated_interaction(t, 2.0, prod) == doctest::Approx(19.0));
  CHECK(cross_interaction_rate(c, HistoricalTree::leaf(4.0), 0.2, prod) == doctest::Approx(12.0));
}

TEST_CASE("text format") {
  const auto t = parse("((1.0#1,2.5#2)@0.25,3.0#3)@1.0");
  CHECK(t.mass() == 6.5);
  CHECK(serialize(t) == "(3.0#3,(1.0#1,2.5#2)@0.25)@1.0");
  CHECK(serialize(parse("(2.0,1.0)@1e-3")) == "(1.0,2.0)@0.001");
  CHECK(format_real(2.0) == "2.0");
  CHECK(format_real(0.1) == "0.1");

  CHECK_THROWS_AS(parse("(1.0,2.0)"), ParseError);
  CHECK_THROWS_AS(parse("((1.0,1.0)@2.0,1.0)@1.0"), ParseError);
  CHECK_THROWS_AS(parse("(1.0,-1.0)@1.0"), ParseError);
  CHECK_THROWS_AS(parse("(1.0,1.0)@1.0 junk"), ParseError);
  try {
    parse("(1.0;2.0)@1");
    FAIL("no throw");
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }
  const auto tie = "((1.0,1.0)@0.5,(1.0,1.0)@0.5)@1.0";
  CHECK(has_time_ties(parse(tie)));
  CHECK_THROWS_AS(parse(tie, {.strict = true}), ParseError);
}

TEST_CASE("serialization round trip on random trees") {
  std::mt19937_64 gen(12345);
  std::uniform_int_distribution<int> size(1, 9);
  std::bernoulli_distribution labelled(0.5);
  for (int k = 0; k < 1000; ++k) {
    int next = 1;
    const auto t = oracle::random_tree(gen, size(gen), 10.0, labelled(gen), next);
    const auto text = serialize(t);
    const auto back = parse(text);
    REQUIRE(back == t);
    REQUIRE(serialize(back) == text);
  }
}

TEST_CASE("historical order is total and consistent") {
  std::mt19937_64 gen(7);
  std::vector<HistoricalTree> ts;
  for (int k = 0; k < 200; ++k) {
    int next = 1;
    ts.push_back(oracle::random_tree(gen, 1 + k % 4, 3.0, false, next, true));
  }
  std::sort(ts.begin(), ts.end());
  for (std::size_t k = 1; k < ts.size(); ++k) {
    CHECK(ts[k - 1] <= ts[k]);
    CHECK(ts[k - 1].leaves() <= ts[k].leaves());
  }
}
