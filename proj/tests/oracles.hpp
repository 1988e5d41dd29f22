#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the solver or the limit quadrature.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "coagtree/tree.hpp"

namespace oracle {

// c_k(t) for K = 1, mu0 = delta_1.
inline double constant_kernel_ck(int k, double t) {
  const double a = t / 2.0;
  return std::pow(a, k - 1) / std::pow(1.0 + a, k + 1);
}

// K = x + y, mu0 = delta_1.
inline double additive_kernel_ck(int k, double t) {
  const double tau = 1.0 - std::exp(-t);
  return std::exp(-t) * std::pow(k * tau, k - 1) * std::exp(-k * tau) / std::tgamma(k + 1.0);
}

// K = xy, mu0 = delta_1, t < 1.
inline double product_kernel_ck(int k, double t) {
  return std::pow(k, k - 2) * std::pow(t, k - 1) * std::exp(-k * t) / std::tgamma(k + 1.0);
}

// Classical RK4 with a fixed step on the truncated system for masses 1..n,
// integer lattice, monodisperse start at mass 1.
inline std::vector<double> rk4_integer_lattice(const std::function<double(double, double)>& K, int n, double t,
                                               int steps) {
  std::vector<double> c(n + 1, 0.0);
  c[1] = 1.0;
  auto rhs = [&](const std::vector<double>& y) {
    std::vector<double> d(n + 1, 0.0);
    for (int i = 1; i <= n; ++i) {
      if (y[i] == 0.0) continue;
      for (int j = 1; j <= n; ++j) {
        const double r = K(i, j) * y[i] * y[j];
        d[i] -= r;
        if (i + j <= n) d[i + j] += 0.5 * r;
      }
    }
    return d;
  };
  const double h = t / steps;
  std::vector<double> tmp(n + 1);
  for (int s = 0; s < steps; ++s) {
    const auto k1 = rhs(c);
    for (int i = 0; i <= n; ++i) tmp[i] = c[i] + 0.5 * h * k1[i];
    const auto k2 = rhs(tmp);
    for (int i = 0; i <= n; ++i) tmp[i] = c[i] + 0.5 * h * k2[i];
    const auto k3 = rhs(tmp);
    for (int i = 0; i <= n; ++i) tmp[i] = c[i] + h * k3[i];
    const auto k4 = rhs(tmp);
    for (int i = 0; i <= n; ++i) c[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Brute-force combinatorics on nested-bracket strings.

// A labeled binary tree as a string over labels, canonicalised by sorting the
// two children as strings.
inline std::string bracket(const std::string& a, const std::string& b) {
  return a < b ? "[" + a + "|" + b + "]" : "[" + b + "|" + a + "]";
}

// All labeled binary trees on the label set `ids`, by splitting the set in
// every possible way.
inline std::vector<std::string> all_labeled_trees(const std::vector<int>& ids) {
  if (ids.size() == 1) return {std::to_string(ids[0])};
  std::set<std::string> out;
  const int n = static_cast<int>(ids.size());
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    if (!(mask & 1)) continue;  // fix the first label on the left to halve the work
    std::vector<int> a, b;
    for (int k = 0; k < n; ++k) ((mask >> k) & 1 ? a : b).push_back(ids[k]);
    for (const auto& x : all_labeled_trees(a)) {
      for (const auto& y : all_labeled_trees(b)) out.insert(bracket(x, y));
    }
  }
  return {out.begin(), out.end()};
}

// Shape of a bracket string: replace every label by `*`, recanonicalise.
inline std::string shape_of_bracket(const std::string& s) {
  if (s.front() != '[') return "*";
  int depth = 0;
  std::size_t split = 0;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '[') ++depth;
    if (s[i] == ']') --depth;
    if (s[i] == '|' && depth == 0) {
      split = i;
      break;
    }
  }
  const auto a = shape_of_bracket(s.substr(1, split - 1));
  const auto b = shape_of_bracket(s.substr(split + 1, s.size() - split - 2));
  auto rank = [](const std::string& x) { return std::make_pair(std::count(x.begin(), x.end(), '*'), x); };
  return rank(a) <= rank(b) ? "[" + a + "|" + b + "]" : "[" + b + "|" + a + "]";
}

// Relabels a bracket string by a permutation of 1..n and recanonicalises.
inline std::string permute_bracket(const std::string& s, const std::vector<int>& perm) {
  if (s.front() != '[') return std::to_string(perm[std::stoi(s) - 1]);
  int depth = 0;
  std::size_t split = 0;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '[') ++depth;
    if (s[i] == ']') --depth;
    if (s[i] == '|' && depth == 0) {
      split = i;
      break;
    }
  }
  return bracket(permute_bracket(s.substr(1, split - 1), perm),
                 permute_bracket(s.substr(split + 1, s.size() - split - 2), perm));
}

// Bracket form of a TreeShape, via its public structure only.
inline std::string shape_bracket(const coagtree::TreeShape& tau) {
  if (tau.is_leaf()) return "*";
  const auto a = shape_bracket(tau.left());
  const auto b = shape_bracket(tau.right());
  auto rank = [](const std::string& x) { return std::make_pair(std::count(x.begin(), x.end(), '*'), x); };
  return rank(a) <= rank(b) ? "[" + a + "|" + b + "]" : "[" + b + "|" + a + "]";
}

inline std::string labeled_bracket(const coagtree::LabeledTree& t) {
  if (t.is_leaf()) return std::to_string(t.id());
  return bracket(labeled_bracket(t.left()), labeled_bracket(t.right()));
}

inline double factorial(int n) { return std::tgamma(n + 1.0); }

// ---------------------------------------------------------------------------
// Random historical trees.

inline coagtree::HistoricalTree random_tree(std::mt19937_64& gen, int leaves, double t_max, bool labels,
                                            int& next_label, bool integer_masses = false) {
  using coagtree::HistoricalTree;
  if (leaves == 1) {
    std::uniform_real_distribution<double> mass(0.1, 5.0);
    std::uniform_int_distribution<int> imass(1, 3);
    const double m = integer_masses ? imass(gen) : mass(gen);
    if (labels) return HistoricalTree::leaf(m, static_cast<coagtree::ParticleId>(next_label++));
    return HistoricalTree::leaf(m);
  }
  std::uniform_int_distribution<int> split(1, leaves - 1);
  const int k = split(gen);
  // children get times strictly below this node's time
  std::uniform_real_distribution<double> frac(0.2, 0.95);
  const double s = t_max * frac(gen);
  auto a = random_tree(gen, k, s, labels, next_label, integer_masses);
  auto b = random_tree(gen, leaves - k, s, labels, next_label, integer_masses);
  return HistoricalTree::node(s, a, b);
}

}  // namespace oracle
