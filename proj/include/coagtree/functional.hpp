#pragma once

// Bounded test functions on historical trees, together with enough structure
// for the limit quadrature to exploit: which shapes they can be nonzero on,
// whether they ignore node times, and a mass cutoff beyond which they vanish.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coagtree/tree.hpp"

namespace coagtree {

using TimeBox = std::pair<double, double>;

struct TreeFunctional {
  std::string name;
  std::function<double(const HistoricalTree&)> eval;
  /// Shapes outside this list give 0. Empty optional means "any shape".
  std::optional<std::vector<TreeShape>> support;
  double sup_norm = 1.0;
  /// f vanishes on trees heavier than this.
  std::optional<double> mass_bound;
  /// f depends on the shape and leaf masses only.
  bool time_free = false;
  /// When non-empty, f = g * prod_k 1[s_k in box_k] with g time free. A
  /// single box applies to every internal node; otherwise the boxes follow
  /// the canonical pre-order of internal nodes.
  std::vector<TimeBox> time_boxes;
  /// The time-free factor g: set whenever f is time free or boxed.
  std::function<double(const HistoricalTree&)> untimed;
  /// JSON description; round-trips through functional_from_json.
  std::string spec;

  double operator()(const HistoricalTree& xi) const { return eval(xi); }
  bool may_be_nonzero_on(const TreeShape& tau) const;
};

TreeFunctional one_functional();
TreeFunctional zero_functional();
TreeFunctional shape_indicator(const TreeShape& tau);
TreeFunctional leaf_indicator();
TreeFunctional cherry_indicator();

/// Indicator of shape tau with node times in boxes. One box applies to every
/// internal node; otherwise there must be one box per internal node, matched
/// in canonical pre-order.
TreeFunctional time_box_indicator(const TreeShape& tau, std::vector<TimeBox> boxes);

/// Psi_M(m(xi)): 1 up to M, linear down to 0 at M + 1.
TreeFunctional mass_cutoff(double M);
double psi_cutoff(double M, double x);

TreeFunctional product(const TreeFunctional& f, const TreeFunctional& g);

/// Accepts the JSON produced in `spec`, or the shorthands `one`, `zero`,
/// `leaf`, `cherry`. Throws ConfigError.
TreeFunctional functional_from_json(const std::string& text);

}  // namespace coagtree
