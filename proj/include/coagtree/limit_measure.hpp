#pragma once

// The limit historical measure: densities on trees of a fixed shape and
// functionals <f, mu~_t> by nested quadrature over coagulation times.

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "coagtree/functional.hpp"
#include "coagtree/smoluchowski.hpp"
#include "coagtree/spectrum.hpp"
#include "coagtree/tree.hpp"

namespace coagtree {

/// One labeled representative of a shape, flattened. Internal nodes are in
/// pre-order (root first); leaf slots are numbered left to right.
struct TreeTemplate {
  struct Node {
    int left;    ///< >= 0: internal node index; < 0: leaf slot -(child + 1)
    int right;
    int parent;  ///< -1 for the root
    double epsilon;
  };

  TreeShape shape;
  std::vector<Node> nodes;
  int leaf_count = 1;
  double symmetry_factor = 1.0;  ///< 2^{-q(shape)}
  /// False when some node has two equal non-leaf children; then the
  /// pre-order of internal nodes of a historical tree depends on its times.
  bool fixed_node_order = true;

  static TreeTemplate of(const TreeShape& tau);

  /// Subtree masses for each internal node.
  std::vector<double> node_masses(std::span<const double> leaf_masses) const;

  /// The historical tree with these leaf masses and (pre-order) node times.
  /// With `label_leaves`, leaf slot k carries label k + 1.
  HistoricalTree build(std::span<const double> leaf_masses, std::span<const double> times,
                       bool label_leaves = false) const;
};

struct TreeDensityQuery {
  TreeShape shape;
  std::vector<double> leaf_masses;  ///< template leaf order
  std::vector<double> node_times;   ///< template pre-order
  double horizon = 0.0;
};

/// Product-form density 2^{-q} K_xi exp(-sum over edges of Lambda), with
/// respect to the time measure times mu0 on each leaf. Throws
/// std::invalid_argument when the times do not respect the tree order.
double density(const TreeDensityQuery& q, const SolutionPath& path);

/// Same density computed from edge_intervals(xi, t).
double density_product(const HistoricalTree& xi, double t, const SolutionPath& path);

/// Same density computed by the epsilon recursion over subtrees.
double density_recursive(const HistoricalTree& xi, double t, const SolutionPath& path);

struct LimitOptions {
  int max_leaves = 5;
  double tol = 1e-9;
  unsigned max_depth = 12;
};

struct LimitTerm {
  TreeShape shape;
  std::vector<double> leaf_masses;
  double value = 0.0;  ///< includes the mu0 weights of the leaves
  double error = 0.0;
};

struct LimitFunctionalResult {
  double value = 0.0;
  double error = 0.0;
  /// Bound on the contribution of shapes beyond max_leaves.
  double tail_bound = 0.0;
  std::vector<LimitTerm> terms;
};

/// Integral of f against the limit measure restricted to one shape with fixed
/// leaf masses (no mu0 weights). Returns {value, error estimate}.
std::pair<double, double> integrate_shape(const TreeFunctional& f, const TreeTemplate& tpl,
                                          std::span<const double> leaf_masses,
                                          const SolutionPath& path, double t,
                                          const LimitOptions& options = {});

LimitFunctionalResult limit_functional(const TreeFunctional& f, const SolutionPath& path,
                                       const MassSpectrum& mu0, double t,
                                       const LimitOptions& options = {});

struct PushforwardReport {
  std::vector<double> masses;
  std::vector<double> tree_sums;
  std::vector<double> solver_weights;
  double max_discrepancy = 0.0;
};

/// Compares, for each lattice mass up to n_max times the smallest atom, the
/// limit measure of trees with that total mass against the solver weight.
PushforwardReport pushforward_check(const SolutionPath& path, const MassSpectrum& mu0, double t,
                                    int n_max, const LimitOptions& options = {});

/// CSV `shape_serial,mass_assignment,value,error`.
void write_limit_csv(const LimitFunctionalResult& result, std::ostream& out);

}  // namespace coagtree
