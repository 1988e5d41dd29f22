#pragma once

// Tree combinatorics and the historical-tree data model.
//
// Three tree flavours live here:
//   TreeShape       unlabeled binary shape (the tree type)
//   LabeledTree     shape with pairwise distinct particle ids at the leaves
//   HistoricalTree  leaf masses plus internal coagulation times
// All of them are immutable values kept in canonical form (children sorted
// under a fixed total order), so equality is structural and invariant under
// child swaps.

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coagtree/kernel.hpp"

namespace coagtree {

// ---------------------------------------------------------------------------
// TreeShape

class TreeShape {
public:
  /// The single-leaf shape.
  TreeShape();

  static TreeShape leaf() { return TreeShape(); }
  static TreeShape node(const TreeShape& a, const TreeShape& b);

  /// Parses the canonical text form: `1` or `(a,b)`.
  static TreeShape parse(std::string_view text);

  bool is_leaf() const noexcept;
  const TreeShape& left() const;
  const TreeShape& right() const;
  int leaves() const noexcept;

  /// Canonical serialization; `1` for a leaf, `(a,b)` for a node.
  const std::string& key() const noexcept;

  /// Order by leaf count, then lexicographically by key.
  friend std::strong_ordering operator<=>(const TreeShape& a, const TreeShape& b);
  friend bool operator==(const TreeShape& a, const TreeShape& b);

private:
  struct Rep;
  explicit TreeShape(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  std::shared_ptr<const Rep> rep_;
};

int count_leaves(const TreeShape& tau);

/// q(1) = 0, q({a,b}) = q(a) + q(b) + [a == b].
int symmetry_exponent(const TreeShape& tau);

/// 1 if the two children differ, 1/2 if equal. Throws std::invalid_argument on a leaf.
double epsilon(const TreeShape& tau);

/// All canonical shapes with exactly n leaves, in ascending order.
std::vector<TreeShape> enumerate_shapes(int n);

/// All canonical shapes with 1..max_leaves leaves.
std::vector<TreeShape> enumerate_shapes_up_to(int max_leaves);

// ---------------------------------------------------------------------------
// LabeledTree

using ParticleId = std::uint32_t;

class LabeledTree {
public:
  static LabeledTree leaf(ParticleId id);
  /// Throws std::invalid_argument when the label sets intersect.
  static LabeledTree node(const LabeledTree& a, const LabeledTree& b);

  bool is_leaf() const noexcept;
  ParticleId id() const;  ///< leaf only
  const LabeledTree& left() const;
  const LabeledTree& right() const;
  int leaves() const noexcept;

  /// Sorted leaf ids.
  const std::vector<ParticleId>& labels() const noexcept;
  TreeShape shape() const;

  /// Canonical text: `3` for a leaf, `{a,b}` for a node, children ordered by
  /// smallest label.
  const std::string& key() const noexcept;

  friend bool operator==(const LabeledTree& a, const LabeledTree& b) { return a.key() == b.key(); }

private:
  struct Rep;
  explicit LabeledTree(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  std::shared_ptr<const Rep> rep_;
};

/// Every distinct leaf labeling of `tau` by ids 1..n. There are n!/2^q(tau).
std::vector<LabeledTree> enumerate_labelings(const TreeShape& tau);

// ---------------------------------------------------------------------------
// HistoricalTree

class HistoricalTree {
public:
  static HistoricalTree leaf(double mass, std::optional<ParticleId> label = std::nullopt);

  /// Throws std::invalid_argument unless `time` strictly exceeds both
  /// children's times.
  static HistoricalTree node(double time, const HistoricalTree& a, const HistoricalTree& b);

  bool is_leaf() const noexcept;
  /// Coagulation time; 0 for a leaf.
  double time() const noexcept;
  /// Leaf mass, or the sum of the children's masses.
  double mass() const noexcept;
  std::optional<ParticleId> label() const noexcept;
  const HistoricalTree& left() const;
  const HistoricalTree& right() const;
  int leaves() const noexcept;
  /// Number of internal nodes.
  int internal_nodes() const noexcept { return leaves() - 1; }

  /// Total order: shape order first, then node times, leaf masses and labels
  /// in canonical traversal order.
  friend std::strong_ordering operator<=>(const HistoricalTree& a, const HistoricalTree& b);
  friend bool operator==(const HistoricalTree& a, const HistoricalTree& b) {
    return (a <=> b) == std::strong_ordering::equal;
  }

private:
  struct Rep;
  explicit HistoricalTree(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  std::shared_ptr<const Rep> rep_;
};

int count_leaves(const HistoricalTree& xi);
double mass(const HistoricalTree& xi);
TreeShape shape_of(const HistoricalTree& xi);

/// Strips labels (times and masses kept).
HistoricalTree forget_labels(const HistoricalTree& xi);

/// The labels-only tree of a fully labeled historical tree. Throws
/// std::invalid_argument when a leaf is unlabeled or labels repeat.
LabeledTree labeled_structure(const HistoricalTree& xi);

/// Internal node times in canonical pre-order (root first).
std::vector<double> node_times(const HistoricalTree& xi);

/// True when two internal nodes share a coagulation time.
bool has_time_ties(const HistoricalTree& xi);

/// Throws std::invalid_argument on equal-time ties.
void validate_strict(const HistoricalTree& xi);

// ---------------------------------------------------------------------------
// Trees of masses (historical trees with the times forgotten)

class MassTree {
public:
  static MassTree leaf(double mass);
  static MassTree node(const MassTree& a, const MassTree& b);

  bool is_leaf() const noexcept;
  double mass() const noexcept;
  int leaves() const noexcept;
  const MassTree& left() const;
  const MassTree& right() const;

  /// `2.5` or `(a,b)`, canonical child order.
  std::string serialize() const;

  friend std::strong_ordering operator<=>(const MassTree& a, const MassTree& b);
  friend bool operator==(const MassTree& a, const MassTree& b) {
    return (a <=> b) == std::strong_ordering::equal;
  }

private:
  struct Rep;
  explicit MassTree(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  std::shared_ptr<const Rep> rep_;
};

MassTree forget_times(const HistoricalTree& xi);

// ---------------------------------------------------------------------------
// Lifetime intervals and kernel aggregates

struct EdgeInterval {
  double mass;
  double birth;
  double death;

  bool alive_at(double s) const noexcept { return birth <= s && s < death; }
  friend bool operator==(const EdgeInterval&, const EdgeInterval&) = default;
};

/// One interval per node, children before parents. Leaves are born at 0, a
/// node is born at its coagulation time, and every interval dies at the
/// parent's time (the root at `horizon`).
struct EdgeIntervalSet {
  std::vector<EdgeInterval> intervals;
  double horizon = 0.0;

  std::size_t size() const noexcept { return intervals.size(); }
  std::size_t alive_count(double s) const;
};

/// Throws std::invalid_argument when a node time is >= horizon.
EdgeIntervalSet edge_intervals(const HistoricalTree& xi, double horizon);

/// Product of K(m(left), m(right)) over internal nodes; 1 for a leaf.
double kernel_product(const HistoricalTree& xi, const Kernel& kernel);

/// (1/2) * sum over ordered pairs of distinct sub-clusters alive at s of
/// K(mass, mass').
double internal_interaction_rate(const HistoricalTree& xi, double s, const Kernel& kernel);

/// Sum over unordered cross pairs (one sub-cluster from each tree) alive at s.
double cross_interaction_rate(const HistoricalTree& a, const HistoricalTree& b, double s,
                              const Kernel& kernel);

/// Exact integral of internal_interaction_rate over [0, horizon].
double integrated_interaction(const HistoricalTree& xi, double horizon, const Kernel& kernel);

// ---------------------------------------------------------------------------
// Text format
//
//   tree := leaf | '(' tree ',' tree ')' '@' time
//   leaf := mass [ '#' label ]

/// Shortest round-trip decimal form; always contains '.' or an exponent.
std::string format_real(double value);

std::string serialize(const HistoricalTree& xi);

struct ParseOptions {
  /// Reject equal-time ties between internal nodes.
  bool strict = false;
};

/// Throws ParseError on malformed input or non-monotone times.
HistoricalTree parse(std::string_view text, ParseOptions options = {});

}  // namespace coagtree
