#pragma once

// Marcus-Lushnikov simulation with full merger histories.
//
// Cluster ids: the initial particles are 0..N-1 (their leaves carry labels
// 1..N), and the cluster produced by event k gets id N + k.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "coagtree/functional.hpp"
#include "coagtree/kernel.hpp"
#include "coagtree/tree.hpp"

namespace coagtree {

enum class Construction { direct, coupled };

Construction parse_construction(std::string_view name);
std::string_view construction_name(Construction c);

inline constexpr std::size_t kCoupledMaxParticles = 12;

struct SimConfig {
  std::vector<double> masses;
  Kernel kernel = builtin_kernel("constant");
  double horizon = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  Construction construction = Construction::direct;
  /// Pairs merge at rate K / scale; 0 means scale = N.
  double scale = 0.0;
  bool allow_near_gelation = false;
};

using ClusterId = std::size_t;

struct CoagulationEvent {
  double time;
  ClusterId left;
  ClusterId right;
  ClusterId result;
};

class EventLog {
public:
  std::size_t initial_size() const noexcept { return n_; }
  double horizon() const noexcept { return horizon_; }
  double scale() const noexcept { return scale_; }
  const std::vector<CoagulationEvent>& events() const noexcept { return events_; }
  const HistoricalTree& tree(ClusterId id) const { return trees_.at(id); }
  std::size_t cluster_count() const noexcept { return trees_.size(); }
  /// Clusters alive at the horizon, ascending ids.
  const std::vector<ClusterId>& final_population() const noexcept { return final_; }

  /// Ids alive at time t <= horizon.
  std::vector<ClusterId> alive_at(double t) const;
  /// Time of the event consuming `id`, if any.
  std::optional<double> death_time(ClusterId id) const;
  std::size_t events_up_to(double t) const;
  /// Exact clock ties seen by the coupled construction.
  std::size_t ties() const noexcept { return ties_; }

  /// CSV `event_index,time,left_serial,right_serial`.
  void write_events_csv(std::ostream& out) const;
  /// Final population, one serialized tree per line.
  void write_trees(std::ostream& out) const;

private:
  friend EventLog simulate_direct(const SimConfig&);
  friend EventLog simulate_coupled(const SimConfig&);
  friend class LogBuilder;

  std::size_t n_ = 0;
  double horizon_ = 0.0;
  double scale_ = 1.0;
  std::vector<CoagulationEvent> events_;
  std::vector<HistoricalTree> trees_;
  std::vector<ClusterId> final_;
  std::vector<double> death_;
  std::size_t ties_ = 0;
};

/// Throws ConfigError on a bad configuration and GelationError when the
/// horizon trips the gelation guard.
EventLog simulate(const SimConfig& cfg);
EventLog simulate_direct(const SimConfig& cfg);
EventLog simulate_coupled(const SimConfig& cfg);

struct EmpiricalHistoricalMeasure {
  std::vector<HistoricalTree> trees;
  double atom_weight = 1.0;

  double total_weight() const noexcept { return atom_weight * static_cast<double>(trees.size()); }
};

/// Throws std::out_of_range when t exceeds the log horizon.
EmpiricalHistoricalMeasure empirical_measure(const EventLog& log, double t);

double evaluate_functional(const EmpiricalHistoricalMeasure& m, const TreeFunctional& f);

/// Weight of atoms with at least n0 leaves.
double tightness_diagnostic(const EmpiricalHistoricalMeasure& m, int n0);

}  // namespace coagtree
