#include "coagtree/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "coagtree/error.hpp"
#include "coagtree/rng.hpp"

namespace coagtree {

Construction parse_construction(std::string_view name) {
  if (name == "direct") return Construction::direct;
  if (name == "coupled") return Construction::coupled;
  throw ConfigError("unknown construction '" + std::string(name) + "'");
}

std::string_view construction_name(Construction c) {
  return c == Construction::direct ? "direct" : "coupled";
}

class LogBuilder {
public:
  explicit LogBuilder(const SimConfig& cfg) {
    if (cfg.masses.empty()) throw ConfigError("simulation needs at least one particle");
    if (!(cfg.horizon >= 0.0) || !std::isfinite(cfg.horizon)) throw ConfigError("horizon must be finite and >= 0");
    for (double m : cfg.masses) {
      if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("particle masses must be positive");
    }
    if (cfg.scale < 0.0) throw ConfigError("rate scale must be non-negative");
    enforce_gelation_guard(cfg.kernel, MassSpectrum::empirical(cfg.masses), cfg.horizon,
                           cfg.allow_near_gelation);
    log_.n_ = cfg.masses.size();
    log_.horizon_ = cfg.horizon;
    log_.scale_ = cfg.scale > 0.0 ? cfg.scale : static_cast<double>(cfg.masses.size());
    log_.trees_.reserve(2 * log_.n_);
    for (std::size_t i = 0; i < log_.n_; ++i) {
      log_.trees_.push_back(HistoricalTree::leaf(cfg.masses[i], static_cast<ParticleId>(i + 1)));
    }
    log_.death_.assign(log_.n_, std::numeric_limits<double>::infinity());
  }

  double scale() const { return log_.scale_; }
  const HistoricalTree& tree(ClusterId id) const { return log_.trees_[id]; }

  ClusterId merge(double time, ClusterId a, ClusterId b) {
    const ClusterId id = log_.trees_.size();
    HistoricalTree t = HistoricalTree::node(time, log_.trees_[a], log_.trees_[b]);
    if (!(t.left() == log_.trees_[a])) std::swap(a, b);
    log_.events_.push_back({time, a, b, id});
    log_.trees_.push_back(std::move(t));
    log_.death_[a] = time;
    log_.death_[b] = time;
    log_.death_.push_back(std::numeric_limits<double>::infinity());
    return id;
  }

  void tie() { ++log_.ties_; }

  EventLog finish() {
    for (ClusterId id = 0; id < log_.trees_.size(); ++id) {
      if (std::isinf(log_.death_[id])) log_.final_.push_back(id);
    }
    return std::move(log_);
  }

private:
  EventLog log_;
};

// ---------------------------------------------------------------------------
// Direct construction: clusters are grouped by mass; selection is
// proportional to row sums over mass classes.

namespace {

class MassClasses {
public:
  MassClasses(const Kernel& kernel) : kernel_(kernel) {}

  void add(ClusterId id, double mass) {
    std::size_t c = class_for(mass);
    auto& cls = classes_[c];
    if (where_.size() <= id) where_.resize(id + 1);
    where_[id] = {c, cls.members.size()};
    cls.members.push_back(id);
    for (auto& e : classes_) e.row += kernel_(e.mass, mass);
  }

  void remove(ClusterId id) {
    const auto [c, pos] = where_[id];
    auto& cls = classes_[c];
    const ClusterId last = cls.members.back();
    cls.members[pos] = last;
    where_[last].second = pos;
    cls.members.pop_back();
    for (auto& e : classes_) e.row -= kernel_(e.mass, cls.mass);
  }

  /// Sum over ordered pairs of distinct clusters of K.
  double ordered_total() {
    total_weights_.resize(classes_.size());
    double s = 0.0;
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      const auto& e = classes_[c];
      const double n = static_cast<double>(e.members.size());
      const double w = n == 0 ? 0.0 : std::max(0.0, n * (e.row - e.self));
      total_weights_[c] = w;
      s += w;
    }
    return s;
  }

  /// Needs ordered_total() first.
  std::pair<ClusterId, ClusterId> pick(CounterRng& rng, double total) {
    const std::size_t c = choose(total_weights_, total, rng);
    const auto& first = classes_[c];
    const std::size_t i = static_cast<std::size_t>(rng.below(first.members.size()));
    partner_weights_.resize(classes_.size());
    double s = 0.0;
    for (std::size_t d = 0; d < classes_.size(); ++d) {
      const double n = static_cast<double>(classes_[d].members.size()) - (d == c ? 1.0 : 0.0);
      const double w = n > 0 ? n * kernel_(first.mass, classes_[d].mass) : 0.0;
      partner_weights_[d] = w;
      s += w;
    }
    const std::size_t d = choose(partner_weights_, s, rng);
    const auto& second = classes_[d];
    std::size_t j;
    if (d == c) {
      j = static_cast<std::size_t>(rng.below(second.members.size() - 1));
      if (j >= i) ++j;
    } else {
      j = static_cast<std::size_t>(rng.below(second.members.size()));
    }
    return {first.members[i], second.members[j]};
  }

  /// Full recompute of row sums; drops empty classes.
  void refresh() {
    std::vector<Class> kept;
    for (auto& e : classes_) {
      if (!e.members.empty()) kept.push_back(std::move(e));
    }
    classes_ = std::move(kept);
    index_.clear();
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      index_[classes_[c].mass] = c;
      for (std::size_t p = 0; p < classes_[c].members.size(); ++p) where_[classes_[c].members[p]] = {c, p};
    }
    for (auto& e : classes_) {
      double row = 0.0;
      for (const auto& d : classes_) row += static_cast<double>(d.members.size()) * kernel_(e.mass, d.mass);
      e.row = row;
    }
  }

private:
  struct Class {
    double mass;
    double self;  // K(mass, mass)
    double row = 0.0;
    std::vector<ClusterId> members;
  };

  std::size_t class_for(double mass) {
    auto it = index_.find(mass);
    if (it != index_.end()) return it->second;
    Class cls{mass, kernel_(mass, mass), 0.0, {}};
    for (const auto& d : classes_) cls.row += static_cast<double>(d.members.size()) * kernel_(mass, d.mass);
    classes_.push_back(std::move(cls));
    index_[mass] = classes_.size() - 1;
    return classes_.size() - 1;
  }

  static std::size_t choose(const std::vector<double>& w, double total, CounterRng& rng) {
    double u = rng.uniform() * total;
    std::size_t last = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k] <= 0.0) continue;
      last = k;
      if (u < w[k]) return k;
      u -= w[k];
    }
    return last;
  }

  const Kernel& kernel_;
  std::vector<Class> classes_;
  std::unordered_map<double, std::size_t> index_;
  std::vector<std::pair<std::size_t, std::size_t>> where_;
  std::vector<double> total_weights_;
  std::vector<double> partner_weights_;
};

}  // namespace

EventLog simulate_direct(const SimConfig& cfg) {
  LogBuilder builder(cfg);
  const std::size_t n = cfg.masses.size();
  CounterRng rng(cfg.seed, cfg.replica, 0);
  MassClasses classes(cfg.kernel);
  for (ClusterId i = 0; i < n; ++i) classes.add(i, cfg.masses[i]);
  double t = 0.0;
  std::size_t alive = n;
  std::size_t since_refresh = 0;
  while (alive > 1) {
    const double total = classes.ordered_total();
    if (!(total > 0.0)) break;
    const double rate = total / (2.0 * builder.scale());
    t += rng.exponential() / rate;
    if (t > cfg.horizon) break;
    auto [a, b] = classes.pick(rng, total);
    const double m = builder.tree(a).mass() + builder.tree(b).mass();
    classes.remove(a);
    classes.remove(b);
    const ClusterId id = builder.merge(t, a, b);
    classes.add(id, m);
    --alive;
    if (++since_refresh == 4096) {
      classes.refresh();
      since_refresh = 0;
    }
  }
  return builder.finish();
}

// ---------------------------------------------------------------------------
// Coupled construction: S_{i,j} = max(S_i, S_j) + (scale / K) U_{i,j}, with
// U_{i,j} a function of (seed, replica, labeled tree {i,j}).

EventLog simulate_coupled(const SimConfig& cfg) {
  if (cfg.masses.size() > kCoupledMaxParticles) {
    throw ConfigError("coupled construction supports at most 12 particles");
  }
  LogBuilder builder(cfg);
  const std::size_t n = cfg.masses.size();

  struct Live {
    ClusterId id;
    LabeledTree labels;
    double birth;
  };
  struct Clock {
    double time;
    std::string key;
  };
  std::vector<Live> live;
  for (ClusterId i = 0; i < n; ++i) live.push_back({i, LabeledTree::leaf(static_cast<ParticleId>(i + 1)), 0.0});
  std::map<std::pair<ClusterId, ClusterId>, Clock> clocks;

  auto materialise = [&](const Live& a, const Live& b) {
    LabeledTree joined = LabeledTree::node(a.labels, b.labels);
    CounterRng stream(cfg.seed, cfg.replica, fnv1a(joined.key()));
    const double u = stream.exponential();
    const double k = cfg.kernel(builder.tree(a.id).mass(), builder.tree(b.id).mass());
    const double time = std::max(a.birth, b.birth) + builder.scale() / k * u;
    clocks[{std::min(a.id, b.id), std::max(a.id, b.id)}] = {time, joined.key()};
  };
  for (std::size_t i = 0; i < live.size(); ++i) {
    for (std::size_t j = i + 1; j < live.size(); ++j) materialise(live[i], live[j]);
  }

  while (live.size() > 1) {
    auto best = clocks.end();
    for (auto it = clocks.begin(); it != clocks.end(); ++it) {
      if (best == clocks.end() || it->second.time < best->second.time) {
        best = it;
      } else if (it->second.time == best->second.time) {
        builder.tie();
        if (it->second.key < best->second.key) best = it;
      }
    }
    const double time = best->second.time;
    if (time > cfg.horizon) break;
    const auto [a, b] = best->first;
    auto find = [&](ClusterId id) {
      return std::find_if(live.begin(), live.end(), [id](const Live& l) { return l.id == id; });
    };
    Live la = *find(a);
    Live lb = *find(b);
    live.erase(find(a));
    live.erase(find(b));
    for (auto it = clocks.begin(); it != clocks.end();) {
      const auto [p, q] = it->first;
      it = (p == a || p == b || q == a || q == b) ? clocks.erase(it) : std::next(it);
    }
    const ClusterId id = builder.merge(time, a, b);
    Live merged{id, LabeledTree::node(la.labels, lb.labels), time};
    for (const auto& other : live) materialise(merged, other);
    live.push_back(std::move(merged));
  }
  return builder.finish();
}

EventLog simulate(const SimConfig& cfg) {
  return cfg.construction == Construction::direct ? simulate_direct(cfg) : simulate_coupled(cfg);
}

// ---------------------------------------------------------------------------

std::vector<ClusterId> EventLog::alive_at(double t) const {
  if (t > horizon_) throw std::out_of_range("time beyond the simulation horizon");
  std::vector<ClusterId> out;
  for (ClusterId id = 0; id < trees_.size(); ++id) {
    const double born = id < n_ ? 0.0 : events_[id - n_].time;
    if (born <= t && t < death_[id]) out.push_back(id);
  }
  return out;
}

std::optional<double> EventLog::death_time(ClusterId id) const {
  if (id >= death_.size()) throw std::out_of_range("unknown cluster id");
  if (std::isinf(death_[id])) return std::nullopt;
  return death_[id];
}

std::size_t EventLog::events_up_to(double t) const {
  return static_cast<std::size_t>(
      std::upper_bound(events_.begin(), events_.end(), t,
                       [](double v, const CoagulationEvent& e) { return v < e.time; }) -
      events_.begin());
}

void EventLog::write_events_csv(std::ostream& out) const {
  out << "event_index,time,left_serial,right_serial\n";
  for (std::size_t k = 0; k < events_.size(); ++k) {
    const auto& e = events_[k];
    out << k << ',' << format_real(e.time) << ",\"" << serialize(trees_[e.left]) << "\",\""
        << serialize(trees_[e.right]) << "\"\n";
  }
}

void EventLog::write_trees(std::ostream& out) const {
  for (ClusterId id : final_) out << serialize(trees_[id]) << '\n';
}

EmpiricalHistoricalMeasure empirical_measure(const EventLog& log, double t) {
  EmpiricalHistoricalMeasure m;
  m.atom_weight = 1.0 / static_cast<double>(log.initial_size());
  for (ClusterId id : log.alive_at(t)) m.trees.push_back(log.tree(id));
  return m;
}

double evaluate_functional(const EmpiricalHistoricalMeasure& m, const TreeFunctional& f) {
  double s = 0.0;
  for (const auto& xi : m.trees) s += f(xi);
  return s * m.atom_weight;
}

double tightness_diagnostic(const EmpiricalHistoricalMeasure& m, int n0) {
  std::size_t count = 0;
  for (const auto& xi : m.trees) {
    if (xi.leaves() >= n0) ++count;
  }
  return static_cast<double>(count) * m.atom_weight;
}

}  // namespace coagtree
