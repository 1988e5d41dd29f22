#include "coagtree/tree.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <stdexcept>

#include "coagtree/error.hpp"

namespace coagtree {

namespace {

std::strong_ordering compare_reals(double a, double b) {
  if (a < b) return std::strong_ordering::less;
  if (a > b) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace

// ---------------------------------------------------------------------------
// TreeShape

struct TreeShape::Rep {
  std::vector<TreeShape> kids;
  int leaves = 1;
  std::string key = "1";
};

TreeShape::TreeShape() {
  static const auto leaf_rep = std::make_shared<const Rep>();
  rep_ = leaf_rep;
}

TreeShape TreeShape::node(const TreeShape& a, const TreeShape& b) {
  const bool swap = b < a;
  const TreeShape& lo = swap ? b : a;
  const TreeShape& hi = swap ? a : b;
  auto rep = std::make_shared<Rep>();
  rep->kids = {lo, hi};
  rep->leaves = lo.leaves() + hi.leaves();
  rep->key = "(" + lo.key() + "," + hi.key() + ")";
  return TreeShape(std::move(rep));
}

bool TreeShape::is_leaf() const noexcept { return rep_->kids.empty(); }

const TreeShape& TreeShape::left() const {
  if (is_leaf()) throw std::invalid_argument("leaf shape has no children");
  return rep_->kids[0];
}

const TreeShape& TreeShape::right() const {
  if (is_leaf()) throw std::invalid_argument("leaf shape has no children");
  return rep_->kids[1];
}

int TreeShape::leaves() const noexcept { return rep_->leaves; }

const std::string& TreeShape::key() const noexcept { return rep_->key; }

std::strong_ordering operator<=>(const TreeShape& a, const TreeShape& b) {
  if (a.rep_ == b.rep_) return std::strong_ordering::equal;
  if (auto c = a.leaves() <=> b.leaves(); c != 0) return c;
  const int r = a.key().compare(b.key());
  return r < 0 ? std::strong_ordering::less
               : (r > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
}

bool operator==(const TreeShape& a, const TreeShape& b) {
  return a.rep_ == b.rep_ || a.key() == b.key();
}

namespace {

TreeShape parse_shape(std::string_view text, std::size_t& pos) {
  if (pos >= text.size()) throw ParseError("unexpected end of shape", pos);
  if (text[pos] == '1') {
    ++pos;
    return TreeShape::leaf();
  }
  if (text[pos] != '(') throw ParseError("expected '1' or '('", pos);
  ++pos;
  TreeShape a = parse_shape(text, pos);
  if (pos >= text.size() || text[pos] != ',') throw ParseError("expected ','", pos);
  ++pos;
  TreeShape b = parse_shape(text, pos);
  if (pos >= text.size() || text[pos] != ')') throw ParseError("expected ')'", pos);
  ++pos;
  return TreeShape::node(a, b);
}

}  // namespace

TreeShape TreeShape::parse(std::string_view text) {
  std::size_t pos = 0;
  TreeShape s = parse_shape(text, pos);
  if (pos != text.size()) throw ParseError("trailing characters after shape", pos);
  return s;
}

int count_leaves(const TreeShape& tau) { return tau.leaves(); }

int symmetry_exponent(const TreeShape& tau) {
  if (tau.is_leaf()) return 0;
  return symmetry_exponent(tau.left()) + symmetry_exponent(tau.right()) +
         (tau.left() == tau.right() ? 1 : 0);
}

double epsilon(const TreeShape& tau) {
  if (tau.is_leaf()) throw std::invalid_argument("epsilon is undefined for the leaf shape");
  return tau.left() == tau.right() ? 0.5 : 1.0;
}

std::vector<TreeShape> enumerate_shapes(int n) {
  if (n < 1) throw std::invalid_argument("shape size must be positive");
  static std::map<int, std::vector<TreeShape>> cache;
  static std::mutex mutex;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
  }
  std::vector<TreeShape> out;
  if (n == 1) {
    out.push_back(TreeShape::leaf());
  } else {
    for (int k = 1; k <= n / 2; ++k) {
      const auto small = enumerate_shapes(k);
      const auto large = enumerate_shapes(n - k);
      for (std::size_t i = 0; i < small.size(); ++i) {
        for (std::size_t j = (k == n - k ? i : 0); j < large.size(); ++j) {
          out.push_back(TreeShape::node(small[i], large[j]));
        }
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  std::lock_guard lock(mutex);
  cache.emplace(n, out);
  return out;
}

std::vector<TreeShape> enumerate_shapes_up_to(int max_leaves) {
  std::vector<TreeShape> out;
  for (int n = 1; n <= max_leaves; ++n) {
    auto s = enumerate_shapes(n);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// LabeledTree

struct LabeledTree::Rep {
  ParticleId id = 0;
  std::vector<LabeledTree> kids;
  int leaves = 1;
  std::vector<ParticleId> labels;
  std::string key;
};

LabeledTree LabeledTree::leaf(ParticleId id) {
  auto rep = std::make_shared<Rep>();
  rep->id = id;
  rep->labels = {id};
  rep->key = std::to_string(id);
  return LabeledTree(std::move(rep));
}

LabeledTree LabeledTree::node(const LabeledTree& a, const LabeledTree& b) {
  std::vector<ParticleId> merged;
  merged.reserve(a.labels().size() + b.labels().size());
  std::merge(a.labels().begin(), a.labels().end(), b.labels().begin(), b.labels().end(),
             std::back_inserter(merged));
  if (std::adjacent_find(merged.begin(), merged.end()) != merged.end()) {
    throw std::invalid_argument("labeled subtrees share a particle id");
  }
  const bool swap = b.labels().front() < a.labels().front();
  const LabeledTree& lo = swap ? b : a;
  const LabeledTree& hi = swap ? a : b;
  auto rep = std::make_shared<Rep>();
  rep->kids = {lo, hi};
  rep->leaves = a.leaves() + b.leaves();
  rep->labels = std::move(merged);
  rep->key = "{" + lo.key() + "," + hi.key() + "}";
  return LabeledTree(std::move(rep));
}

bool LabeledTree::is_leaf() const noexcept { return rep_->kids.empty(); }

ParticleId LabeledTree::id() const {
  if (!is_leaf()) throw std::invalid_argument("internal labeled node has no id");
  return rep_->id;
}

const LabeledTree& LabeledTree::left() const {
  if (is_leaf()) throw std::invalid_argument("leaf has no children");
  return rep_->kids[0];
}

const LabeledTree& LabeledTree::right() const {
  if (is_leaf()) throw std::invalid_argument("leaf has no children");
  return rep_->kids[1];
}

int LabeledTree::leaves() const noexcept { return rep_->leaves; }

const std::vector<ParticleId>& LabeledTree::labels() const noexcept { return rep_->labels; }

const std::string& LabeledTree::key() const noexcept { return rep_->key; }

TreeShape LabeledTree::shape() const {
  if (is_leaf()) return TreeShape::leaf();
  return TreeShape::node(left().shape(), right().shape());
}

namespace {

LabeledTree label_shape(const TreeShape& tau, const std::vector<ParticleId>& ids,
                        std::size_t& next) {
  if (tau.is_leaf()) return LabeledTree::leaf(ids[next++]);
  LabeledTree a = label_shape(tau.left(), ids, next);
  LabeledTree b = label_shape(tau.right(), ids, next);
  return LabeledTree::node(a, b);
}

}  // namespace

std::vector<LabeledTree> enumerate_labelings(const TreeShape& tau) {
  const int n = tau.leaves();
  std::vector<ParticleId> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), ParticleId{1});
  std::map<std::string, LabeledTree> unique;
  do {
    std::size_t next = 0;
    LabeledTree t = label_shape(tau, ids, next);
    unique.emplace(t.key(), t);
  } while (std::next_permutation(ids.begin(), ids.end()));
  std::vector<LabeledTree> out;
  out.reserve(unique.size());
  for (auto& [k, t] : unique) out.push_back(t);
  return out;
}

// ---------------------------------------------------------------------------
// HistoricalTree

struct HistoricalTree::Rep {
  double time = 0.0;
  double mass = 0.0;
  std::optional<ParticleId> label;
  std::vector<HistoricalTree> kids;
  int leaves = 1;
};

namespace {

// Lexicographic order of the canonical shape keys, computed structurally.
// '(' sorts before '1', and no key is a proper prefix of another.
template <class T>
std::strong_ordering shape_lex(const T& a, const T& b) {
  const bool la = a.is_leaf();
  const bool lb = b.is_leaf();
  if (la && lb) return std::strong_ordering::equal;
  if (la) return std::strong_ordering::greater;
  if (lb) return std::strong_ordering::less;
  if (auto c = shape_lex(a.left(), b.left()); c != 0) return c;
  return shape_lex(a.right(), b.right());
}

std::strong_ordering attribute_order(const HistoricalTree& a, const HistoricalTree& b) {
  if (a.is_leaf()) {
    if (auto c = compare_reals(a.mass(), b.mass()); c != 0) return c;
    const auto la = a.label();
    const auto lb = b.label();
    if (la.has_value() != lb.has_value()) {
      return la.has_value() ? std::strong_ordering::greater : std::strong_ordering::less;
    }
    if (la) return *la <=> *lb;
    return std::strong_ordering::equal;
  }
  if (auto c = compare_reals(a.time(), b.time()); c != 0) return c;
  if (auto c = attribute_order(a.left(), b.left()); c != 0) return c;
  return attribute_order(a.right(), b.right());
}

}  // namespace

HistoricalTree HistoricalTree::leaf(double mass, std::optional<ParticleId> label) {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw std::invalid_argument("leaf mass must be positive and finite");
  }
  auto rep = std::make_shared<Rep>();
  rep->mass = mass;
  rep->label = label;
  return HistoricalTree(std::move(rep));
}

HistoricalTree HistoricalTree::node(double time, const HistoricalTree& a, const HistoricalTree& b) {
  if (!std::isfinite(time)) throw std::invalid_argument("node time must be finite");
  if (!(time > a.time()) || !(time > b.time())) {
    throw std::invalid_argument("node time must exceed the times of both children");
  }
  const bool swap = b < a;
  const HistoricalTree& lo = swap ? b : a;
  const HistoricalTree& hi = swap ? a : b;
  auto rep = std::make_shared<Rep>();
  rep->time = time;
  rep->mass = lo.mass() + hi.mass();
  rep->kids = {lo, hi};
  rep->leaves = lo.leaves() + hi.leaves();
  return HistoricalTree(std::move(rep));
}

bool HistoricalTree::is_leaf() const noexcept { return rep_->kids.empty(); }
double HistoricalTree::time() const noexcept { return rep_->time; }
double HistoricalTree::mass() const noexcept { return rep_->mass; }
std::optional<ParticleId> HistoricalTree::label() const noexcept { return rep_->label; }
int HistoricalTree::leaves() const noexcept { return rep_->leaves; }

const HistoricalTree& HistoricalTree::left() const {
  if (is_leaf()) throw std::invalid_argument("leaf has no children");
  return rep_->kids[0];
}

const HistoricalTree& HistoricalTree::right() const {
  if (is_leaf()) throw std::invalid_argument("leaf has no children");
  return rep_->kids[1];
}

std::strong_ordering operator<=>(const HistoricalTree& a, const HistoricalTree& b) {
  if (a.rep_ == b.rep_) return std::strong_ordering::equal;
  if (auto c = a.leaves() <=> b.leaves(); c != 0) return c;
  if (auto c = shape_lex(a, b); c != 0) return c;
  return attribute_order(a, b);
}

int count_leaves(const HistoricalTree& xi) { return xi.leaves(); }

double mass(const HistoricalTree& xi) {
  if (xi.is_leaf()) return xi.mass();
  return mass(xi.left()) + mass(xi.right());
}

TreeShape shape_of(const HistoricalTree& xi) {
  if (xi.is_leaf()) return TreeShape::leaf();
  return TreeShape::node(shape_of(xi.left()), shape_of(xi.right()));
}

HistoricalTree forget_labels(const HistoricalTree& xi) {
  if (xi.is_leaf()) return HistoricalTree::leaf(xi.mass());
  return HistoricalTree::node(xi.time(), forget_labels(xi.left()), forget_labels(xi.right()));
}

LabeledTree labeled_structure(const HistoricalTree& xi) {
  if (xi.is_leaf()) {
    if (!xi.label()) throw std::invalid_argument("leaf carries no label");
    return LabeledTree::leaf(*xi.label());
  }
  return LabeledTree::node(labeled_structure(xi.left()), labeled_structure(xi.right()));
}

namespace {

void collect_times(const HistoricalTree& xi, std::vector<double>& out) {
  if (xi.is_leaf()) return;
  out.push_back(xi.time());
  collect_times(xi.left(), out);
  collect_times(xi.right(), out);
}

}  // namespace

std::vector<double> node_times(const HistoricalTree& xi) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(xi.internal_nodes()));
  collect_times(xi, out);
  return out;
}

bool has_time_ties(const HistoricalTree& xi) {
  auto times = node_times(xi);
  std::sort(times.begin(), times.end());
  return std::adjacent_find(times.begin(), times.end()) != times.end();
}

void validate_strict(const HistoricalTree& xi) {
  if (has_time_ties(xi)) throw std::invalid_argument("two internal nodes share a coagulation time");
}

// ---------------------------------------------------------------------------
// MassTree

struct MassTree::Rep {
  double mass = 0.0;
  std::vector<MassTree> kids;
  int leaves = 1;
};

namespace {

std::strong_ordering mass_values(const MassTree& a, const MassTree& b) {
  if (a.is_leaf()) return compare_reals(a.mass(), b.mass());
  if (auto c = mass_values(a.left(), b.left()); c != 0) return c;
  return mass_values(a.right(), b.right());
}

}  // namespace

MassTree MassTree::leaf(double mass) {
  if (!(mass > 0.0)) throw std::invalid_argument("leaf mass must be positive");
  auto rep = std::make_shared<Rep>();
  rep->mass = mass;
  return MassTree(std::move(rep));
}

MassTree MassTree::node(const MassTree& a, const MassTree& b) {
  const bool swap = b < a;
  const MassTree& lo = swap ? b : a;
  const MassTree& hi = swap ? a : b;
  auto rep = std::make_shared<Rep>();
  rep->mass = lo.mass() + hi.mass();
  rep->kids = {lo, hi};
  rep->leaves = lo.leaves() + hi.leaves();
  return MassTree(std::move(rep));
}

bool MassTree::is_leaf() const noexcept { return rep_->kids.empty(); }
double MassTree::mass() const noexcept { return rep_->mass; }
int MassTree::leaves() const noexcept { return rep_->leaves; }

const MassTree& MassTree::left() const {
  if (is_leaf()) throw std::invalid_argument("leaf has no children");
  return rep_->kids[0];
}

const MassTree& MassTree::right() const {
  if (is_leaf()) throw std::invalid_argument("leaf has no children");
  return rep_->kids[1];
}

std::string MassTree::serialize() const {
  if (is_leaf()) return format_real(mass());
  return "(" + left().serialize() + "," + right().serialize() + ")";
}

std::strong_ordering operator<=>(const MassTree& a, const MassTree& b) {
  if (auto c = a.leaves() <=> b.leaves(); c != 0) return c;
  if (auto c = shape_lex(a, b); c != 0) return c;
  return mass_values(a, b);
}

MassTree forget_times(const HistoricalTree& xi) {
  if (xi.is_leaf()) return MassTree::leaf(xi.mass());
  return MassTree::node(forget_times(xi.left()), forget_times(xi.right()));
}

// ---------------------------------------------------------------------------
// Intervals and kernel aggregates

std::size_t EdgeIntervalSet::alive_count(double s) const {
  return static_cast<std::size_t>(
      std::count_if(intervals.begin(), intervals.end(), [s](const EdgeInterval& e) { return e.alive_at(s); }));
}

namespace {

void append_intervals(const HistoricalTree& xi, double death, std::vector<EdgeInterval>& out) {
  if (xi.is_leaf()) {
    out.push_back({xi.mass(), 0.0, death});
    return;
  }
  append_intervals(xi.left(), xi.time(), out);
  append_intervals(xi.right(), xi.time(), out);
  out.push_back({xi.mass(), xi.time(), death});
}

}  // namespace

EdgeIntervalSet edge_intervals(const HistoricalTree& xi, double horizon) {
  if (!xi.is_leaf() && !(xi.time() < horizon)) {
    throw std::invalid_argument("node time must be strictly below the horizon");
  }
  EdgeIntervalSet set;
  set.horizon = horizon;
  set.intervals.reserve(static_cast<std::size_t>(2 * xi.leaves() - 1));
  append_intervals(xi, horizon, set.intervals);
  return set;
}

double kernel_product(const HistoricalTree& xi, const Kernel& kernel) {
  if (xi.is_leaf()) return 1.0;
  return kernel(xi.left().mass(), xi.right().mass()) * kernel_product(xi.left(), kernel) *
         kernel_product(xi.right(), kernel);
}

namespace {

std::vector<double> alive_masses(const HistoricalTree& xi, double s) {
  std::vector<double> out;
  const double horizon = std::numeric_limits<double>::infinity();
  std::vector<EdgeInterval> intervals;
  append_intervals(xi, horizon, intervals);
  for (const auto& e : intervals) {
    if (e.alive_at(s)) out.push_back(e.mass);
  }
  return out;
}

}  // namespace

double internal_interaction_rate(const HistoricalTree& xi, double s, const Kernel& kernel) {
  const auto masses = alive_masses(xi, s);
  double sum = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    for (std::size_t j = i + 1; j < masses.size(); ++j) sum += kernel(masses[i], masses[j]);
  }
  return sum;
}

double cross_interaction_rate(const HistoricalTree& a, const HistoricalTree& b, double s,
                              const Kernel& kernel) {
  const auto ma = alive_masses(a, s);
  const auto mb = alive_masses(b, s);
  double sum = 0.0;
  for (double x : ma) {
    for (double y : mb) sum += kernel(x, y);
  }
  return sum;
}

double integrated_interaction(const HistoricalTree& xi, double horizon, const Kernel& kernel) {
  std::vector<double> breaks = node_times(xi);
  breaks.push_back(0.0);
  breaks.push_back(horizon);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k];
    const double b = std::min(breaks[k + 1], horizon);
    if (b <= a) continue;
    total += internal_interaction_rate(xi, a, kernel) * (b - a);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Text format

std::string format_real(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  std::string s(buf.data(), end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace {

void write_tree(const HistoricalTree& xi, std::string& out) {
  if (xi.is_leaf()) {
    out += format_real(xi.mass());
    if (xi.label()) {
      out += '#';
      out += std::to_string(*xi.label());
    }
    return;
  }
  out += '(';
  write_tree(xi.left(), out);
  out += ',';
  write_tree(xi.right(), out);
  out += ")@";
  out += format_real(xi.time());
}

class TreeParser {
public:
  explicit TreeParser(std::string_view text) : text_(text) {}

  HistoricalTree parse_all() {
    skip_space();
    HistoricalTree t = parse_tree();
    skip_space();
    if (pos_ != text_.size()) throw ParseError("trailing characters after tree", pos_);
    return t;
  }

private:
  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                   text_[pos_] == '\n' || text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) {
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
    ++pos_;
  }

  double parse_number() {
    const std::size_t start = pos_;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc() || ptr == text_.data() + pos_) throw ParseError("expected a number", start);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    if (!std::isfinite(value)) throw ParseError("non-finite number", start);
    return value;
  }

  HistoricalTree parse_tree() {
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    if (text_[pos_] == '(') {
      ++pos_;
      HistoricalTree a = parse_tree();
      expect(',');
      HistoricalTree b = parse_tree();
      expect(')');
      const std::size_t at = pos_;
      expect('@');
      const double time = parse_number();
      if (!(time > a.time()) || !(time > b.time())) {
        throw ParseError("non-monotone coagulation time", at);
      }
      return HistoricalTree::node(time, a, b);
    }
    const std::size_t start = pos_;
    const double m = parse_number();
    if (!(m > 0.0)) throw ParseError("leaf mass must be positive", start);
    std::optional<ParticleId> label;
    if (pos_ < text_.size() && text_[pos_] == '#') {
      ++pos_;
      const std::size_t lstart = pos_;
      ParticleId id = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), id);
      if (ec != std::errc() || ptr == text_.data() + pos_) throw ParseError("expected a label", lstart);
      pos_ = static_cast<std::size_t>(ptr - text_.data());
      label = id;
    }
    return HistoricalTree::leaf(m, label);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const HistoricalTree& xi) {
  std::string out;
  write_tree(xi, out);
  return out;
}

HistoricalTree parse(std::string_view text, ParseOptions options) {
  HistoricalTree t = TreeParser(text).parse_all();
  if (options.strict && has_time_ties(t)) {
    throw ParseError("equal-time ties rejected in strict mode", 0);
  }
  return t;
}

}  // namespace coagtree
