#include "coagtree/limit_measure.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace coagtree {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

int flatten(const TreeShape& tau, int parent, TreeTemplate& tpl, int& next_leaf) {
  if (tau.is_leaf()) return -(next_leaf++) - 1;
  if (!tau.left().is_leaf() && tau.left() == tau.right()) tpl.fixed_node_order = false;
  const int idx = static_cast<int>(tpl.nodes.size());
  tpl.nodes.push_back({0, 0, parent, epsilon(tau)});
  const int l = flatten(tau.left(), idx, tpl, next_leaf);
  const int r = flatten(tau.right(), idx, tpl, next_leaf);
  tpl.nodes[static_cast<std::size_t>(idx)].left = l;
  tpl.nodes[static_cast<std::size_t>(idx)].right = r;
  return idx;
}

double child_mass(int child, std::span<const double> leaf_masses, const std::vector<double>& node_masses) {
  return child >= 0 ? node_masses[static_cast<std::size_t>(child)]
                    : leaf_masses[static_cast<std::size_t>(-child - 1)];
}

// Per (shape, leaf masses) integrand data. Writing Phi_y(s) for the rate
// integral from 0 to s, the exponent over all edges telescopes into
// Phi_root(t) + sum_k [Phi_left(s_k) + Phi_right(s_k) - Phi_k(s_k)], so the
// density is a product of one factor per internal node.
class ShapeIntegrand {
public:
  ShapeIntegrand(const TreeTemplate& tpl, std::span<const double> leaf_masses, const SolutionPath& path,
                 double t)
      : tpl_(tpl), leaves_(leaf_masses), t_(t) {
    masses_ = tpl.node_masses(leaf_masses);
    const Kernel& k = path.kernel();
    for (std::size_t i = 0; i < tpl.nodes.size(); ++i) {
      const auto& nd = tpl.nodes[i];
      const double ml = child_mass(nd.left, leaf_masses, masses_);
      const double mr = child_mass(nd.right, leaf_masses, masses_);
      factors_.push_back(nd.epsilon * k(ml, mr));
      left_.push_back(path.rate_curve(ml));
      right_.push_back(path.rate_curve(mr));
      self_.push_back(path.rate_curve(masses_[i]));
    }
    const double root_mass = tpl.nodes.empty() ? leaf_masses[0] : masses_[0];
    root_survival_ = std::exp(-path.rate_curve(root_mass)(t));
  }

  double node_factor(std::size_t k, double s) const {
    return factors_[k] * std::exp(-(left_[k](s) + right_[k](s) - self_[k](s)));
  }

  double root_survival() const { return root_survival_; }
  const std::vector<double>& node_masses() const { return masses_; }

private:
  const TreeTemplate& tpl_;
  std::span<const double> leaves_;
  double t_;
  std::vector<double> masses_;
  std::vector<double> factors_;
  std::vector<RateCurve> left_, right_, self_;
  double root_survival_ = 1.0;
};

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

class NestedIntegrator {
public:
  NestedIntegrator(const TreeTemplate& tpl, const ShapeIntegrand& g, const TreeFunctional& f,
                   std::span<const double> leaf_masses, double t, const LimitOptions& opt,
                   std::vector<TimeBox> limits)
      : tpl_(tpl), g_(g), f_(f), leaves_(leaf_masses), t_(t), opt_(opt), limits_(std::move(limits)) {}

  /// General f: integrate node times in pre-order and evaluate f on the
  /// assembled tree.
  Estimate general(std::size_t k, std::vector<double>& times, double weight, double tol) const {
    if (k == tpl_.nodes.size()) {
      return {weight * f_(tpl_.build(leaves_, times)), 0.0};
    }
    const int parent = tpl_.nodes[k].parent;
    const double upper = parent < 0 ? t_ : times[static_cast<std::size_t>(parent)];
    const double a = limits_[k].first;
    const double b = std::min(upper, limits_[k].second);
    if (!(b > a)) return {};
    double inner_err = 0.0;
    auto integrand = [&](double s) {
      times[k] = s;
      const Estimate e = general(k + 1, times, weight * g_.node_factor(k, s), tol);
      inner_err = std::max(inner_err, e.error);
      return e.value;
    };
    double err = 0.0;
    const double v = GK::integrate(integrand, a, b, std::min(opt_.max_depth, 10u), std::max(tol, 1e-8), &err);
    return {v, err + (b - a) * inner_err};
  }

private:
  const TreeTemplate& tpl_;
  const ShapeIntegrand& g_;
  const TreeFunctional& f_;
  std::span<const double> leaves_;
  double t_;
  const LimitOptions& opt_;
  std::vector<TimeBox> limits_;
};

// Gauss-Legendre collocation on [0, 1]: nodes, weights, and the matrix of
// integrals of the Lagrange basis from 0 to each node.
template <int M>
struct Collocation {
  std::array<double, M> x{}, w{};
  std::array<std::array<double, M>, M> S{};

  Collocation() {
    using G = boost::math::quadrature::gauss<double, M>;
    const auto& ab = G::abscissa();
    const auto& wt = G::weights();
    int k = 0;
    // boost stores the non-negative half
    for (std::size_t i = 0; i < ab.size(); ++i) {
      if (ab[i] == 0.0) {
        x[k] = 0.5;
        w[k++] = wt[i] / 2;
      } else {
        x[k] = (1 - ab[i]) / 2;
        w[k++] = wt[i] / 2;
        x[k] = (1 + ab[i]) / 2;
        w[k++] = wt[i] / 2;
      }
    }
    std::array<int, M> order{};
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return x[a] < x[b]; });
    auto xs = x, ws = w;
    for (int i = 0; i < M; ++i) {
      x[i] = xs[order[i]];
      w[i] = ws[order[i]];
    }
    auto lagrange = [&](int k2, double u) {
      double v = 1.0;
      for (int j = 0; j < M; ++j) {
        if (j != k2) v *= (u - x[j]) / (x[k2] - x[j]);
      }
      return v;
    };
    for (int j = 0; j < M; ++j) {
      for (int k2 = 0; k2 < M; ++k2) {
        double acc = 0.0;
        for (int q = 0; q < M; ++q) acc += x[j] * w[q] * lagrange(k2, x[j] * x[q]);
        S[j][k2] = acc;
      }
    }
  }
};

// Cumulative node integrals J_k(u) = int_lo^u h_k(s) prod_children J_c(s) ds,
// evaluated on one set of collocation points aligned with the solver grid,
// where the integrand is smooth.
template <int M>
double separable_integral(const TreeTemplate& tpl, const ShapeIntegrand& g, const std::vector<double>& breaks,
                          const std::vector<TimeBox>& limits) {
  static const Collocation<M> col;
  const std::size_t panels = breaks.size() - 1;
  const std::size_t n = tpl.nodes.size();
  // at[k][p * M + j]: J_k at node j of panel p; end[k][p]: J_k at breaks[p]
  std::vector<std::vector<double>> at(n, std::vector<double>(panels * M));
  std::vector<std::vector<double>> end(n, std::vector<double>(panels + 1, 0.0));
  std::array<double, M> F{};
  for (std::size_t k = n; k-- > 0;) {
    const auto& nd = tpl.nodes[k];
    for (std::size_t p = 0; p < panels; ++p) {
      const double a = breaks[p];
      const double h = breaks[p + 1] - a;
      const double mid = a + h / 2;
      const bool active = mid > limits[k].first && mid < limits[k].second;
      for (int j = 0; j < M; ++j) {
        if (!active) {
          F[j] = 0.0;
          continue;
        }
        double v = g.node_factor(k, a + h * col.x[j]);
        for (int c : {nd.left, nd.right}) {
          if (c >= 0) v *= at[static_cast<std::size_t>(c)][p * M + j];
        }
        F[j] = v;
      }
      double total = 0.0;
      for (int j = 0; j < M; ++j) {
        double acc = 0.0;
        for (int q = 0; q < M; ++q) acc += col.S[j][q] * F[q];
        at[k][p * M + j] = end[k][p] + h * acc;
        total += col.w[j] * F[j];
      }
      end[k][p + 1] = end[k][p] + h * total;
    }
  }
  return end[0][panels];
}

// Valid node times for evaluating a time-free f: proportional to height.
std::vector<double> representative_times(const TreeTemplate& tpl, double t) {
  std::vector<int> height(tpl.nodes.size(), 1);
  for (std::size_t k = tpl.nodes.size(); k-- > 0;) {
    for (int c : {tpl.nodes[k].left, tpl.nodes[k].right}) {
      if (c >= 0) height[k] = std::max(height[k], height[static_cast<std::size_t>(c)] + 1);
    }
  }
  std::vector<double> times(tpl.nodes.size());
  const double top = tpl.nodes.empty() ? 1.0 : height[0] + 1.0;
  for (std::size_t k = 0; k < times.size(); ++k) times[k] = t * height[k] / top;
  return times;
}

void check_query(const TreeTemplate& tpl, std::span<const double> leaf_masses,
                 std::span<const double> times, double horizon) {
  if (static_cast<int>(leaf_masses.size()) != tpl.leaf_count) {
    throw std::invalid_argument("leaf mass vector has the wrong length");
  }
  if (times.size() != tpl.nodes.size()) throw std::invalid_argument("node time vector has the wrong length");
  for (std::size_t k = 0; k < times.size(); ++k) {
    const int parent = tpl.nodes[k].parent;
    const double upper = parent < 0 ? horizon : times[static_cast<std::size_t>(parent)];
    if (!(times[k] > 0.0) || !(times[k] < upper)) {
      throw std::invalid_argument("node times must be positive and increase towards the root");
    }
  }
}

}  // namespace

TreeTemplate TreeTemplate::of(const TreeShape& tau) {
  TreeTemplate tpl;
  tpl.shape = tau;
  int next_leaf = 0;
  flatten(tau, -1, tpl, next_leaf);
  tpl.leaf_count = next_leaf;
  tpl.symmetry_factor = std::ldexp(1.0, -symmetry_exponent(tau));
  return tpl;
}

std::vector<double> TreeTemplate::node_masses(std::span<const double> leaf_masses) const {
  std::vector<double> m(nodes.size(), 0.0);
  for (std::size_t k = nodes.size(); k-- > 0;) {
    m[k] = child_mass(nodes[k].left, leaf_masses, m) + child_mass(nodes[k].right, leaf_masses, m);
  }
  return m;
}

HistoricalTree TreeTemplate::build(std::span<const double> leaf_masses, std::span<const double> times,
                                   bool label_leaves) const {
  auto make = [&](auto&& self, int child) -> HistoricalTree {
    if (child < 0) {
      const auto slot = static_cast<std::size_t>(-child - 1);
      return label_leaves ? HistoricalTree::leaf(leaf_masses[slot], static_cast<ParticleId>(slot + 1))
                          : HistoricalTree::leaf(leaf_masses[slot]);
    }
    const auto& nd = nodes[static_cast<std::size_t>(child)];
    return HistoricalTree::node(times[static_cast<std::size_t>(child)], self(self, nd.left),
                                self(self, nd.right));
  };
  return make(make, nodes.empty() ? -1 : 0);
}

double density(const TreeDensityQuery& q, const SolutionPath& path) {
  const TreeTemplate tpl = TreeTemplate::of(q.shape);
  check_query(tpl, q.leaf_masses, q.node_times, q.horizon);
  const ShapeIntegrand g(tpl, q.leaf_masses, path, q.horizon);
  double v = g.root_survival();
  for (std::size_t k = 0; k < tpl.nodes.size(); ++k) v *= g.node_factor(k, q.node_times[k]);
  // node_factor carries epsilon; the product of epsilons is 2^{-q}
  return v;
}

double density_product(const HistoricalTree& xi, double t, const SolutionPath& path) {
  const auto edges = edge_intervals(xi, t);
  double exponent = 0.0;
  for (const auto& e : edges.intervals) exponent += path.survival_exponent(e.mass, e.birth, e.death);
  const double sym = std::ldexp(1.0, -symmetry_exponent(shape_of(xi)));
  return sym * kernel_product(xi, path.kernel()) * std::exp(-exponent);
}

double density_recursive(const HistoricalTree& xi, double t, const SolutionPath& path) {
  if (xi.is_leaf()) return std::exp(-path.survival_exponent(xi.mass(), 0.0, t));
  const double s = xi.time();
  if (!(s < t)) throw std::invalid_argument("node time must be below the horizon");
  const double eps = epsilon(shape_of(xi));
  return eps * path.kernel()(xi.left().mass(), xi.right().mass()) * density_recursive(xi.left(), s, path) *
         density_recursive(xi.right(), s, path) * std::exp(-path.survival_exponent(xi.mass(), s, t));
}

std::pair<double, double> integrate_shape(const TreeFunctional& f, const TreeTemplate& tpl,
                                          std::span<const double> leaf_masses, const SolutionPath& path,
                                          double t, const LimitOptions& options) {
  if (!f.may_be_nonzero_on(tpl.shape)) return {0.0, 0.0};
  const ShapeIntegrand g(tpl, leaf_masses, path, t);
  if (tpl.nodes.empty()) {
    const std::vector<double> none;
    return {g.root_survival() * f(tpl.build(leaf_masses, none)), 0.0};
  }
  if (!(t > 0.0)) return {0.0, 0.0};
  // Per-node integration limits from the functional's time boxes. Boxes are
  // matched to template nodes only when that matching is unambiguous: one box
  // for all nodes, or a template whose node order is fixed.
  std::vector<TimeBox> limits(tpl.nodes.size(), TimeBox{0.0, t});
  bool boxed = false;
  const auto& boxes = f.time_boxes;
  if (!boxes.empty() && (boxes.size() == 1 || (boxes.size() == tpl.nodes.size() && tpl.fixed_node_order))) {
    boxed = true;
    for (std::size_t k = 0; k < limits.size(); ++k) {
      const auto& b = boxes.size() == 1 ? boxes.front() : boxes[k];
      limits[k] = {std::max(0.0, b.first), std::min(t, b.second)};
    }
  }
  if (f.untimed && (f.time_free || boxed)) {
    const double base = f.untimed(tpl.build(leaf_masses, representative_times(tpl, t)));
    if (base == 0.0) return {0.0, 0.0};
    std::vector<double> breaks{0.0, t};
    for (const auto& [a, b] : limits) {
      breaks.push_back(a);
      breaks.push_back(b);
    }
    for (double r : path.times()) {
      if (r > 0.0 && r < t) breaks.push_back(r);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end(),
                             [t](double a, double b) { return b - a <= 1e-14 * std::max(1.0, t); }),
                 breaks.end());
    breaks.back() = t;
    const double fine = separable_integral<8>(tpl, g, breaks, limits);
    const double coarse = separable_integral<6>(tpl, g, breaks, limits);
    const double scale = std::abs(base) * g.root_survival();
    return {base * g.root_survival() * fine, scale * std::abs(fine - coarse)};
  }
  NestedIntegrator integ(tpl, g, f, leaf_masses, t, options, limits);
  std::vector<double> times(tpl.nodes.size(), 0.0);
  const Estimate e = integ.general(0, times, 1.0, options.tol);
  return {g.root_survival() * e.value, g.root_survival() * e.error};
}

namespace {

// Calls visit(masses, weight) for every ordered assignment of mu0 atoms to
// the leaf slots whose total mass stays within `bound`.
template <class Visit>
void for_each_assignment(const MassSpectrum& mu0, int slots, double bound, Visit&& visit) {
  std::vector<double> masses(static_cast<std::size_t>(slots));
  auto rec = [&](auto&& self, int k, double mass, double weight) -> void {
    if (k == slots) {
      visit(masses, weight);
      return;
    }
    for (const auto& a : mu0.atoms()) {
      if (a.weight == 0.0) continue;
      if (mass + a.mass > bound * (1 + 1e-12)) break;
      masses[static_cast<std::size_t>(k)] = a.mass;
      self(self, k + 1, mass + a.mass, weight * a.weight);
    }
  };
  rec(rec, 0, 0.0, 1.0);
}

}  // namespace

LimitFunctionalResult limit_functional(const TreeFunctional& f, const SolutionPath& path,
                                       const MassSpectrum& mu0, double t, const LimitOptions& options) {
  if (options.max_leaves < 1) throw std::invalid_argument("max_leaves must be positive");
  if (t > path.horizon()) throw std::out_of_range("t beyond the solution horizon");
  LimitFunctionalResult result;
  const double bound = f.mass_bound.value_or(std::numeric_limits<double>::infinity());
  for (const auto& tau : enumerate_shapes_up_to(options.max_leaves)) {
    if (!f.may_be_nonzero_on(tau)) continue;
    const TreeTemplate tpl = TreeTemplate::of(tau);
    for_each_assignment(mu0, tpl.leaf_count, bound, [&](const std::vector<double>& masses, double w) {
      const auto [v, e] = integrate_shape(f, tpl, masses, path, t, options);
      result.terms.push_back({tau, masses, w * v, w * e});
      result.value += w * v;
      result.error += w * e;
    });
  }

  // Trees with more leaves than enumerated.
  bool covered = false;
  if (f.support) {
    covered = std::all_of(f.support->begin(), f.support->end(),
                          [&](const TreeShape& s) { return s.leaves() <= options.max_leaves; });
  }
  if (!covered && f.mass_bound && !mu0.empty()) {
    covered = (options.max_leaves + 1) * mu0.atoms().front().mass > *f.mass_bound;
  }
  if (!covered && f.sup_norm > 0.0) {
    double enumerated = 0.0;
    const TreeFunctional one = one_functional();
    for (const auto& tau : enumerate_shapes_up_to(options.max_leaves)) {
      const TreeTemplate tpl = TreeTemplate::of(tau);
      for_each_assignment(mu0, tpl.leaf_count, std::numeric_limits<double>::infinity(),
                          [&](const std::vector<double>& masses, double w) {
                            enumerated += w * integrate_shape(one, tpl, masses, path, t, options).first;
                          });
    }
    result.tail_bound = f.sup_norm * std::max(0.0, path.moment(0, t) - enumerated);
  }
  return result;
}

PushforwardReport pushforward_check(const SolutionPath& path, const MassSpectrum& mu0, double t, int n_max,
                                    const LimitOptions& options) {
  PushforwardReport report;
  if (mu0.empty()) return report;
  const double cap = n_max * mu0.atoms().front().mass;
  LimitOptions opt = options;
  opt.max_leaves = n_max;
  TreeFunctional one = one_functional();
  one.mass_bound = cap;
  const auto res = limit_functional(one, path, mu0, t, opt);
  for (double m : path.masses()) {
    if (m > cap * (1 + 1e-12)) break;
    double sum = 0.0;
    for (const auto& term : res.terms) {
      double total = 0.0;
      for (double y : term.leaf_masses) total += y;
      if (std::abs(total - m) <= 1e-9 * m) sum += term.value;
    }
    const double w = path.weight(m, t);
    report.masses.push_back(m);
    report.tree_sums.push_back(sum);
    report.solver_weights.push_back(w);
    report.max_discrepancy = std::max(report.max_discrepancy, std::abs(sum - w));
  }
  return report;
}

void write_limit_csv(const LimitFunctionalResult& result, std::ostream& out) {
  out << "shape_serial,mass_assignment,value,error\n";
  for (const auto& term : result.terms) {
    out << '"' << term.shape.key() << "\",";
    for (std::size_t k = 0; k < term.leaf_masses.size(); ++k) {
      if (k) out << ';';
      out << format_real(term.leaf_masses[k]);
    }
    out << ',' << format_real(term.value) << ',' << format_real(term.error) << '\n';
  }
}

}  // namespace coagtree
