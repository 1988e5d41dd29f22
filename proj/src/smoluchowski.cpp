#include "coagtree/smoluchowski.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "coagtree/error.hpp"
#include "coagtree/tree.hpp"

namespace coagtree {

namespace {

bool same_mass(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class Rhs {
public:
  Rhs(std::vector<double> masses, const Kernel& kernel) : x_(std::move(masses)), kernel_(kernel) {
    n_ = x_.size();
    cap_ = x_.back();
    k_.resize(n_ * n_);
    sum_.assign(n_ * n_, -1);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        k_[i * n_ + j] = kernel(x_[i], x_[j]);
        const double s = x_[i] + x_[j];
        if (s > cap_ * (1 + 1e-12)) continue;
        auto it = std::lower_bound(x_.begin(), x_.end(), s * (1 - 1e-12));
        if (it != x_.end() && same_mass(*it, s)) sum_[i * n_ + j] = static_cast<int>(it - x_.begin());
      }
    }
  }

  std::size_t dim() const { return n_ + 2; }

  double tail_representative(const std::vector<double>& y) const {
    const double nt = y[n_];
    return nt > 0 ? std::max(y[n_ + 1] / nt, cap_) : cap_;
  }

  void operator()(const std::vector<double>& y, std::vector<double>& dy) const {
    std::fill(dy.begin(), dy.end(), 0.0);
    const double nt = y[n_];
    const double rep = tail_representative(y);
    double d_nt = 0.0, d_mt = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double ci = y[i];
      if (ci == 0.0) continue;
      const double* ki = &k_[i * n_];
      const int* si = &sum_[i * n_];
      double row = 0.0;
      for (std::size_t j = 0; j < n_; ++j) row += ki[j] * y[j];
      double kt = 0.0;
      if (nt != 0.0) {
        kt = kernel_(x_[i], rep);
        d_mt += ci * kt * nt * x_[i];
      }
      dy[i] -= ci * (row + kt * nt);
      for (std::size_t j = i; j < n_; ++j) {
        if (y[j] == 0.0) continue;
        const double r = ki[j] * ci * y[j] * (i == j ? 0.5 : 1.0);
        const int k = si[j];
        if (k >= 0) {
          dy[static_cast<std::size_t>(k)] += r;
        } else {
          d_nt += r;
          d_mt += r * (x_[i] + x_[j]);
        }
      }
    }
    if (nt != 0.0) d_nt -= 0.5 * kernel_(rep, rep) * nt * nt;
    dy[n_] = d_nt;
    dy[n_ + 1] = d_mt;
  }

  double second_moment(const std::vector<double>& y) const {
    double m2 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) m2 += x_[i] * x_[i] * y[i];
    if (y[n_] > 0) m2 += y[n_ + 1] * y[n_ + 1] / y[n_];
    return m2;
  }

private:
  std::vector<double> x_;
  const Kernel& kernel_;
  std::size_t n_ = 0;
  double cap_ = 0.0;
  std::vector<double> k_;
  std::vector<int> sum_;
};

}  // namespace

std::vector<double> closed_lattice(const MassSpectrum& mu0, std::size_t max_atoms) {
  if (mu0.empty()) throw ConfigError("initial spectrum is empty");
  if (max_atoms == 0) throw ConfigError("max_atoms must be positive");
  std::vector<double> gens;
  for (const auto& a : mu0.atoms()) gens.push_back(a.mass);
  std::priority_queue<double, std::vector<double>, std::greater<>> heap(gens.begin(), gens.end());
  std::vector<double> out;
  while (!heap.empty() && out.size() < max_atoms) {
    const double m = heap.top();
    heap.pop();
    if (!out.empty() && same_mass(out.back(), m)) continue;
    out.push_back(m);
    for (double g : gens) heap.push(m + g);
  }
  return out;
}

SolutionPath solve(const MassSpectrum& mu0, const Kernel& kernel, double t_end,
                   const SolverOptions& options) {
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be finite and >= 0");
  if (!(options.tol > 0.0)) throw ConfigError("tol must be positive");
  if (!(options.max_step > 0.0)) throw ConfigError("max_step must be positive");
  enforce_gelation_guard(kernel, mu0, t_end, options.allow_near_gelation);

  SolutionPath path(kernel);
  path.masses_ = closed_lattice(mu0, options.max_atoms);
  const std::size_t n = path.masses_.size();
  Rhs rhs(path.masses_, kernel);
  const std::size_t dim = rhs.dim();

  std::vector<double> y(dim, 0.0);
  for (const auto& a : mu0.atoms()) {
    auto it = std::lower_bound(path.masses_.begin(), path.masses_.end(), a.mass * (1 - 1e-12));
    y[static_cast<std::size_t>(it - path.masses_.begin())] += a.weight;
  }
  std::vector<double> f(dim);
  rhs(y, f);
  path.times_.push_back(0.0);
  path.state_.push_back(y);
  path.deriv_.push_back(f);

  std::vector<double> stops;
  for (double s : options.sample_times) {
    if (s > 0.0 && s < t_end) stops.push_back(s);
  }
  stops.push_back(t_end);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  const double tol = options.tol;
  std::vector<double> k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), tmp(dim), y5(dim);
  double t = 0.0;
  double h = std::min(options.max_step, 1e-3);
  double max_tail = 0.0;
  std::size_t steps = 0;

  for (double stop : stops) {
    if (t_end == 0.0) break;
    while (t < stop) {
      if (++steps > options.max_steps) throw std::runtime_error("solver exceeded the step budget");
      h = std::min(h, options.max_step);
      bool last = false;
      if (t + h >= stop - 1e-13 * std::max(1.0, stop)) {
        h = stop - t;
        last = true;
      }
      auto stage = [&](std::vector<double>& out, std::initializer_list<std::pair<double, const std::vector<double>*>> terms) {
        for (std::size_t i = 0; i < dim; ++i) {
          double acc = y[i];
          for (const auto& [a, k] : terms) acc += h * a * (*k)[i];
          tmp[i] = acc;
        }
        rhs(tmp, out);
      };
      stage(k2, {{a21, &f}});
      stage(k3, {{a31, &f}, {a32, &k2}});
      stage(k4, {{a41, &f}, {a42, &k2}, {a43, &k3}});
      stage(k5, {{a51, &f}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
      stage(k6, {{a61, &f}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
      for (std::size_t i = 0; i < dim; ++i) {
        y5[i] = y[i] + h * (b1 * f[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
      }
      rhs(y5, k7);
      double err = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double e = h * (e1 * f[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double scale = tol + tol * std::max(std::abs(y[i]), std::abs(y5[i]));
        err = std::max(err, std::abs(e) / scale);
      }
      if (!std::isfinite(err)) throw GelationError("solver state became non-finite");
      if (err > 1.0) {
        ++path.rejected_;
        h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        continue;
      }
      t = last ? stop : t + h;
      y.swap(y5);
      f.swap(k7);
      for (std::size_t i = 0; i < n; ++i) {
        if (y[i] < 0.0 && y[i] > -tol) y[i] = 0.0;
      }
      path.times_.push_back(t);
      path.state_.push_back(y);
      path.deriv_.push_back(f);
      max_tail = std::max(max_tail, y[n + 1]);
      if (rhs.second_moment(y) > options.m2_ceiling) {
        std::ostringstream msg;
        msg << "second moment exceeded " << options.m2_ceiling << " at t=" << t
            << "; the horizon is too close to gelation";
        throw GelationError(msg.str());
      }
      const double grow = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      if (!last) h *= std::clamp(grow, 0.2, 5.0);
    }
  }
  if (max_tail > 10 * tol) {
    std::ostringstream msg;
    msg << "lattice truncation: tail mass reached " << max_tail << " (> 10*tol); raise max_atoms";
    path.warnings_.push_back(msg.str());
  }
  return path;
}

void SolutionPath::check_time(double r) const {
  if (!(r >= 0.0) || r > horizon() * (1 + 1e-14) + 1e-300) {
    std::ostringstream msg;
    msg << "time " << r << " is outside the solution horizon [0, " << horizon() << "]";
    throw std::out_of_range(msg.str());
  }
}

std::size_t SolutionPath::locate(double r) const {
  if (times_.size() < 2) return 0;
  auto it = std::upper_bound(times_.begin(), times_.end(), r);
  std::size_t i = static_cast<std::size_t>(it - times_.begin());
  if (i == 0) return 0;
  return std::min(i - 1, times_.size() - 2);
}

double SolutionPath::state_at(std::size_t c, double r) const {
  check_time(r);
  if (times_.size() < 2) return state_[0][c];
  const std::size_t i = locate(r);
  const double h = times_[i + 1] - times_[i];
  const double th = std::clamp((r - times_[i]) / h, 0.0, 1.0);
  const double th2 = th * th, th3 = th2 * th;
  return (2 * th3 - 3 * th2 + 1) * state_[i][c] + (th3 - 2 * th2 + th) * h * deriv_[i][c] +
         (-2 * th3 + 3 * th2) * state_[i + 1][c] + (th3 - th2) * h * deriv_[i + 1][c];
}

std::vector<double> SolutionPath::weights_at(double r) const {
  std::vector<double> w(masses_.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::max(0.0, state_at(k, r));
  return w;
}

MassSpectrum SolutionPath::spectrum_at(double r) const {
  const auto w = weights_at(r);
  std::vector<Atom> atoms;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] > 0.0) atoms.push_back({masses_[k], w[k]});
  }
  return MassSpectrum(std::move(atoms));
}

double SolutionPath::weight(double m, double r) const {
  auto it = std::lower_bound(masses_.begin(), masses_.end(), m * (1 - 1e-12));
  if (it == masses_.end() || !same_mass(*it, m)) return 0.0;
  return std::max(0.0, state_at(static_cast<std::size_t>(it - masses_.begin()), r));
}

double SolutionPath::tail_count(double r) const { return std::max(0.0, state_at(masses_.size(), r)); }
double SolutionPath::tail_mass(double r) const { return std::max(0.0, state_at(masses_.size() + 1, r)); }

double SolutionPath::moment(int p, double r) const {
  if (p < 0 || p > 2) throw std::invalid_argument("moment order must be 0, 1 or 2");
  const auto w = weights_at(r);
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += std::pow(masses_[k], p) * w[k];
  const double nt = tail_count(r), mt = tail_mass(r);
  if (p == 0) s += nt;
  if (p == 1) s += mt;
  if (p == 2 && nt > 0) s += mt * mt / nt;
  return s;
}

const std::vector<double>& SolutionPath::cumulative(double y) const {
  std::lock_guard lock(cache_->mutex);
  auto it = cache_->table.find(y);
  if (it != cache_->table.end()) return it->second;
  const std::size_t n = masses_.size();
  std::vector<double> ky(n);
  for (std::size_t j = 0; j < n; ++j) ky[j] = kernel_(y, masses_[j]);
  const std::size_t m = times_.size();
  // layout: [Phi(t_0..), g(t_0..), g'(t_0..)]
  std::vector<double> table(3 * m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& st = state_[i];
    const auto& dt = deriv_[i];
    double g = 0.0, dg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      g += ky[j] * st[j];
      dg += ky[j] * dt[j];
    }
    if (st[n] != 0.0 || dt[n] != 0.0) {
      const double rep = st[n] > 0 ? std::max(st[n + 1] / st[n], masses_.back()) : masses_.back();
      const double kt = kernel_(y, rep);
      g += kt * st[n];
      dg += kt * dt[n];
    }
    table[m + i] = g;
    table[2 * m + i] = dg;
  }
  table[0] = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double h = times_[i + 1] - times_[i];
    table[i + 1] = table[i] + h * (table[m + i] + table[m + i + 1]) / 2 +
                   h * h * (table[2 * m + i] - table[2 * m + i + 1]) / 12;
  }
  return cache_->table.emplace(y, std::move(table)).first->second;
}

double RateCurve::operator()(double r) const {
  path_->check_time(r);
  return path_->rate_integral_to(*table_, r);
}

double SolutionPath::rate_integral_to(const std::vector<double>& table, double r) const {
  const std::size_t m = times_.size();
  if (m < 2) return 0.0;
  const std::size_t i = locate(r);
  const double h = times_[i + 1] - times_[i];
  const double th = std::clamp((r - times_[i]) / h, 0.0, 1.0);
  const double th2 = th * th, th3 = th2 * th, th4 = th3 * th;
  const double i00 = th - th3 + th4 / 2;
  const double i10 = th2 / 2 - 2 * th3 / 3 + th4 / 4;
  const double i01 = th3 - th4 / 2;
  const double i11 = -th3 / 3 + th4 / 4;
  return table[i] + h * (table[m + i] * i00 + h * table[2 * m + i] * i10 +
                         table[m + i + 1] * i01 + h * table[2 * m + i + 1] * i11);
}

double SolutionPath::survival_exponent(double y, double s, double t) const {
  if (s > t) throw std::out_of_range("survival exponent needs s <= t");
  check_time(s);
  check_time(t);
  if (s == t) return 0.0;
  const auto& table = cumulative(y);
  return std::max(0.0, rate_integral_to(table, t) - rate_integral_to(table, s));
}

double survival_exponent(double y, double s, double t, const SolutionPath& path) {
  return path.survival_exponent(y, s, t);
}

double moment(const SolutionPath& path, int p, double r) { return path.moment(p, r); }

void write_solution_csv(const SolutionPath& path, const std::vector<double>& times,
                        const std::string& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file);
  out << "time,mass,weight\n";
  for (double r : times) {
    const auto w = path.weights_at(r);
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k] == 0.0) continue;
      out << format_real(r) << ',' << format_real(path.masses()[k]) << ',' << format_real(w[k]) << '\n';
    }
  }
}

}  // namespace coagtree
