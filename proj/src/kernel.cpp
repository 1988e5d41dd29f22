#include "coagtree/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "coagtree/error.hpp"

namespace coagtree {

Kernel::Kernel(std::string name, KernelKind kind, Rate rate, std::optional<Weight> phi,
               std::optional<double> ktilde_bound)
    : name_(std::move(name)),
      kind_(kind),
      rate_(std::move(rate)),
      phi_(std::move(phi)),
      ktilde_bound_(ktilde_bound) {
  if (!rate_) throw ConfigError("kernel needs a rate function");
}

double Kernel::phi(double x) const {
  if (!phi_) throw ConfigError("kernel " + name_ + " has no factorisation weight");
  return (*phi_)(x);
}

Kernel builtin_kernel(std::string_view name) {
  if (name == "constant") {
    return Kernel("constant", KernelKind::constant, [](double, double) { return 1.0; },
                  [](double) { return 1.0; }, 1.0);
  }
  if (name == "product") {
    return Kernel("product", KernelKind::product, [](double x, double y) { return x * y; },
                  [](double x) { return x; }, 1.0);
  }
  if (name == "additive") {
    return Kernel("additive", KernelKind::additive, [](double x, double y) { return x + y; },
                  [](double x) { return 1.0 + x; }, 1.0);
  }
  if (name == "inverse-sum") {
    return Kernel("inverse-sum", KernelKind::inverse_sum,
                  [](double x, double y) { return 1.0 / (x + y + 1.0); }, [](double) { return 1.0; },
                  1.0);
  }
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

std::vector<std::string> builtin_kernel_names() {
  return {"constant", "product", "additive", "inverse-sum"};
}

namespace {

struct Grid {
  std::vector<double> xs, ys;
  std::vector<std::vector<double>> v;

  static std::pair<std::size_t, double> locate(const std::vector<double>& g, double x) {
    if (g.size() == 1 || x <= g.front()) return {0, 0.0};
    if (x >= g.back()) return {g.size() - 2, 1.0};
    auto it = std::upper_bound(g.begin(), g.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - g.begin()) - 1;
    return {i, (x - g[i]) / (g[i + 1] - g[i])};
  }

  double raw(double x, double y) const {
    auto [i, a] = locate(xs, x);
    auto [j, b] = locate(ys, y);
    const std::size_t i1 = std::min(i + 1, xs.size() - 1);
    const std::size_t j1 = std::min(j + 1, ys.size() - 1);
    return (1 - a) * (1 - b) * v[i][j] + a * (1 - b) * v[i1][j] + (1 - a) * b * v[i][j1] +
           a * b * v[i1][j1];
  }
};

}  // namespace

Kernel tabulated_kernel(std::vector<double> xs, std::vector<double> ys,
                        std::vector<std::vector<double>> values, std::string name) {
  if (xs.empty() || ys.empty()) throw ConfigError("kernel grid is empty");
  if (!std::is_sorted(xs.begin(), xs.end()) || !std::is_sorted(ys.begin(), ys.end()) ||
      std::adjacent_find(xs.begin(), xs.end()) != xs.end() ||
      std::adjacent_find(ys.begin(), ys.end()) != ys.end()) {
    throw ConfigError("kernel grid axes must be strictly increasing");
  }
  if (values.size() != xs.size()) throw ConfigError("kernel grid row count mismatch");
  double vmax = 0.0;
  for (const auto& row : values) {
    if (row.size() != ys.size()) throw ConfigError("kernel grid column count mismatch");
    for (double v : row) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("kernel grid entries must be positive");
      vmax = std::max(vmax, v);
    }
  }
  auto grid = std::make_shared<const Grid>(Grid{std::move(xs), std::move(ys), std::move(values)});
  return Kernel(std::move(name), KernelKind::tabulated,
                [grid](double x, double y) { return 0.5 * (grid->raw(x, y) + grid->raw(y, x)); },
                [](double) { return 1.0; }, vmax);
}

Kernel load_kernel_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open kernel grid " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("malformed number '" + s + "' in " + path.string());
    }
  };
  std::string line;
  std::vector<double> xs, ys;
  std::vector<std::vector<double>> values;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() < 2) throw ConfigError("kernel grid rows need at least two cells");
    if (header) {
      for (std::size_t j = 1; j < cells.size(); ++j) ys.push_back(number(cells[j]));
      header = false;
      continue;
    }
    if (cells.size() != ys.size() + 1) throw ConfigError("kernel grid row has wrong width");
    xs.push_back(number(cells[0]));
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) row.push_back(number(cells[j]));
    values.push_back(std::move(row));
  }
  return tabulated_kernel(std::move(xs), std::move(ys), std::move(values),
                          "grid:" + path.filename().string());
}

AssumptionReport check_assumptions(const Kernel& kernel, const MassSpectrum& mu0) {
  AssumptionReport r;
  r.phi_present = kernel.has_phi();
  std::vector<double> grid;
  for (const auto& a : mu0.atoms()) grid.push_back(a.mass);
  // a few sums so that cluster masses are probed as well
  const std::size_t base = grid.size();
  for (std::size_t i = 0; i < base; ++i) {
    for (int k = 2; k <= 8; k *= 2) grid.push_back(grid[i] * k);
  }
  for (double x : grid) {
    for (double y : grid) {
      r.symmetry_residual = std::max(r.symmetry_residual, std::abs(kernel(x, y) - kernel(y, x)));
    }
  }
  if (r.phi_present) {
    double m = 0.0;
    for (const auto& a : mu0.atoms()) m += kernel.phi(a.mass) * kernel.phi(a.mass) * a.weight;
    r.phi2_moment = m;
    const double bound = kernel.ktilde_bound().value_or(std::numeric_limits<double>::infinity());
    for (double x : grid) {
      for (double y : grid) {
        const double excess = kernel(x, y) - bound * kernel.phi(x) * kernel.phi(y);
        r.factorization_residual = std::max(r.factorization_residual, excess);
      }
    }
  } else {
    r.phi2_moment = std::numeric_limits<double>::quiet_NaN();
    r.notes.push_back("no factorisation weight supplied");
  }
  if (r.symmetry_residual > 1e-12) r.notes.push_back("kernel is not symmetric on the check grid");
  if (r.factorization_residual > 1e-12) r.notes.push_back("kernel exceeds bound*phi(x)*phi(y)");
  if (r.phi_present && !std::isfinite(r.phi2_moment)) r.notes.push_back("<phi^2, mu0> is not finite");
  r.ok = r.phi_present && std::isfinite(r.phi2_moment) && r.symmetry_residual <= 1e-12 &&
         r.factorization_residual <= 1e-12;
  return r;
}

std::optional<double> gelation_time_estimate(const Kernel& kernel, const MassSpectrum& mu0) {
  switch (kernel.kind()) {
    case KernelKind::product: {
      const double m2 = mu0.moment(2.0);
      if (!(m2 > 0.0)) return std::nullopt;
      return 1.0 / m2;
    }
    case KernelKind::tabulated:
    case KernelKind::custom: {
      // tabulated kernels are bounded
      return std::nullopt;
    }
    default:
      return std::nullopt;
  }
}

void enforce_gelation_guard(const Kernel& kernel, const MassSpectrum& mu0, double horizon,
                            bool allow) {
  const auto tgel = gelation_time_estimate(kernel, mu0);
  if (!tgel || allow) return;
  if (horizon >= kGelationGuardFraction * *tgel) {
    std::ostringstream msg;
    msg << "horizon " << horizon << " is at or beyond 0.95 x estimated gelation time " << *tgel
        << " for kernel " << kernel.name() << "; pass --allow-near-gelation to override";
    throw GelationError(msg.str());
  }
}

}  // namespace coagtree
