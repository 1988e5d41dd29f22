#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coagtree/spectrum.hpp"

namespace coagtree {

enum class KernelKind { constant, product, additive, inverse_sum, tabulated, custom };

/// Symmetric positive coagulation rate K(x, y), optionally carrying the
/// factorisation K = Ktilde * phi(x) * phi(y) with Ktilde bounded.
///
/// Kernels are immutable; copies share the underlying callable.
class Kernel {
public:
  using Rate = std::function<double(double, double)>;
  using Weight = std::function<double(double)>;

  Kernel(std::string name, KernelKind kind, Rate rate, std::optional<Weight> phi = std::nullopt,
         std::optional<double> ktilde_bound = std::nullopt);

  double operator()(double x, double y) const { return rate_(x, y); }

  const std::string& name() const noexcept { return name_; }
  KernelKind kind() const noexcept { return kind_; }

  bool has_phi() const noexcept { return phi_.has_value(); }
  double phi(double x) const;
  std::optional<double> ktilde_bound() const noexcept { return ktilde_bound_; }

private:
  std::string name_;
  KernelKind kind_;
  Rate rate_;
  std::optional<Weight> phi_;
  std::optional<double> ktilde_bound_;
};

/// One of `constant`, `product`, `additive`, `inverse-sum`.
Kernel builtin_kernel(std::string_view name);

std::vector<std::string> builtin_kernel_names();

/// Kernel tabulated on a rectangular grid, bilinear in between, clamped
/// outside the grid and symmetrised as (B(x,y) + B(y,x)) / 2.
/// `values[i][j]` is the rate at (xs[i], ys[j]). Nonpositive entries are rejected.
Kernel tabulated_kernel(std::vector<double> xs, std::vector<double> ys,
                        std::vector<std::vector<double>> values, std::string name = "tabulated");

/// Grid CSV: the header row holds an arbitrary corner label followed by the
/// y grid; each following row holds an x value followed by the rates.
Kernel load_kernel_grid(const std::filesystem::path& path);

struct AssumptionReport {
  double phi2_moment = 0.0;            ///< <phi^2, mu0>; NaN when phi is absent
  double symmetry_residual = 0.0;      ///< max |K(x,y) - K(y,x)| over the check grid
  double factorization_residual = 0.0; ///< max (K - bound*phi*phi)_+ over the check grid
  bool phi_present = false;
  bool ok = false;
  std::vector<std::string> notes;
};

AssumptionReport check_assumptions(const Kernel& kernel, const MassSpectrum& mu0);

/// Gelation time heuristic 1/<x^2, mu0> for the product kernel; empty for
/// kernels with no guard.
std::optional<double> gelation_time_estimate(const Kernel& kernel, const MassSpectrum& mu0);

inline constexpr double kGelationGuardFraction = 0.95;

/// Throws GelationError when `horizon >= 0.95 * T_gel` and `allow` is false.
void enforce_gelation_guard(const Kernel& kernel, const MassSpectrum& mu0, double horizon,
                            bool allow);

}  // namespace coagtree
