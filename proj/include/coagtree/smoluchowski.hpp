#pragma once

// Atomic Smoluchowski solver on a closed mass lattice.
//
// The state is the vector of atom weights c_k on the lattice generated by the
// initial atoms (closed under pairwise sums up to a cap), plus two scalars for
// the overflow tail: the number density and the mass density of clusters
// heavier than the cap.

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "coagtree/kernel.hpp"
#include "coagtree/spectrum.hpp"

namespace coagtree {

struct SolverOptions {
  double tol = 1e-8;
  /// Number of lattice atoms kept; heavier clusters go to the tail.
  std::size_t max_atoms = 256;
  /// Upper bound on the step size; keeps the interpolant accurate.
  double max_step = 0.02;
  /// GelationError when <x^2, mu_t> exceeds this.
  double m2_ceiling = 1e6;
  /// Extra times at which a step boundary is forced.
  std::vector<double> sample_times;
  std::size_t max_steps = 2'000'000;
  bool allow_near_gelation = false;
};

class SolutionPath;

/// r -> int_0^r sum_j K(y, x_j) c_j(u) du for one fixed y.
class RateCurve {
public:
  double operator()(double r) const;

private:
  friend class SolutionPath;
  RateCurve(const SolutionPath* path, const std::vector<double>* table) : path_(path), table_(table) {}
  const SolutionPath* path_;
  const std::vector<double>* table_;
};

class SolutionPath {
public:
  const std::vector<double>& masses() const noexcept { return masses_; }
  const std::vector<double>& times() const noexcept { return times_; }
  double horizon() const noexcept { return times_.back(); }
  const Kernel& kernel() const noexcept { return kernel_; }

  /// Lattice weights at time r (cubic Hermite between steps, clamped at 0).
  std::vector<double> weights_at(double r) const;
  MassSpectrum spectrum_at(double r) const;
  double weight(double mass, double r) const;

  /// Overflow tail: number and mass densities of clusters beyond the cap.
  double tail_count(double r) const;
  double tail_mass(double r) const;

  /// sum x^p c(x) at time r, tail included.
  double moment(int p, double r) const;

  /// Lambda(y; s, t) = int_s^t sum_j K(y, x_j) c_j(r) dr, tail included.
  double survival_exponent(double y, double s, double t) const;
  RateCurve rate_curve(double y) const { return RateCurve(this, &cumulative(y)); }

  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  std::size_t accepted_steps() const noexcept { return times_.size() - 1; }
  std::size_t rejected_steps() const noexcept { return rejected_; }

private:
  friend class RateCurve;
  friend SolutionPath solve(const MassSpectrum&, const Kernel&, double, const SolverOptions&);
  explicit SolutionPath(Kernel kernel) : kernel_(std::move(kernel)) {}

  std::size_t locate(double r) const;
  void check_time(double r) const;
  /// Cumulative integral of r -> sum_j K(y, x_j) c_j(r) at the grid times.
  const std::vector<double>& cumulative(double y) const;
  double rate_integral_to(const std::vector<double>& table, double r) const;
  double state_at(std::size_t component, double r) const;

  Kernel kernel_;
  std::vector<double> masses_;
  std::vector<double> times_;
  // state_[i] holds lattice weights, then tail count, then tail mass
  std::vector<std::vector<double>> state_;
  std::vector<std::vector<double>> deriv_;
  std::vector<std::string> warnings_;
  std::size_t rejected_ = 0;

  struct Cache {
    std::mutex mutex;
    std::map<double, std::vector<double>> table;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// The `max_atoms` smallest elements of the additive semigroup generated by
/// the atoms of mu0. For a monodisperse mu0 = c delta_m this is {m, 2m, ...}.
std::vector<double> closed_lattice(const MassSpectrum& mu0, std::size_t max_atoms);

/// Throws GelationError on second-moment blow-up or when the gelation guard
/// trips (see enforce_gelation_guard; `allow_near_gelation` disables it).
SolutionPath solve(const MassSpectrum& mu0, const Kernel& kernel, double t_end,
                   const SolverOptions& options = {});

double survival_exponent(double y, double s, double t, const SolutionPath& path);
double moment(const SolutionPath& path, int p, double r);

/// Long-format CSV `time,mass,weight` at the given times.
void write_solution_csv(const SolutionPath& path, const std::vector<double>& times,
                        const std::string& file);

}  // namespace coagtree
