#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace coagtree {

struct Atom {
  double mass;
  double weight;
};

/// Atomic measure on (0, inf): sorted, unique masses with non-negative weights.
class MassSpectrum {
public:
  MassSpectrum() = default;

  /// Duplicate masses are merged by summing weights.
  explicit MassSpectrum(std::vector<Atom> atoms);

  static MassSpectrum monodisperse(double mass = 1.0, double weight = 1.0);

  /// Empirical spectrum N^{-1} sum_i delta_{y_i}.
  static MassSpectrum empirical(std::span<const double> masses);

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }

  /// sum_k mass_k^p * weight_k
  double moment(double p) const;
  double weight_of(double mass) const;

  /// Integer particle counts summing to n, proportional to the weights
  /// (largest-remainder rounding), expanded into a list of n masses.
  std::vector<double> sample_counts(std::size_t n) const;

private:
  std::vector<Atom> atoms_;
};

/// CSV with header `mass,weight`.
MassSpectrum load_spectrum_csv(const std::filesystem::path& path);
void save_spectrum_csv(const MassSpectrum& mu, const std::filesystem::path& path);

}  // namespace coagtree
