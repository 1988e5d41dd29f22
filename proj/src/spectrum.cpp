#include "coagtree/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "coagtree/error.hpp"
#include "coagtree/tree.hpp"

namespace coagtree {

MassSpectrum::MassSpectrum(std::vector<Atom> atoms) {
  for (const auto& a : atoms) {
    if (!(a.mass > 0.0) || !std::isfinite(a.mass)) throw ConfigError("atom mass must be positive and finite");
    if (!(a.weight >= 0.0) || !std::isfinite(a.weight)) throw ConfigError("atom weight must be non-negative");
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.mass < b.mass; });
  for (const auto& a : atoms) {
    if (!atoms_.empty() && atoms_.back().mass == a.mass) {
      atoms_.back().weight += a.weight;
    } else {
      atoms_.push_back(a);
    }
  }
}

MassSpectrum MassSpectrum::monodisperse(double mass, double weight) {
  return MassSpectrum({{mass, weight}});
}

MassSpectrum MassSpectrum::empirical(std::span<const double> masses) {
  if (masses.empty()) throw ConfigError("empirical spectrum needs at least one particle");
  const double w = 1.0 / static_cast<double>(masses.size());
  std::vector<Atom> atoms;
  atoms.reserve(masses.size());
  for (double m : masses) atoms.push_back({m, w});
  return MassSpectrum(std::move(atoms));
}

double MassSpectrum::moment(double p) const {
  double s = 0.0;
  for (const auto& a : atoms_) s += std::pow(a.mass, p) * a.weight;
  return s;
}

double MassSpectrum::weight_of(double mass) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), mass,
                             [](const Atom& a, double m) { return a.mass < m; });
  if (it != atoms_.end() && it->mass == mass) return it->weight;
  return 0.0;
}

std::vector<double> MassSpectrum::sample_counts(std::size_t n) const {
  const double total = moment(0.0);
  if (!(total > 0.0)) throw ConfigError("spectrum has zero total weight");
  std::vector<std::size_t> counts(atoms_.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    const double exact = static_cast<double>(n) * atoms_[k].weight / total;
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[remainders[r % remainders.size()].second];
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t k = 0; k < atoms_.size(); ++k) out.insert(out.end(), counts[k], atoms_[k].mass);
  return out;
}

MassSpectrum load_spectrum_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spectrum file " + path.string());
  std::string line;
  std::vector<Atom> atoms;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.find_first_of("abcdefghijklmnopqrstuvwxyz") != std::string::npos) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("spectrum row needs two columns: " + line);
    try {
      atoms.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw ConfigError("malformed spectrum row: " + line);
    }
  }
  if (atoms.empty()) throw ConfigError("spectrum file has no atoms");
  return MassSpectrum(std::move(atoms));
}

void save_spectrum_csv(const MassSpectrum& mu, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "mass,weight\n";
  for (const auto& a : mu.atoms()) out << format_real(a.mass) << ',' << format_real(a.weight) << '\n';
}

}  // namespace coagtree
