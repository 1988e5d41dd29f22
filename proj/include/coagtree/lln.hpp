#pragma once

// Statistical experiments comparing simulated empirical tree measures with
// the limit measure, plus the finite-N checks on isolated small systems.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coagtree/functional.hpp"
#include "coagtree/kernel.hpp"
#include "coagtree/simulation.hpp"
#include "coagtree/spectrum.hpp"
#include "coagtree/statistics.hpp"

namespace coagtree {

struct ExperimentPlan {
  std::string kernel = "constant";
  std::optional<std::filesystem::path> kernel_file;
  MassSpectrum mu0 = MassSpectrum::monodisperse();
  double t = 2.0;
  std::vector<TreeFunctional> functionals;
  std::vector<std::size_t> ladder{100, 1000, 10000};
  std::vector<std::size_t> replicas{20000, 2000, 200};
  std::uint64_t seed = 1;
  double solver_tol = 1e-10;
  double quad_tol = 1e-10;
  int max_leaves = 5;
  unsigned jobs = 0;  ///< 0: hardware concurrency
  double sigmas = 3.0;
  /// INCONCLUSIVE when the largest-N standard error exceeds this.
  std::optional<double> max_se;
  bool allow_near_gelation = false;

  Kernel resolve_kernel() const;
};

/// JSON plan. Relative file paths resolve against `base_dir`. Throws ConfigError.
ExperimentPlan plan_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentPlan load_plan(const std::filesystem::path& path);
std::string plan_to_json(const ExperimentPlan& plan);

enum class Verdict { pass, fail, inconclusive };
std::string_view verdict_name(Verdict v);

struct LadderPoint {
  std::size_t n = 0;
  std::size_t replicas = 0;
  SampleSummary sample;
  double discrepancy = 0.0;  ///< distance from the mean to [limit - tail, limit + tail]
  double z = 0.0;
  double exceed_fraction = 0.0;
};

struct FunctionalReport {
  std::string name;
  std::string spec;
  double limit = 0.0;
  double quad_error = 0.0;
  double tail_bound = 0.0;
  std::vector<LadderPoint> ladder;
  double variance_slope = 0.0;
  double epsilon = 0.0;
  bool mean_ok = false;
  bool monotone_ok = false;
  bool variance_ok = false;
  bool exceedance_ok = false;
  bool slope_ok = false;  ///< diagnostic only
  Verdict verdict = Verdict::fail;
};

struct ConvergenceReport {
  std::vector<FunctionalReport> functionals;
  Verdict verdict = Verdict::fail;
  double seconds = 0.0;

  std::string to_json() const;
  std::string to_text() const;
};

ConvergenceReport run_lln(const ExperimentPlan& plan);

/// Per-replica values of each functional at horizon t for one rung.
std::vector<std::vector<double>> replicate_functionals(const std::vector<double>& masses, const Kernel& kernel,
                                                       double t, const std::vector<TreeFunctional>& fs,
                                                       std::size_t replicas, std::uint64_t seed,
                                                       std::uint64_t stream, unsigned jobs,
                                                       bool allow_near_gelation = false);

/// Finite-N density of a forest of historical trees on [0, t]: the product
/// over internal nodes of K/N times exp(-int_0^t sum over unordered pairs of
/// clusters alive at r of K/N dr).
double finite_n_density(const std::vector<HistoricalTree>& forest, double t, double n, const Kernel& kernel);

struct JumpDensityReport {
  std::size_t replicas = 0;
  std::vector<std::string> labels;
  std::vector<double> observed;
  std::vector<double> expected;  ///< probabilities
  TestResult chi2;
  /// n = 3: frequencies of the first merged pair {1,2}, {1,3}, {2,3}.
  std::vector<double> pair_frequencies;
  bool pass = false;
};

/// Isolated system of 2 or 3 particles with kernel K / scale. Event data are
/// binned by first event time (and first pair for n = 3), with one bin for
/// "no event", and compared with probabilities obtained by integrating
/// finite_n_density.
JumpDensityReport jump_density_test(const std::vector<double>& masses, const Kernel& kernel, double t,
                                    std::size_t replicas, std::uint64_t seed, double scale = 0.0,
                                    int time_bins = 10);

struct SurvivalReport {
  SampleSummary direct;    ///< 1[particle 1 never merged by t]
  SampleSummary formula;   ///< exp(-int_0^t sum_j K(y_1, y_j) / N dr) over the others
  double combined_se = 0.0;
  bool pass = false;
};

SurvivalReport survival_test(const std::vector<double>& masses, const Kernel& kernel, double t,
                             std::size_t replicas, std::uint64_t seed, unsigned jobs = 0);

struct ConstructionReport {
  TestResult first_time_ks;
  TestResult first_pair_chi2;
  std::vector<double> direct_pairs;
  std::vector<double> coupled_pairs;
  bool pass = false;
};

/// Direct vs coupled construction: law of the first event time and of the
/// first merged pair.
ConstructionReport construction_test(const std::vector<double>& masses, const Kernel& kernel,
                                     std::size_t replicas, std::uint64_t seed, unsigned jobs = 0);

}  // namespace coagtree
