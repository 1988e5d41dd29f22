#include "coagtree/lln.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "coagtree/error.hpp"
#include "coagtree/limit_measure.hpp"
#include "coagtree/rng.hpp"
#include "coagtree/smoluchowski.hpp"
#include "json.hpp"

namespace coagtree {

using nlohmann::json;

namespace {

unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, count) on `jobs` threads; each index is handled
// by exactly one thread and results are written by index, so the outcome
// does not depend on scheduling.
template <class Body>
void parallel_for(std::size_t count, unsigned jobs, Body&& body) {
  jobs = static_cast<unsigned>(std::min<std::size_t>(resolve_jobs(jobs), std::max<std::size_t>(count, 1)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += jobs) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

constexpr std::uint64_t replica_id(std::uint64_t stream, std::uint64_t r) { return (stream << 40) + r; }

}  // namespace

// ---------------------------------------------------------------------------
// Plans

Kernel ExperimentPlan::resolve_kernel() const {
  if (kernel_file) return load_kernel_grid(*kernel_file);
  return builtin_kernel(kernel);
}

ExperimentPlan plan_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentPlan plan;
  try {
    const json j = json::parse(text);
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    if (j.contains("kernel")) plan.kernel = j.at("kernel").get<std::string>();
    if (j.contains("kernel_file") && !j.at("kernel_file").is_null()) {
      plan.kernel_file = resolve(j.at("kernel_file").get<std::string>());
    }
    if (j.contains("mu0_file")) {
      plan.mu0 = load_spectrum_csv(resolve(j.at("mu0_file").get<std::string>()));
    } else if (j.contains("mu0")) {
      const auto& m = j.at("mu0");
      if (m.is_object() && m.contains("monodisperse")) {
        plan.mu0 = MassSpectrum::monodisperse(m.at("monodisperse").get<double>());
      } else if (m.is_array()) {
        std::vector<Atom> atoms;
        for (const auto& a : m) atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
        plan.mu0 = MassSpectrum(std::move(atoms));
      } else {
        throw ConfigError("mu0 must be {\"monodisperse\": m} or a list of [mass, weight]");
      }
    }
    if (j.contains("t")) plan.t = j.at("t").get<double>();
    if (j.contains("functionals")) {
      for (const auto& f : j.at("functionals")) plan.functionals.push_back(functional_from_json(f.dump()));
    }
    if (j.contains("ladder")) plan.ladder = j.at("ladder").get<std::vector<std::size_t>>();
    if (j.contains("replicas")) plan.replicas = j.at("replicas").get<std::vector<std::size_t>>();
    if (j.contains("seed")) plan.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("solver_tol")) plan.solver_tol = j.at("solver_tol").get<double>();
    if (j.contains("quad_tol")) plan.quad_tol = j.at("quad_tol").get<double>();
    if (j.contains("max_leaves")) plan.max_leaves = j.at("max_leaves").get<int>();
    if (j.contains("jobs")) plan.jobs = j.at("jobs").get<unsigned>();
    if (j.contains("sigmas")) plan.sigmas = j.at("sigmas").get<double>();
    if (j.contains("max_se") && !j.at("max_se").is_null()) plan.max_se = j.at("max_se").get<double>();
    if (j.contains("allow_near_gelation")) plan.allow_near_gelation = j.at("allow_near_gelation").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed plan: ") + e.what());
  }
  if (plan.functionals.empty()) plan.functionals = {leaf_indicator()};
  if (plan.ladder.size() != plan.replicas.size()) throw ConfigError("ladder and replicas differ in length");
  if (plan.ladder.size() < 2) throw ConfigError("the N ladder needs at least two rungs");
  if (!std::is_sorted(plan.ladder.begin(), plan.ladder.end())) throw ConfigError("the N ladder must increase");
  for (std::size_t r : plan.replicas) {
    if (r < 30) throw ConfigError("at least 30 replicas per rung are required");
  }
  if (!(plan.t >= 0.0)) throw ConfigError("t must be >= 0");
  if (plan.max_leaves < 1 || plan.max_leaves > 8) throw ConfigError("max_leaves must lie in 1..8");
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plan " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return plan_from_json(ss.str(), path.parent_path());
}

std::string plan_to_json(const ExperimentPlan& plan) {
  json j;
  j["kernel"] = plan.kernel;
  if (plan.kernel_file) j["kernel_file"] = plan.kernel_file->string();
  json atoms = json::array();
  for (const auto& a : plan.mu0.atoms()) atoms.push_back({a.mass, a.weight});
  j["mu0"] = atoms;
  j["t"] = plan.t;
  json fs = json::array();
  for (const auto& f : plan.functionals) {
    json fj = json::parse(f.spec);
    fj["name"] = f.name;
    fs.push_back(fj);
  }
  j["functionals"] = fs;
  j["ladder"] = plan.ladder;
  j["replicas"] = plan.replicas;
  j["seed"] = plan.seed;
  j["solver_tol"] = plan.solver_tol;
  j["quad_tol"] = plan.quad_tol;
  j["max_leaves"] = plan.max_leaves;
  j["jobs"] = plan.jobs;
  j["sigmas"] = plan.sigmas;
  j["max_se"] = plan.max_se ? json(*plan.max_se) : json(nullptr);
  j["allow_near_gelation"] = plan.allow_near_gelation;
  return j.dump(2);
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "PASS";
    case Verdict::fail:
      return "FAIL";
    default:
      return "INCONCLUSIVE";
  }
}

// ---------------------------------------------------------------------------
// LLN runs

std::vector<std::vector<double>> replicate_functionals(const std::vector<double>& masses, const Kernel& kernel,
                                                       double t, const std::vector<TreeFunctional>& fs,
                                                       std::size_t replicas, std::uint64_t seed,
                                                       std::uint64_t stream, unsigned jobs,
                                                       bool allow_near_gelation) {
  std::vector<std::vector<double>> values(fs.size(), std::vector<double>(replicas));
  parallel_for(replicas, jobs, [&](std::size_t r) {
    SimConfig cfg;
    cfg.masses = masses;
    cfg.kernel = kernel;
    cfg.horizon = t;
    cfg.seed = seed;
    cfg.replica = replica_id(stream, r);
    cfg.allow_near_gelation = allow_near_gelation;
    const EventLog log = simulate_direct(cfg);
    const auto m = empirical_measure(log, t);
    for (std::size_t k = 0; k < fs.size(); ++k) values[k][r] = evaluate_functional(m, fs[k]);
  });
  return values;
}

ConvergenceReport run_lln(const ExperimentPlan& plan) {
  const auto start = std::chrono::steady_clock::now();
  const Kernel kernel = plan.resolve_kernel();
  enforce_gelation_guard(kernel, plan.mu0, plan.t, plan.allow_near_gelation);
  SolverOptions sopt;
  sopt.tol = plan.solver_tol;
  sopt.allow_near_gelation = plan.allow_near_gelation;
  const SolutionPath path = solve(plan.mu0, kernel, plan.t, sopt);

  ConvergenceReport report;
  LimitOptions lopt;
  lopt.max_leaves = plan.max_leaves;
  lopt.tol = plan.quad_tol;
  for (const auto& f : plan.functionals) {
    FunctionalReport fr;
    fr.name = f.name;
    fr.spec = f.spec;
    const auto lim = limit_functional(f, path, plan.mu0, plan.t, lopt);
    fr.limit = lim.value;
    fr.quad_error = lim.error;
    fr.tail_bound = lim.tail_bound;
    report.functionals.push_back(std::move(fr));
  }

  std::vector<std::vector<std::vector<double>>> samples;  // [rung][functional][replica]
  for (std::size_t k = 0; k < plan.ladder.size(); ++k) {
    const auto masses = plan.mu0.sample_counts(plan.ladder[k]);
    samples.push_back(replicate_functionals(masses, kernel, plan.t, plan.functionals, plan.replicas[k], plan.seed,
                                            k + 1, plan.jobs, plan.allow_near_gelation));
  }

  const std::size_t last = plan.ladder.size() - 1;
  const double s = plan.sigmas;
  bool any_fail = false, any_inconclusive = false;
  for (std::size_t fi = 0; fi < report.functionals.size(); ++fi) {
    auto& fr = report.functionals[fi];
    for (std::size_t k = 0; k < plan.ladder.size(); ++k) {
      LadderPoint p;
      p.n = plan.ladder[k];
      p.replicas = plan.replicas[k];
      p.sample = summarize(samples[k][fi]);
      p.discrepancy = std::max(0.0, std::abs(p.sample.mean - fr.limit) - fr.tail_bound);
      p.z = p.sample.se > 0 ? (p.sample.mean - fr.limit) / p.sample.se : 0.0;
      fr.ladder.push_back(p);
    }
    fr.epsilon = 5.0 * fr.ladder[last].sample.se;
    for (std::size_t k = 0; k < plan.ladder.size(); ++k) {
      std::size_t exceed = 0;
      for (double v : samples[k][fi]) {
        if (std::abs(v - fr.limit) - fr.tail_bound > fr.epsilon) ++exceed;
      }
      fr.ladder[k].exceed_fraction = static_cast<double>(exceed) / static_cast<double>(plan.replicas[k]);
    }

    const auto& top = fr.ladder[last];
    // the unenumerated tail widens the target to an interval around the limit
    fr.mean_ok = top.discrepancy <= s * (top.sample.se + fr.quad_error);
    fr.monotone_ok = true;
    fr.variance_ok = true;
    fr.exceedance_ok = true;
    bool all_zero_variance = true;
    for (const auto& p : fr.ladder) all_zero_variance = all_zero_variance && p.sample.variance == 0.0;
    for (std::size_t k = 0; k + 1 < fr.ladder.size(); ++k) {
      const auto& a = fr.ladder[k];
      const auto& b = fr.ladder[k + 1];
      const double noise = s * std::hypot(a.sample.se, b.sample.se);
      if (b.discrepancy > a.discrepancy + noise) fr.monotone_ok = false;
      if (!all_zero_variance && !(b.sample.variance < a.sample.variance)) fr.variance_ok = false;
      const double pa = a.exceed_fraction, pb = b.exceed_fraction;
      const double enoise = s * std::sqrt(pa * (1 - pa) / static_cast<double>(a.replicas) +
                                          pb * (1 - pb) / static_cast<double>(b.replicas));
      if (pb > pa + enoise) fr.exceedance_ok = false;
    }
    if (!all_zero_variance && fr.ladder.size() >= 3) {
      std::vector<double> ns, vs;
      for (const auto& p : fr.ladder) {
        if (p.sample.variance > 0) {
          ns.push_back(static_cast<double>(p.n));
          vs.push_back(p.sample.variance);
        }
      }
      if (ns.size() >= 2) fr.variance_slope = loglog_slope(ns, vs);
      fr.slope_ok = std::abs(fr.variance_slope + 1.0) <= 0.3;
    }
    if (!(fr.mean_ok && fr.monotone_ok && fr.variance_ok && fr.exceedance_ok)) {
      fr.verdict = Verdict::fail;
    } else if (plan.max_se && top.sample.se > *plan.max_se) {
      fr.verdict = Verdict::inconclusive;
    } else {
      fr.verdict = Verdict::pass;
    }
    any_fail = any_fail || fr.verdict == Verdict::fail;
    any_inconclusive = any_inconclusive || fr.verdict == Verdict::inconclusive;
  }
  report.verdict = any_fail ? Verdict::fail : (any_inconclusive ? Verdict::inconclusive : Verdict::pass);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string ConvergenceReport::to_json() const {
  json j;
  j["verdict"] = verdict_name(verdict);
  j["seconds"] = seconds;
  json fs = json::array();
  for (const auto& f : functionals) {
    json fj;
    fj["name"] = f.name;
    fj["spec"] = json::parse(f.spec);
    fj["limit"] = f.limit;
    fj["quad_error"] = f.quad_error;
    fj["tail_bound"] = f.tail_bound;
    fj["variance_slope"] = f.variance_slope;
    fj["epsilon"] = f.epsilon;
    fj["mean_ok"] = f.mean_ok;
    fj["monotone_ok"] = f.monotone_ok;
    fj["variance_ok"] = f.variance_ok;
    fj["exceedance_ok"] = f.exceedance_ok;
    fj["slope_ok"] = f.slope_ok;
    fj["verdict"] = verdict_name(f.verdict);
    json ladder = json::array();
    for (const auto& p : f.ladder) {
      ladder.push_back({{"N", p.n},
                        {"replicas", p.replicas},
                        {"mean", p.sample.mean},
                        {"variance", p.sample.variance},
                        {"mean_sq", p.sample.mean_sq},
                        {"se", p.sample.se},
                        {"discrepancy", p.discrepancy},
                        {"z", p.z},
                        {"exceed_fraction", p.exceed_fraction}});
    }
    fj["ladder"] = ladder;
    fs.push_back(fj);
  }
  j["functionals"] = fs;
  return j.dump(2);
}

std::string ConvergenceReport::to_text() const {
  std::ostringstream out;
  out << std::setprecision(6);
  for (const auto& f : functionals) {
    out << f.name << "  limit " << f.limit << " (quad err " << f.quad_error << ", tail " << f.tail_bound
        << ")  verdict " << verdict_name(f.verdict) << '\n';
    out << std::setw(8) << "N" << std::setw(10) << "replicas" << std::setw(14) << "mean" << std::setw(14) << "se"
        << std::setw(14) << "variance" << std::setw(10) << "z" << std::setw(10) << "exceed" << '\n';
    for (const auto& p : f.ladder) {
      out << std::setw(8) << p.n << std::setw(10) << p.replicas << std::setw(14) << p.sample.mean << std::setw(14)
          << p.sample.se << std::setw(14) << p.sample.variance << std::setw(10) << std::setprecision(3) << p.z
          << std::setw(10) << p.exceed_fraction << std::setprecision(6) << '\n';
    }
    out << "  mean " << (f.mean_ok ? "ok" : "FAIL") << ", discrepancy " << (f.monotone_ok ? "ok" : "FAIL")
        << ", variance " << (f.variance_ok ? "ok" : "FAIL") << ", exceedance " << (f.exceedance_ok ? "ok" : "FAIL")
        << ", variance slope " << f.variance_slope << (f.slope_ok ? "" : " (outside -1 +/- 0.3)") << "\n\n";
  }
  out << "overall " << verdict_name(verdict) << " in " << std::setprecision(3) << seconds << " s\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Finite-N checks

double finite_n_density(const std::vector<HistoricalTree>& forest, double t, double n, const Kernel& kernel) {
  std::vector<EdgeInterval> alive;
  double value = 1.0;
  for (const auto& xi : forest) {
    const auto set = edge_intervals(xi, t);
    alive.insert(alive.end(), set.intervals.begin(), set.intervals.end());
    value *= kernel_product(xi, kernel) / std::pow(n, xi.internal_nodes());
  }
  std::vector<double> breaks{0.0, t};
  for (const auto& e : alive) breaks.push_back(e.birth);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  double integral = 0.0;
  std::vector<double> masses;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k], b = breaks[k + 1];
    if (!(b > a) || a >= t) continue;
    masses.clear();
    for (const auto& e : alive) {
      if (e.alive_at(a)) masses.push_back(e.mass);
    }
    double rate = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
      for (std::size_t j = i + 1; j < masses.size(); ++j) rate += kernel(masses[i], masses[j]);
    }
    integral += rate / n * (b - a);
  }
  return value * std::exp(-integral);
}

JumpDensityReport jump_density_test(const std::vector<double>& masses, const Kernel& kernel, double t,
                                    std::size_t replicas, std::uint64_t seed, double scale, int time_bins) {
  const std::size_t n = masses.size();
  if (n != 2 && n != 3) throw ConfigError("jump density test supports 2 or 3 particles");
  if (replicas < 30) throw ConfigError("jump density test needs at least 30 replicas");
  if (!(t > 0.0)) throw ConfigError("jump density test needs t > 0");
  if (time_bins < 1) throw ConfigError("need at least one time bin");
  const double N = scale > 0.0 ? scale : static_cast<double>(n);
  const std::size_t pairs = n == 2 ? 1 : 3;
  const std::size_t bins = static_cast<std::size_t>(time_bins);
  const std::array<std::pair<int, int>, 3> pair_list{{{0, 1}, {0, 2}, {1, 2}}};

  JumpDensityReport report;
  report.replicas = replicas;
  report.observed.assign(pairs * bins + 1, 0.0);
  const double width = t / static_cast<double>(bins);

  for (std::size_t r = 0; r < replicas; ++r) {
    SimConfig cfg;
    cfg.masses = masses;
    cfg.kernel = kernel;
    cfg.horizon = t;
    cfg.seed = seed;
    cfg.replica = replica_id(7, r);
    cfg.scale = N;
    cfg.allow_near_gelation = true;
    const EventLog log = simulate_direct(cfg);
    if (log.events().empty()) {
      report.observed.back() += 1;
      continue;
    }
    const auto& e = log.events().front();
    const auto a = std::min(e.left, e.right), b = std::max(e.left, e.right);
    std::size_t p = 0;
    for (std::size_t q = 0; q < pairs; ++q) {
      if (pair_list[q].first == static_cast<int>(a) && pair_list[q].second == static_cast<int>(b)) p = q;
    }
    const auto bin = std::min(bins - 1, static_cast<std::size_t>(e.time / width));
    report.observed[p * bins + bin] += 1;
  }

  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  std::vector<HistoricalTree> leaves;
  for (std::size_t i = 0; i < n; ++i) leaves.push_back(HistoricalTree::leaf(masses[i], static_cast<ParticleId>(i + 1)));
  report.expected.assign(pairs * bins + 1, 0.0);
  for (std::size_t p = 0; p < pairs; ++p) {
    const auto [ia, ib] = pair_list[p];
    const std::size_t ic = 3 - static_cast<std::size_t>(ia + ib);
    auto first = [&](double s1) {
      const HistoricalTree cherry = HistoricalTree::node(s1, leaves[ia], leaves[ib]);
      if (n == 2) return finite_n_density({cherry}, t, N, kernel);
      double v = finite_n_density({cherry, leaves[ic]}, t, N, kernel);
      auto second = [&](double s2) {
        return finite_n_density({HistoricalTree::node(s2, cherry, leaves[ic])}, t, N, kernel);
      };
      if (t > s1) v += GK::integrate(second, s1, t, 15, 1e-12);
      return v;
    };
    for (std::size_t k = 0; k < bins; ++k) {
      const double a = width * static_cast<double>(k);
      const double b = k + 1 == bins ? t : a + width;
      report.expected[p * bins + k] = GK::integrate(first, std::max(a, 1e-300), b, 15, 1e-12);
      std::ostringstream label;
      label << "pair{" << ia + 1 << ',' << ib + 1 << "} s in [" << a << ',' << b << ')';
      report.labels.push_back(label.str());
    }
  }
  report.expected.back() = finite_n_density(leaves, t, N, kernel);
  report.labels.push_back("no event");
  report.chi2 = chi_square_gof(report.observed, report.expected);
  if (n == 3) {
    for (std::size_t p = 0; p < pairs; ++p) {
      double c = 0.0;
      for (std::size_t k = 0; k < bins; ++k) c += report.observed[p * bins + k];
      report.pair_frequencies.push_back(c / static_cast<double>(replicas));
    }
  }
  report.pass = report.chi2.p_value > 1e-3;
  return report;
}

SurvivalReport survival_test(const std::vector<double>& masses, const Kernel& kernel, double t,
                             std::size_t replicas, std::uint64_t seed, unsigned jobs) {
  if (masses.size() < 2) throw ConfigError("survival test needs N >= 2");
  if (replicas < 2) throw ConfigError("survival test needs replicas");
  const double N = static_cast<double>(masses.size());
  const std::vector<double> others(masses.begin() + 1, masses.end());
  std::vector<double> direct(replicas), formula(replicas);
  parallel_for(replicas, jobs, [&](std::size_t r) {
    SimConfig cfg;
    cfg.masses = masses;
    cfg.kernel = kernel;
    cfg.horizon = t;
    cfg.seed = seed;
    cfg.replica = replica_id(11, r);
    cfg.allow_near_gelation = true;
    const EventLog full = simulate_direct(cfg);
    direct[r] = full.death_time(0) ? 0.0 : 1.0;

    cfg.masses = others;
    cfg.scale = N;
    cfg.replica = replica_id(12, r);
    const EventLog rest = simulate_direct(cfg);
    const double y1 = masses[0];
    double rate = 0.0;
    for (double m : others) rate += kernel(y1, m);
    double integral = 0.0, last = 0.0;
    for (const auto& e : rest.events()) {
      integral += rate * (e.time - last);
      last = e.time;
      rate += kernel(y1, rest.tree(e.result).mass()) - kernel(y1, rest.tree(e.left).mass()) -
              kernel(y1, rest.tree(e.right).mass());
    }
    integral += rate * (t - last);
    formula[r] = std::exp(-integral / N);
  });
  SurvivalReport report;
  report.direct = summarize(direct);
  report.formula = summarize(formula);
  report.combined_se = std::hypot(report.direct.se, report.formula.se);
  report.pass = std::abs(report.direct.mean - report.formula.mean) <= 3.0 * report.combined_se;
  return report;
}

ConstructionReport construction_test(const std::vector<double>& masses, const Kernel& kernel,
                                     std::size_t replicas, std::uint64_t seed, unsigned jobs) {
  const std::size_t n = masses.size();
  if (n < 2 || n > kCoupledMaxParticles) throw ConfigError("construction test needs 2..12 particles");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  auto run = [&](Construction c, std::uint64_t stream, std::vector<double>& times, std::vector<double>& counts) {
    times.assign(replicas, 0.0);
    std::vector<std::size_t> which(replicas);
    parallel_for(replicas, jobs, [&](std::size_t r) {
      SimConfig cfg;
      cfg.masses = masses;
      cfg.kernel = kernel;
      cfg.horizon = 1e12;
      cfg.seed = seed;
      cfg.replica = replica_id(stream, r);
      cfg.construction = c;
      cfg.allow_near_gelation = true;
      const EventLog log = simulate(cfg);
      const auto& e = log.events().front();
      times[r] = e.time;
      const std::pair<std::size_t, std::size_t> key{std::min(e.left, e.right), std::max(e.left, e.right)};
      which[r] = static_cast<std::size_t>(std::find(pairs.begin(), pairs.end(), key) - pairs.begin());
    });
    counts.assign(pairs.size(), 0.0);
    for (std::size_t w : which) counts[w] += 1;
  };
  ConstructionReport report;
  std::vector<double> t_direct, t_coupled;
  run(Construction::direct, 21, t_direct, report.direct_pairs);
  run(Construction::coupled, 22, t_coupled, report.coupled_pairs);
  report.first_time_ks = ks_two_sample(t_direct, t_coupled);
  report.first_pair_chi2 = chi_square_homogeneity(report.direct_pairs, report.coupled_pairs);
  report.pass = report.first_time_ks.p_value > 1e-3 && report.first_pair_chi2.p_value > 1e-3;
  return report;
}

}  // namespace coagtree
