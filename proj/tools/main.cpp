// coagtree command-line driver.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "coagtree/error.hpp"
#include "coagtree/functional.hpp"
#include "coagtree/kernel.hpp"
#include "coagtree/limit_measure.hpp"
#include "coagtree/lln.hpp"
#include "coagtree/rng.hpp"
#include "coagtree/simulation.hpp"
#include "coagtree/smoluchowski.hpp"
#include "coagtree/spectrum.hpp"

#ifndef COAGTREE_VERSION
#define COAGTREE_VERSION "unknown"
#endif
#ifndef COAGTREE_DATA_DIR
#define COAGTREE_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace coagtree;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitGelation = 3;

struct Common {
  std::string kernel = "constant";
  std::string kernel_file;
  std::string mu0_file;
  double t = 2.0;
  double tol = 1e-8;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
  std::string out = ".";
  bool allow_near_gelation = false;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hash_hex(std::uint64_t h) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("COAGTREE_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used != std::strlen(env)) throw std::invalid_argument(env);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(std::string("COAGTREE_SEED is not an unsigned integer: ") + env);
    }
  }
  return 1;
}

Kernel kernel_of(const Common& c) {
  if (!c.kernel_file.empty()) return load_kernel_grid(c.kernel_file);
  return builtin_kernel(c.kernel);
}

MassSpectrum mu0_of(const Common& c) {
  if (c.mu0_file.empty()) return MassSpectrum::monodisperse(1.0);
  return load_spectrum_csv(c.mu0_file);
}

class Manifest {
public:
  Manifest(std::string subcommand, const Common& c) : dir_(c.out) {
    j_["subcommand"] = std::move(subcommand);
    j_["version"] = COAGTREE_VERSION;
    j_["config"] = json::object();
    j_["inputs"] = json::object();
    j_["outputs"] = json::array();
    set("kernel", c.kernel_file.empty() ? c.kernel : "file");
    set("t", c.t);
    set("tol", c.tol);
    set("jobs", c.jobs);
    set("allow_near_gelation", c.allow_near_gelation);
    if (!c.kernel_file.empty()) input("kernel_file", c.kernel_file);
    if (!c.mu0_file.empty()) input("mu0_file", c.mu0_file);
  }

  template <class T>
  void set(const std::string& key, const T& value) {
    j_["config"][key] = value;
  }
  void seed(std::uint64_t s) { j_["seed"] = s; }
  void input(const std::string& key, const std::string& path) {
    j_["inputs"][key] = {{"path", path}, {"fnv1a64", hash_hex(fnv1a(read_file(path)))}};
  }
  fs::path output(const std::string& name) {
    j_["outputs"].push_back(name);
    return dir_ / name;
  }
  void write() const {
    fs::create_directories(dir_);
    std::ofstream out(dir_ / "manifest.json");
    out << j_.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write manifest in " + dir_.string());
  }

private:
  fs::path dir_;
  json j_;
};

void add_common(CLI::App* app, Common& c, bool with_seed) {
  app->add_option("--kernel", c.kernel, "constant | product | additive | inverse-sum")
      ->check(CLI::IsMember(builtin_kernel_names()));
  app->add_option("--kernel-file", c.kernel_file, "kernel grid CSV (overrides --kernel)")->check(CLI::ExistingFile);
  app->add_option("--mu0", c.mu0_file, "initial spectrum CSV (mass,weight); default delta_1")
      ->check(CLI::ExistingFile);
  app->add_option("--t", c.t, "time horizon")->check(CLI::NonNegativeNumber);
  app->add_option("--tol", c.tol, "solver tolerance")->check(CLI::PositiveNumber);
  if (with_seed) {
    app->add_option_function<std::uint64_t>(
        "--seed", [&c](const std::uint64_t& s) { c.seed = s; }, "RNG seed (fallback: COAGTREE_SEED)");
  }
  app->add_option("--jobs", c.jobs, "worker threads (0 = all cores)");
  app->add_option("--out", c.out, "output directory");
  app->add_flag("--allow-near-gelation", c.allow_near_gelation, "run past the gelation guard");
}

template <class Body>
void parallel_indices(std::size_t count, unsigned jobs, Body body) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(count, 1)));
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex m;
  for (unsigned w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += jobs) body(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------

struct GalleryEntry {
  const char* kernel;
  double t;
};

// The product kernel gels at t = 1 from delta_1.
constexpr GalleryEntry kGallery[] = {{"constant", 5.0}, {"product", 0.9}, {"inverse-sum", 15.0}};

int run_gallery(const Common& c, std::size_t n) {
  Manifest manifest("gallery", c);
  const auto seed = resolve_seed(c.seed);
  manifest.seed(seed);
  manifest.set("n", n);
  json horizons;
  for (const auto& g : kGallery) horizons[g.kernel] = g.t;
  manifest.set("horizons", horizons);
  std::vector<fs::path> files;
  for (const auto& g : kGallery) files.push_back(manifest.output(std::string("gallery_") + g.kernel + ".txt"));
  const fs::path summary_path = manifest.output("gallery.json");
  manifest.write();

  json summary = json::array();
  for (std::size_t k = 0; k < std::size(kGallery); ++k) {
    SimConfig cfg;
    cfg.masses = MassSpectrum::monodisperse(1.0).sample_counts(n);
    cfg.kernel = builtin_kernel(kGallery[k].kernel);
    cfg.horizon = kGallery[k].t;
    cfg.seed = seed;
    cfg.replica = k;
    const EventLog log = simulate_direct(cfg);
    std::ofstream out(files[k]);
    log.write_trees(out);
    int largest = 0;
    for (auto id : log.final_population()) largest = std::max(largest, log.tree(id).leaves());
    summary.push_back({{"kernel", kGallery[k].kernel},
                       {"t", kGallery[k].t},
                       {"trees", log.final_population().size()},
                       {"events", log.events().size()},
                       {"largest_tree_leaves", largest},
                       {"file", files[k].filename().string()}});
    std::cout << kGallery[k].kernel << ": " << log.final_population().size() << " trees at t=" << kGallery[k].t
              << ", largest " << largest << " leaves -> " << files[k].string() << '\n';
  }
  std::ofstream(summary_path) << json{{"manifest", "manifest.json"}, {"gallery", summary}}.dump(2) << '\n';
  return 0;
}

int run_simulate(const Common& c, std::size_t n, std::size_t replicas, const std::string& construction) {
  const Kernel kernel = kernel_of(c);
  const MassSpectrum mu0 = mu0_of(c);
  const Construction how = parse_construction(construction);
  if (replicas == 0) throw ConfigError("--replicas must be positive");
  Manifest manifest("simulate", c);
  const auto seed = resolve_seed(c.seed);
  manifest.seed(seed);
  manifest.set("n", n);
  manifest.set("replicas", replicas);
  manifest.set("construction", construction);
  auto suffix = [&](std::size_t r) { return replicas == 1 ? std::string() : "_r" + std::to_string(r); };
  std::vector<std::pair<fs::path, fs::path>> files;
  for (std::size_t r = 0; r < replicas; ++r) {
    auto events = manifest.output("events" + suffix(r) + ".csv");
    auto trees = manifest.output("trees" + suffix(r) + ".txt");
    files.emplace_back(std::move(events), std::move(trees));
  }
  if (n > 0) enforce_gelation_guard(kernel, mu0, c.t, c.allow_near_gelation);
  manifest.write();

  const auto masses = mu0.sample_counts(n);
  std::vector<std::optional<EventLog>> logs(replicas);
  parallel_indices(replicas, c.jobs, [&](std::size_t r) {
    SimConfig cfg;
    cfg.masses = masses;
    cfg.kernel = kernel;
    cfg.horizon = c.t;
    cfg.seed = seed;
    cfg.replica = r;
    cfg.construction = how;
    cfg.allow_near_gelation = c.allow_near_gelation;
    logs[r] = simulate(cfg);
  });
  for (std::size_t r = 0; r < replicas; ++r) {
    std::ofstream ev(files[r].first);
    logs[r]->write_events_csv(ev);
    std::ofstream tr(files[r].second);
    logs[r]->write_trees(tr);
  }
  std::cout << replicas << " replica(s), N=" << n << ", t=" << c.t << ": " << logs.front()->events().size()
            << " events, " << logs.front()->final_population().size() << " trees in replica 0\n";
  return 0;
}

int run_solve(const Common& c, std::size_t samples, std::size_t max_atoms) {
  const Kernel kernel = kernel_of(c);
  const MassSpectrum mu0 = mu0_of(c);
  if (samples < 2) throw ConfigError("--samples must be at least 2");
  Manifest manifest("solve", c);
  manifest.set("samples", samples);
  manifest.set("max_atoms", max_atoms);
  const auto csv = manifest.output("solution.csv");
  const auto summary_path = manifest.output("summary.json");
  enforce_gelation_guard(kernel, mu0, c.t, c.allow_near_gelation);
  manifest.write();

  std::vector<double> times(samples);
  for (std::size_t k = 0; k < samples; ++k) times[k] = c.t * static_cast<double>(k) / static_cast<double>(samples - 1);
  SolverOptions opt;
  opt.tol = c.tol;
  opt.max_atoms = max_atoms;
  opt.sample_times = times;
  opt.allow_near_gelation = c.allow_near_gelation;
  const SolutionPath path = solve(mu0, kernel, c.t, opt);
  write_solution_csv(path, times, csv.string());

  json s;
  s["manifest"] = "manifest.json";
  s["t"] = c.t;
  s["M0"] = path.moment(0, c.t);
  s["M1"] = path.moment(1, c.t);
  s["M2"] = path.moment(2, c.t);
  s["tail_count"] = path.tail_count(c.t);
  s["tail_mass"] = path.tail_mass(c.t);
  s["lattice_size"] = path.masses().size();
  s["accepted_steps"] = path.accepted_steps();
  s["rejected_steps"] = path.rejected_steps();
  s["warnings"] = path.warnings();
  json head = json::array();
  for (std::size_t k = 0; k < std::min<std::size_t>(8, path.masses().size()); ++k) {
    head.push_back({path.masses()[k], path.weight(path.masses()[k], c.t)});
  }
  s["first_weights"] = head;
  std::ofstream(summary_path) << s.dump(2) << '\n';
  std::cout << std::setprecision(12) << "t=" << c.t << "  <1,mu_t>=" << path.moment(0, c.t)
            << "  <x,mu_t>=" << path.moment(1, c.t) << "  steps=" << path.accepted_steps() << '\n';
  for (const auto& w : path.warnings()) std::cerr << "warning: " << w << '\n';
  return 0;
}

int run_limit(const Common& c, const std::string& functional, int max_leaves, double quad_tol, int pushforward) {
  const Kernel kernel = kernel_of(c);
  const MassSpectrum mu0 = mu0_of(c);
  const TreeFunctional f = functional_from_json(functional);
  Manifest manifest("limit", c);
  manifest.set("functional", json::parse(f.spec));
  manifest.set("max_leaves", max_leaves);
  manifest.set("quad_tol", quad_tol);
  manifest.set("pushforward", pushforward);
  const auto csv = manifest.output("limit.csv");
  const auto summary_path = manifest.output("limit.json");
  enforce_gelation_guard(kernel, mu0, c.t, c.allow_near_gelation);
  manifest.write();

  SolverOptions opt;
  opt.tol = c.tol;
  opt.allow_near_gelation = c.allow_near_gelation;
  const SolutionPath path = solve(mu0, kernel, c.t, opt);
  LimitOptions lopt;
  lopt.max_leaves = max_leaves;
  lopt.tol = quad_tol;
  const auto result = limit_functional(f, path, mu0, c.t, lopt);
  {
    std::ofstream out(csv);
    write_limit_csv(result, out);
  }
  json s{{"manifest", "manifest.json"},
         {"functional", f.name},
         {"value", result.value},
         {"error", result.error},
         {"tail_bound", result.tail_bound}};
  std::cout << std::setprecision(12) << f.name << ": " << result.value << "  (quad err " << result.error
            << ", tail " << result.tail_bound << ")\n";
  if (pushforward > 0) {
    const auto pf = pushforward_check(path, mu0, c.t, pushforward, lopt);
    json rows = json::array();
    for (std::size_t k = 0; k < pf.masses.size(); ++k) {
      rows.push_back({{"mass", pf.masses[k]}, {"trees", pf.tree_sums[k]}, {"solver", pf.solver_weights[k]}});
      std::cout << "  mass " << pf.masses[k] << ": trees " << pf.tree_sums[k] << ", solver " << pf.solver_weights[k]
                << '\n';
    }
    s["pushforward"] = rows;
    s["pushforward_max_discrepancy"] = pf.max_discrepancy;
  }
  std::ofstream(summary_path) << s.dump(2) << '\n';
  return 0;
}

int run_lln_cmd(Common& c, const std::string& plan_path, bool jobs_given, bool seed_given) {
  ExperimentPlan plan = load_plan(plan_path);
  if (jobs_given) plan.jobs = c.jobs;
  if (seed_given) {
    plan.seed = *c.seed;
  } else if (std::getenv("COAGTREE_SEED")) {
    plan.seed = resolve_seed(std::nullopt);
  }
  if (c.allow_near_gelation) plan.allow_near_gelation = true;
  Manifest manifest("lln", c);
  manifest.input("plan", plan_path);
  manifest.seed(plan.seed);
  manifest.set("plan", json::parse(plan_to_json(plan)));
  const auto json_path = manifest.output("report.json");
  const auto text_path = manifest.output("report.txt");
  manifest.write();

  const ConvergenceReport report = run_lln(plan);
  json j = json::parse(report.to_json());
  j["manifest"] = "manifest.json";
  std::ofstream(json_path) << j.dump(2) << '\n';
  const auto text = report.to_text();
  std::ofstream(text_path) << text;
  std::cout << text;
  return report.verdict == Verdict::fail ? kExitFail : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marcus-Lushnikov simulation with merger histories and its Smoluchowski limit"};
  app.set_version_flag("--version", COAGTREE_VERSION);
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.require_subcommand(1);

  Common sim_c, solve_c, limit_c, lln_c, gal_c;

  auto* sim = app.add_subcommand("simulate", "simulate the tree-valued process");
  add_common(sim, sim_c, true);
  std::size_t sim_n = 128, sim_replicas = 1;
  std::string construction = "direct";
  bool gallery_mode = false;
  sim->add_option("--n", sim_n, "number of initial particles");
  sim->add_option("--replicas", sim_replicas, "independent replicas");
  sim->add_option("--construction", construction, "direct | coupled")->check(CLI::IsMember({"direct", "coupled"}));
  sim->add_flag("--gallery", gallery_mode, "one N=128 replica per built-in kernel of the gallery");

  auto* sol = app.add_subcommand("solve", "solve the Smoluchowski equation");
  add_common(sol, solve_c, false);
  std::size_t samples = 41, max_atoms = 256;
  sol->add_option("--samples", samples, "number of equally spaced output times");
  sol->add_option("--max-atoms", max_atoms, "lattice size before the overflow tail");

  auto* lim = app.add_subcommand("limit", "evaluate <f, limit measure>");
  add_common(lim, limit_c, false);
  std::string functional = "leaf";
  int max_leaves = 5, pushforward = 0;
  double quad_tol = 1e-9;
  lim->add_option("--functional", functional, "leaf | cherry | one | zero | JSON description");
  lim->add_option("--max-leaves", max_leaves, "largest enumerated shape")->check(CLI::Range(1, 8));
  lim->add_option("--quad-tol", quad_tol, "quadrature tolerance")->check(CLI::PositiveNumber);
  lim->add_option("--pushforward", pushforward, "also compare tree mass at lattice masses 1..n")
      ->check(CLI::NonNegativeNumber);

  auto* lln = app.add_subcommand("lln", "law-of-large-numbers experiment from a plan file");
  add_common(lln, lln_c, true);
  std::string plan_path = std::string(COAGTREE_DATA_DIR) + "/plans/default_lln.json";
  lln->add_option("--plan", plan_path, "experiment plan JSON")->check(CLI::ExistingFile);

  auto* gal = app.add_subcommand("gallery", "N=128 tree galleries for three kernels");
  add_common(gal, gal_c, true);
  std::size_t gal_n = 128;
  gal->add_option("--n", gal_n, "number of initial particles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (sim->parsed()) return gallery_mode ? run_gallery(sim_c, 128) : run_simulate(sim_c, sim_n, sim_replicas, construction);
    if (sol->parsed()) return run_solve(solve_c, samples, max_atoms);
    if (lim->parsed()) return run_limit(limit_c, functional, max_leaves, quad_tol, pushforward);
    if (lln->parsed()) return run_lln_cmd(lln_c, plan_path, lln->count("--jobs") > 0, lln->count("--seed") > 0);
    if (gal->parsed()) return run_gallery(gal_c, gal_n);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GelationError& e) {
    std::cerr << "gelation: " << e.what() << '\n';
    return kExitGelation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return 0;
}
