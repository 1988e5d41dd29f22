#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "coagtree/error.hpp"
#include "coagtree/functional.hpp"
#include "coagtree/limit_measure.hpp"
#include "coagtree/lln.hpp"
#include "coagtree/simulation.hpp"
#include "coagtree/smoluchowski.hpp"
#include "coagtree/tree.hpp"

namespace py = pybind11;
using namespace coagtree;

namespace {

MassSpectrum spectrum_of(const py::object& mu0) {
  if (mu0.is_none()) return MassSpectrum::monodisperse();
  if (py::isinstance<py::float_>(mu0) || py::isinstance<py::int_>(mu0)) {
    return MassSpectrum::monodisperse(mu0.cast<double>());
  }
  std::vector<Atom> atoms;
  for (const auto& a : mu0) {
    const auto pair = a.cast<std::pair<double, double>>();
    atoms.push_back({pair.first, pair.second});
  }
  return MassSpectrum(std::move(atoms));
}

Kernel kernel_of(const std::string& name) { return builtin_kernel(name); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Marcus-Lushnikov historical trees and their Smoluchowski limit";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<GelationError>(m, "GelationError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  // trees
  py::class_<HistoricalTree>(m, "HistoricalTree")
      .def_property_readonly("mass", &HistoricalTree::mass)
      .def_property_readonly("time", &HistoricalTree::time)
      .def_property_readonly("leaves", &HistoricalTree::leaves)
      .def_property_readonly("is_leaf", &HistoricalTree::is_leaf)
      .def_property_readonly("label", &HistoricalTree::label)
      .def_property_readonly("left", &HistoricalTree::left)
      .def_property_readonly("right", &HistoricalTree::right)
      .def_property_readonly("shape", [](const HistoricalTree& t) { return shape_of(t).key(); })
      .def("node_times", [](const HistoricalTree& t) { return node_times(t); })
      .def("__str__", [](const HistoricalTree& t) { return serialize(t); })
      .def("__repr__", [](const HistoricalTree& t) { return "HistoricalTree('" + serialize(t) + "')"; })
      .def("__eq__", [](const HistoricalTree& a, const HistoricalTree& b) { return a == b; })
      .def("__lt__", [](const HistoricalTree& a, const HistoricalTree& b) { return a < b; })
      .def("__hash__", [](const HistoricalTree& t) { return std::hash<std::string>{}(serialize(t)); });

  m.def("leaf", [](double mass, std::optional<ParticleId> label) { return HistoricalTree::leaf(mass, label); },
        py::arg("mass"), py::arg("label") = py::none());
  m.def("node", &HistoricalTree::node, py::arg("time"), py::arg("a"), py::arg("b"));
  m.def("parse_tree", [](const std::string& text, bool strict) { return parse(text, {.strict = strict}); },
        py::arg("text"), py::arg("strict") = false);
  m.def("serialize_tree", [](const HistoricalTree& t) { return serialize(t); });
  m.def("enumerate_shapes", [](int n) {
    std::vector<std::string> keys;
    for (const auto& s : enumerate_shapes(n)) keys.push_back(s.key());
    return keys;
  });
  m.def("symmetry_exponent", [](const std::string& key) { return symmetry_exponent(TreeShape::parse(key)); });
  m.def("labelings", [](const std::string& key) {
    std::vector<std::string> out;
    for (const auto& l : enumerate_labelings(TreeShape::parse(key))) out.push_back(l.key());
    return out;
  });
  m.def("kernel_names", &builtin_kernel_names);

  // solver
  py::class_<SolutionPath>(m, "SolutionPath")
      .def_property_readonly("masses", &SolutionPath::masses)
      .def_property_readonly("times", &SolutionPath::times)
      .def_property_readonly("warnings", &SolutionPath::warnings)
      .def("weights_at", &SolutionPath::weights_at, py::arg("t"))
      .def("weight", &SolutionPath::weight, py::arg("mass"), py::arg("t"))
      .def("moment", &SolutionPath::moment, py::arg("p"), py::arg("t"))
      .def("tail_count", &SolutionPath::tail_count)
      .def("tail_mass", &SolutionPath::tail_mass)
      .def("survival_exponent", &SolutionPath::survival_exponent, py::arg("y"), py::arg("s"), py::arg("t"))
      .def("density",
           [](const SolutionPath& p, const std::string& shape, std::vector<double> masses,
              std::vector<double> times, double t) {
             return density({TreeShape::parse(shape), std::move(masses), std::move(times), t}, p);
           },
           py::arg("shape"), py::arg("leaf_masses"), py::arg("node_times"), py::arg("t"))
      .def("tree_density",
           [](const SolutionPath& p, const HistoricalTree& xi, double t) { return density_product(xi, t, p); });

  m.def(
      "solve",
      [](const std::string& kernel, double t, const py::object& mu0, double tol, std::size_t max_atoms,
         bool allow_near_gelation) {
        SolverOptions opt;
        opt.tol = tol;
        opt.max_atoms = max_atoms;
        opt.allow_near_gelation = allow_near_gelation;
        const auto spectrum = spectrum_of(mu0);
        py::gil_scoped_release release;
        return solve(spectrum, kernel_of(kernel), t, opt);
      },
      py::arg("kernel") = "constant", py::arg("t") = 2.0, py::arg("mu0") = py::none(), py::arg("tol") = 1e-8,
      py::arg("max_atoms") = 256, py::arg("allow_near_gelation") = false);

  // simulation
  py::class_<EventLog>(m, "EventLog")
      .def_property_readonly("initial_size", &EventLog::initial_size)
      .def_property_readonly("horizon", &EventLog::horizon)
      .def_property_readonly("events",
                             [](const EventLog& log) {
                               std::vector<std::tuple<double, std::size_t, std::size_t, std::size_t>> out;
                               for (const auto& e : log.events()) out.emplace_back(e.time, e.left, e.right, e.result);
                               return out;
                             })
      .def("tree", &EventLog::tree)
      .def("final_trees",
           [](const EventLog& log) {
             std::vector<HistoricalTree> out;
             for (auto id : log.final_population()) out.push_back(log.tree(id));
             return out;
           })
      .def("trees_at",
           [](const EventLog& log, double t) { return empirical_measure(log, t).trees; })
      .def("events_csv", [](const EventLog& log) {
        std::ostringstream out;
        log.write_events_csv(out);
        return out.str();
      });

  m.def(
      "simulate",
      [](std::vector<double> masses, const std::string& kernel, double t, std::uint64_t seed, std::uint64_t replica,
         const std::string& construction, bool allow_near_gelation) {
        SimConfig cfg;
        cfg.masses = std::move(masses);
        cfg.kernel = kernel_of(kernel);
        cfg.horizon = t;
        cfg.seed = seed;
        cfg.replica = replica;
        cfg.construction = parse_construction(construction);
        cfg.allow_near_gelation = allow_near_gelation;
        py::gil_scoped_release release;
        return simulate(cfg);
      },
      py::arg("masses"), py::arg("kernel") = "constant", py::arg("t") = 1.0, py::arg("seed") = 0,
      py::arg("replica") = 0, py::arg("construction") = "direct", py::arg("allow_near_gelation") = false);

  m.def(
      "evaluate",
      [](const EventLog& log, double t, const std::string& functional) {
        return evaluate_functional(empirical_measure(log, t), functional_from_json(functional));
      },
      py::arg("log"), py::arg("t"), py::arg("functional"));

  // limit measure
  m.def(
      "limit",
      [](const std::string& functional, const std::string& kernel, double t, const py::object& mu0,
         int max_leaves, double tol) {
        const auto f = functional_from_json(functional);
        const auto spectrum = spectrum_of(mu0);
        py::gil_scoped_release release;
        const auto path = solve(spectrum, kernel_of(kernel), t, {.tol = std::min(tol, 1e-8)});
        const auto r = limit_functional(f, path, spectrum, t, {.max_leaves = max_leaves, .tol = tol});
        return std::make_tuple(r.value, r.error, r.tail_bound);
      },
      py::arg("functional") = "leaf", py::arg("kernel") = "constant", py::arg("t") = 2.0,
      py::arg("mu0") = py::none(), py::arg("max_leaves") = 5, py::arg("tol") = 1e-9,
      "Returns (value, quadrature error, tail bound).");

  m.def(
      "run_lln",
      [](const std::string& plan_json) {
        const auto plan = plan_from_json(plan_json);
        py::gil_scoped_release release;
        return run_lln(plan).to_json();
      },
      py::arg("plan_json"), "Runs an experiment plan; returns the report as JSON text.");
}
