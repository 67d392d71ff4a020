#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hjmra/cascade.hpp"
#include "hjmra/config.hpp"
#include "hjmra/controller.hpp"
#include "hjmra/grid.hpp"
#include "hjmra/implicit_set.hpp"
#include "hjmra/scenarios.hpp"
#include "hjmra/scltl.hpp"
#include "hjmra/sim.hpp"

namespace py = pybind11;
using namespace hjmra;

namespace {

py::array_t<double> to_array(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n ? rows.front().size() : 0;
  py::array_t<double> out({n, m});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) v(i, j) = rows[i][j];
  }
  return out;
}

py::dict report_dict(const RunReport& rep) {
  const auto& tr = rep.traj;
  py::list switches;
  for (const auto& s : tr.switches) {
    py::dict d;
    d["time"] = s.time;
    d["state"] = s.state;
    d["completed_target"] = s.completed_target;
    d["target_margin"] = s.target_margin;
    switches.append(d);
  }
  py::dict d;
  d["times"] = py::array_t<double>(tr.times.size(), tr.times.data());
  d["states"] = to_array(tr.states);
  d["controls"] = to_array(tr.controls);
  d["values"] = py::array_t<double>(tr.values.size(), tr.values.data());
  d["stages"] = tr.stages;
  d["switches"] = switches;
  d["completed"] = tr.completed;
  d["margin_exceptions"] = tr.margin_exceptions.size();
  d["violation"] = tr.violation ? py::cast(tr.violation->reason) : py::none();
  d["satisfied"] = rep.check.satisfied;
  d["taus"] = rep.check.taus;
  d["word_accepted"] = rep.word_accepted ? py::cast(*rep.word_accepted) : py::none();
  d["eps_num"] = rep.eps_num;
  return d;
}

}  // namespace

PYBIND11_MODULE(_hjmra, m) {
  m.doc() = "Multi-target reach-avoid synthesis on Hamilton-Jacobi value functions";

  py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<ltl::SyntaxError>(m, "FormulaError", PyExc_ValueError);

  py::class_<ImplicitSet>(m, "ImplicitSet")
      .def("__call__", [](const ImplicitSet& s, std::vector<double> x, double t) { return s.eval(x, t); },
           py::arg("x"), py::arg("t") = 0.0)
      .def("contains", [](const ImplicitSet& s, std::vector<double> x, double t) { return s.contains(x, t); },
           py::arg("x"), py::arg("t") = 0.0)
      .def_property_readonly("dim", &ImplicitSet::dim);

  m.def("ball", &ball, py::arg("dim"), py::arg("center"), py::arg("radius"), py::arg("coords") = std::vector<int>{});
  m.def("box", &box, py::arg("dim"), py::arg("lo"), py::arg("hi"), py::arg("coords") = std::vector<int>{});
  m.def("union", py::overload_cast<const ImplicitSet&, const ImplicitSet&>(&set_union));
  m.def("intersect", py::overload_cast<const ImplicitSet&, const ImplicitSet&>(&set_intersect));
  m.def("complement", &set_complement);
  m.def("difference", &set_difference);

  py::class_<Grid>(m, "Grid")
      .def(py::init([](const std::vector<std::tuple<double, double, int, bool>>& axes) {
             std::vector<GridAxis> out;
             for (const auto& [lo, hi, count, periodic] : axes) out.push_back({lo, hi, count, periodic});
             return Grid(out);
           }),
           py::arg("axes"))
      .def_property_readonly("dim", &Grid::dim)
      .def_property_readonly("num_points", &Grid::num_points)
      .def("spacing", &Grid::spacing);

  py::class_<GridField, std::shared_ptr<GridField>>(m, "GridField")
      .def_property_readonly("times", &GridField::times)
      .def_property_readonly("grid", &GridField::grid)
      .def("slice",
           [](const GridField& f, std::size_t k) {
             if (k >= f.num_slices()) throw py::index_error("slice index out of range");
             const auto s = f.slice(k);
             std::vector<py::ssize_t> shape;
             for (const auto& a : f.grid().axes()) shape.push_back(a.count);
             return py::array_t<double>(shape, s.data());
           })
      .def(
          "__call__",
          [](const GridField& f, std::vector<double> x, double t) { return interpolate(f, x, t).value; },
          py::arg("x"), py::arg("t") = 0.0);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_readwrite("x0", &Scenario::x0)
      .def_readwrite("time_shift", &Scenario::time_shift)
      .def_readonly("grid", &Scenario::grid)
      .def_property_readonly("t0", [](const Scenario& s) { return s.task.t0; })
      .def_property_readonly("t1", [](const Scenario& s) { return s.task.t1; })
      .def_property_readonly("num_targets", [](const Scenario& s) { return s.task.size(); })
      .def_property_readonly("targets", [](const Scenario& s) { return s.task.targets; })
      .def_property_readonly("safes", [](const Scenario& s) { return s.task.safes; });

  m.def("scenario", &scenario_by_name, py::arg("name"),
        "Built-in scenario: si, di, spacecraft, unicycle, reach1d or cascade1d.");
  m.def("load_config", [](const std::filesystem::path& p) { return load_config(p); }, py::arg("path"));
  m.def("scenario_from_json",
        [](const std::string& text) { return scenario_from_json(nlohmann::json::parse(text)); }, py::arg("text"));

  py::class_<CascadeResult, std::shared_ptr<CascadeResult>>(m, "Cascade")
      .def_property_readonly("num_stages", &CascadeResult::size)
      .def("value", [](const CascadeResult& c, int target_index) { return c.for_target(target_index).value; },
           py::arg("target_index") = 1, "Stage field whose first leg is target_index (1-based).")
      .def(
          "query",
          [](const CascadeResult& c, std::vector<double> x, double t) {
            const auto r = query_feasible(c, x, t);
            py::dict d;
            d["feasible"] = r.feasible;
            d["margin"] = r.margin;
            d["out_of_domain"] = r.out_of_domain;
            return d;
          },
          py::arg("x"), py::arg("t") = 0.0)
      .def("save", [](const CascadeResult& c, const std::filesystem::path& dir) { save_cascade(c, dir); });

  m.def("load_cascade", [](const std::filesystem::path& dir) { return std::make_shared<CascadeResult>(load_cascade(dir)); });

  m.def(
      "solve",
      [](const Scenario& sc) {
        py::gil_scoped_release release;
        return std::make_shared<CascadeResult>(solve_scenario(sc));
      },
      py::arg("scenario"));

  m.def(
      "run",
      [](const Scenario& sc, std::shared_ptr<CascadeResult> cascade, std::optional<double> time_shift,
         const std::string& disturbance, std::uint64_t seed) {
        std::optional<DisturbancePolicy> dist;
        if (disturbance == "zero") {
          dist = DisturbancePolicy::zero();
        } else if (disturbance == "worst_case") {
          dist = DisturbancePolicy::worst_case();
        } else if (disturbance == "uniform_random") {
          dist = DisturbancePolicy::uniform_random(seed);
        } else if (disturbance != "default") {
          throw py::value_error("disturbance must be default, zero, worst_case or uniform_random");
        }
        RunReport rep;
        {
          py::gil_scoped_release release;
          rep = run_scenario(sc, cascade, time_shift, dist);
        }
        return report_dict(rep);
      },
      py::arg("scenario"), py::arg("cascade"), py::arg("time_shift") = py::none(),
      py::arg("disturbance") = "default", py::arg("seed") = 0);

  m.def(
      "solve_qp",
      [](std::vector<double> lo, std::vector<double> hi, const Eigen::MatrixXd& Q, std::vector<double> u_ref,
         std::vector<double> a, double rhs) {
        const auto qp = solve_control_qp(BoundSet::make_box(lo, hi), 0.0, Q, u_ref, a, rhs);
        return py::make_tuple(qp.u, qp.objective, qp.slack);
      },
      py::arg("lo"), py::arg("hi"), py::arg("Q"), py::arg("u_ref"), py::arg("a"), py::arg("rhs"),
      "min (u - u_ref)' Q (u - u_ref) over the box subject to a . u >= rhs; returns (u, objective, slack).");

  py::class_<ltl::Fsa>(m, "Fsa")
      .def_readonly("ap", &ltl::Fsa::ap)
      .def_readonly("state_names", &ltl::Fsa::state_names)
      .def_readonly("initial", &ltl::Fsa::initial)
      .def_readonly("accepting", &ltl::Fsa::accepting)
      .def_property_readonly("num_states", &ltl::Fsa::num_states)
      .def("next", &ltl::Fsa::next)
      .def("accepts",
           [](const ltl::Fsa& f, const std::vector<std::vector<std::string>>& word) {
             ltl::Word w;
             for (const auto& letter : word) {
               ltl::Letter l = 0;
               for (const auto& atom : letter) {
                 const auto it = std::find(f.ap.begin(), f.ap.end(), atom);
                 if (it == f.ap.end()) throw py::value_error("unknown atom '" + atom + "'");
                 l |= ltl::Letter{1} << (it - f.ap.begin());
               }
               w.push_back(l);
             }
             return f.accepts(w);
           },
           py::arg("word"), "Word given as a list of letters, each a list of true atoms.")
      .def("plans",
           [](const ltl::Fsa& f) {
             std::vector<std::string> out;
             for (const auto& p : ltl::enumerate_plans(f)) out.push_back(ltl::plan_to_string(f, p));
             return out;
           })
      .def("to_json", &ltl::fsa_to_json);

  m.def(
      "fsa",
      [](const std::string& formula, const std::vector<std::string>& ap) {
        return ltl::to_fsa(ltl::parse(formula, ap), ap);
      },
      py::arg("formula"), py::arg("ap"));
}
