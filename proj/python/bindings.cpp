#include "conorbit/fixtures.hpp"
#include "conorbit/runner.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace conorbit;

namespace {

using NodeArray = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

DiscretePath to_path(const NodeArray& nodes, double T) {
  if (nodes.rows() < 2) throw std::invalid_argument("a path needs at least two nodes");
  DiscretePath p;
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) p.nodes.emplace_back(nodes(i, 0), nodes(i, 1));
  p.T = T;
  return p;
}

NodeArray to_array(const DiscretePath& p) {
  NodeArray a(p.nodes.size(), 2);
  for (std::size_t i = 0; i < p.nodes.size(); ++i) a.row(i) = p.nodes[i].transpose();
  return a;
}

py::dict run_result(const RunResult& r) {
  py::dict d;
  d["exit_code"] = r.exit_code;
  d["verdict"] = r.verdict.dump();
  d["files"] = r.files;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Discrete free-time action, critical-value brackets and scenario runner";

  py::class_<SurfaceModel, std::shared_ptr<SurfaceModel>>(m, "Model")
      .def_property_readonly("id", &SurfaceModel::id)
      .def_property_readonly("params", &SurfaceModel::params)
      .def_property_readonly("convexity", &SurfaceModel::convexity)
      .def_property_readonly("theta_sup", &SurfaceModel::theta_sup)
      .def_property_readonly("zero_section_max", &SurfaceModel::zero_section_max)
      .def("lagrangian", &SurfaceModel::lagrangian, py::arg("q"), py::arg("v"))
      .def("energy", &SurfaceModel::energy, py::arg("q"), py::arg("v"))
      .def("hamiltonian", &SurfaceModel::hamiltonian, py::arg("q"), py::arg("p"))
      .def("theta", &SurfaceModel::theta, py::arg("q"));

  m.def(
      "make_model",
      [](const std::string& id, const ModelParams& params) {
        return std::const_pointer_cast<SurfaceModel>(make_model(id, params));
      },
      py::arg("id"), py::arg("params") = ModelParams{});

  m.def("list_models", [] {
    py::list out;
    for (const auto& e : model_catalog()) {
      py::dict d;
      d["id"] = e.id;
      d["description"] = e.description;
      d["defaults"] = e.defaults;
      out.append(d);
    }
    return out;
  });

  m.def("scenario_names", [] {
    std::vector<std::string> names;
    for (const auto& s : builtin_scenarios()) names.push_back(s.name);
    return names;
  });

  m.def(
      "discrete_action",
      [](const SurfaceModel& model, const NodeArray& nodes, double T, double k) {
        ActionValue v = discrete_action(model, to_path(nodes, T), k);
        py::dict d;
        d["A"] = v.A;
        d["dA_dT"] = v.dA_dT;
        d["length"] = v.length;
        d["energy_mean"] = v.energy_mean;
        return d;
      },
      py::arg("model"), py::arg("nodes"), py::arg("T"), py::arg("k"));

  m.def(
      "optimal_time",
      [](const SurfaceModel& model, const NodeArray& nodes, double k) {
        return optimal_time(model, to_path(nodes, 1.0), k);
      },
      py::arg("model"), py::arg("nodes"), py::arg("k"));

  m.def(
      "torus_backward_loop", [](int segments) { return to_array(torus_backward_loop(segments)); },
      py::arg("segments"));

  m.def(
      "run_config",
      [](const std::string& text) {
        std::ostringstream log;
        try {
          RunConfig rc = build_run_config(ConfigDoc::parse(text));
          RunResult r;
          {
            py::gil_scoped_release release;
            r = run_config(rc, log);
          }
          return run_result(r);
        } catch (const ConfigError& e) {
          RunResult r;
          r.exit_code = 2;
          r.verdict["error"] = e.what();
          return run_result(r);
        }
      },
      py::arg("text"), "Run a config given as key = value text; returns exit code, verdict and files.");

  m.def(
      "reproduce",
      [](const std::string& name, std::uint64_t seed) {
        std::ostringstream log;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = reproduce_suite(name, ReproContext{1, seed}, log);
        }
        return run_result(r);
      },
      py::arg("name") = "", py::arg("seed") = 1);
}
