#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mflab/bounds.hpp"
#include "mflab/errors.hpp"
#include "mflab/experiment.hpp"
#include "mflab/transport.hpp"

namespace py = pybind11;
using namespace mflab;

namespace {

DiscreteMeasure measure(const Eigen::MatrixXd& points, std::optional<Eigen::VectorXd> weights) {
  if (!weights) return DiscreteMeasure::uniform(points);
  DiscreteMeasure m;
  m.points = points;
  m.weights = *weights;
  return m;
}

// Reports come back as JSON text; the Python wrapper decodes them.
std::tuple<int, std::string, bool> run_json(const std::string& config, const std::string& out,
                                            std::optional<std::uint64_t> seed, int jobs, bool write_files) {
  RunOptions opt;
  opt.out = out;
  opt.seed = seed;
  opt.jobs = jobs;
  opt.write_files = write_files;
  RunSummary s;
  {
    py::gil_scoped_release release;
    s = run_experiment(parse_config(nlohmann::json::parse(config)), opt);
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.reports) rows.push_back(r.to_json());
  return {s.exit_code, rows.dump(), s.guard_tripped};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mean-field and semiclassical bound checks (C++ core)";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ResourceError>(m, "ResourceError", PyExc_MemoryError);

  m.def(
      "wasserstein_exact",
      [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double p, std::optional<Eigen::VectorXd> wx,
         std::optional<Eigen::VectorXd> wy) {
        const auto res = transport::wasserstein_exact(measure(x, wx), measure(y, wy), p);
        std::vector<std::tuple<int, int, double>> plan;
        for (const auto& e : res.plan.entries) plan.emplace_back(e.source, e.target, e.mass);
        return py::make_tuple(res.dist, plan);
      },
      py::arg("x"), py::arg("y"), py::arg("p") = 2.0, py::arg("wx") = py::none(), py::arg("wy") = py::none());

  m.def("validate_config_json",
        [](const std::string& text) { return validate_config(nlohmann::json::parse(text)); });
  m.def("run_json", &run_json, py::arg("config"), py::arg("out"), py::arg("seed") = py::none(), py::arg("jobs") = 1,
        py::arg("write_files") = true);
  m.def("experiment_ids", &experiment_ids);

  m.def("count_S_Np", &bounds::count_S_Np, py::arg("N"), py::arg("p"));
  m.def("count_S_Np_enumerated", &bounds::count_S_Np_enumerated, py::arg("N"), py::arg("p"));
  m.def("classical_rhs", py::overload_cast<double, double, double, int, int, double>(&bounds::classical_rhs),
        py::arg("sup_grad"), py::arg("lip"), py::arg("p"), py::arg("N"), py::arg("n"), py::arg("t"));
  m.def("combineq_rhs", &bounds::combineq_rhs, py::arg("F_sup"), py::arg("p"), py::arg("N"));
  m.def(
      "quantum_rhs",
      [](const std::string& variant, double sup_grad, double lip, double eps, int N, int n, double t, double init) {
        return bounds::quantum_rhs(bounds::parse_quantum_variant(variant), sup_grad, lip, eps, N, n, t, init);
      },
      py::arg("variant"), py::arg("sup_grad"), py::arg("lip"), py::arg("eps"), py::arg("N"), py::arg("n"),
      py::arg("t"), py::arg("init_term"));
}
