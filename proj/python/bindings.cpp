#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "tamed/cli.hpp"
#include "tamed/comparison.hpp"
#include "tamed/errors.hpp"
#include "tamed/immersion.hpp"
#include "tamed/sampling.hpp"
#include "tamed/spectral.hpp"
#include "tamed/tamedness.hpp"

namespace py = pybind11;
using namespace tamed;
using json = nlohmann::json;

namespace {

sampling::SampledSubmanifold sample_from_config(const std::string& config) {
  const auto cfg = cli::parse_config(json::parse(config));
  const auto chart = cli::make_chart(cfg);
  auto res = cfg.resolution;
  if (res.empty()) res = chart.m() == 1 ? std::vector<int>{512} : std::vector<int>{128, 64};
  return sampling::sample_chart(chart, res);
}

// Columns as in the vertex CSV: u, point, rho_M, rho_N, alpha_sup, tamed_ratio.
Eigen::MatrixXd vertex_table(const sampling::SampledSubmanifold& s) {
  const int m = s.m();
  const int C = s.chart().ambient().coord_count();
  Eigen::MatrixXd out(s.vertex_count(), m + C + 4);
  for (int k = 0; k < s.vertex_count(); ++k) {
    const auto& v = s.vertex(k);
    out.row(k).head(m) = v.u.transpose();
    out.row(k).segment(m, C) = v.point.transpose();
    out(k, m + C) = v.rho_M;
    out(k, m + C + 1) = v.rho_N;
    out(k, m + C + 2) = v.alpha_sup;
    out(k, m + C + 3) = s.tamed_ratio(k);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tamed second fundamental form analysis";

  static py::exception<Error> base(m, "TamedError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<LevelError>(m, "LevelError", base.ptr());
  py::register_exception<NotTamedError>(m, "NotTamedError", base.ptr());

  m.def("s_kappa", &kernel::s_kappa, py::arg("kappa"), py::arg("t"));
  m.def("c_kappa", &kernel::c_kappa, py::arg("kappa"), py::arg("t"));

  m.def("catalog", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : immersion::catalog()) out.emplace_back(e.name, e.summary);
    return out;
  });

  m.def(
      "run",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line front end; returns (exit code, stdout, stderr).");

  m.def(
      "tamedness_json",
      [](const std::string& config) {
        const auto cfg = cli::parse_config(json::parse(config));
        const auto s = sample_from_config(config);
        return tamedness::to_json(tamedness::analyze(s, cfg.radii, cfg.c)).dump();
      },
      py::arg("config"));

  m.def(
      "vertices", [](const std::string& config) { return vertex_table(sample_from_config(config)); },
      py::arg("config"));

  m.def(
      "radial_eigenvalue",
      [](int l, double mu, double R) {
        const auto sol = spectral::radial_eigenvalue(l, mu, R);
        return py::make_tuple(sol.lambda1, sol.t, sol.v, sol.dv);
      },
      py::arg("l"), py::arg("mu"), py::arg("R"));

  m.def("choose_l", &spectral::choose_l, py::arg("m"), py::arg("c"));
  m.def(
      "tone_bound_json",
      [](int dim, double c, double mu, double r0, std::optional<int> l) {
        return spectral::to_json(spectral::tone_upper_bound(dim, c, mu, r0, l)).dump();
      },
      py::arg("m"), py::arg("c"), py::arg("mu"), py::arg("r0"), py::arg("l") = std::nullopt);
}
