#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "noisy_stm/config.hpp"
#include "noisy_stm/harness.hpp"
#include "noisy_stm/sequences.hpp"

namespace py = pybind11;
using namespace noisy_stm;

namespace {

py::dict budget_dict(const Budget& b) {
  py::dict d;
  d["delta_max"] = b.delta_max;
  d["N"] = b.N;
  if (b.mu) d["mu"] = *b.mu;
  return d;
}

// rows x 12 matrix, NaN where a field is absent
Matrix as_matrix(const std::vector<CsvRow>& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "noisy similar triangles method";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.attr("csv_header") = std::string(kCsvHeader);

  m.def("next_alpha", &next_alpha, py::arg("L"), py::arg("mu_tau"), py::arg("A_prev"));
  m.def("stm2_alpha_threshold", &stm2_alpha_threshold, py::arg("L"), py::arg("mu"));
  m.def("budget_strongly_convex",
        [](double L, double mu, double R, double eps) { return budget_dict(budget_strongly_convex(L, mu, R, eps)); },
        py::arg("L"), py::arg("mu"), py::arg("R"), py::arg("eps"));
  m.def("budget_regularized",
        [](double L, double R, double eps) { return budget_dict(budget_regularized(L, R, eps)); },
        py::arg("L"), py::arg("R"), py::arg("eps"));
  m.def("budget_linear_system",
        [](double L, double R, double R_star, double eps1) {
          return budget_dict(budget_linear_system(L, R, R_star, eps1));
        },
        py::arg("L"), py::arg("R"), py::arg("R_star"), py::arg("eps1"));

  m.def("normalize_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
        py::arg("text"), "Parse a config and write it back in canonical form.");

  m.def("run_table",
        [](const std::string& text) {
          const ExperimentConfig c = parse_config(text);
          const BoundExperiment exp = bind(c);
          std::vector<Trace> traces;
          {
            py::gil_scoped_release release;
            traces = run_repetitions(c, exp);
          }
          py::list out;
          for (const Trace& t : traces) out.append(as_matrix(trace_rows(t, exp)));
          return out;
        },
        py::arg("text"), "One (N+1) x 12 array per repetition, columns as in csv_header.");

  m.def("run_experiment",
        [](const std::string& text, const std::filesystem::path& out_dir) {
          const ExperimentConfig c = parse_config(text);
          py::gil_scoped_release release;
          const RunSummary s = run_experiment(c, out_dir);
          return std::make_pair(s.files, s.text);
        },
        py::arg("text"), py::arg("out_dir"), "Writes run_XXX.csv and mean.csv; returns (files, summary).");

  m.def("sweep",
        [](const std::string& text, const std::string& param, const std::vector<double>& values,
           const std::filesystem::path& out_dir) {
          const ExperimentConfig c = parse_config(text);
          py::gil_scoped_release release;
          return sweep(c, SweepSpec{param, values}, out_dir).table;
        },
        py::arg("text"), py::arg("param"), py::arg("values"), py::arg("out_dir"));

  m.def("threshold_search",
        [](const std::string& text, int n_probe, double factor, int bisections) {
          const ExperimentConfig c = parse_config(text);
          ThresholdResult r;
          {
            py::gil_scoped_release release;
            r = threshold_search(c, ThresholdOptions{n_probe, factor, bisections});
          }
          py::dict d;
          d["lo"] = r.lo;
          d["hi"] = r.hi;
          d["alpha"] = r.alpha;
          d["min"] = r.min;
          d["median"] = r.median;
          d["max"] = r.max;
          return d;
        },
        py::arg("text"), py::arg("n_probe") = 500, py::arg("factor") = 10.0, py::arg("bisections") = 12);

  m.def("verify",
        [](const std::string& scope, const std::string& poison) {
          const VerifyReport r = verify(scope, poison);
          return std::make_pair(r.all_passed(), r.text());
        },
        py::arg("scope") = "all", py::arg("poison") = "");
}
