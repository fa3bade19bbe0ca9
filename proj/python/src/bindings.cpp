#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hoturbo/error.hpp"
#include "hoturbo/gp.hpp"
#include "hoturbo/mobility.hpp"
#include "hoturbo/optimize.hpp"
#include "hoturbo/scenario.hpp"
#include "hoturbo/transfer.hpp"
#include "hoturbo/turbo.hpp"

namespace py = pybind11;
using namespace hoturbo;

namespace {

py::dict counters_dict(const KpiCounters& c) {
  py::dict d;
  d["ho"] = c.ho;
  d["hof"] = c.hof;
  d["rlf"] = c.rlf;
  d["pp"] = c.pp;
  d["ticks"] = c.ticks;
  return d;
}

py::dict eval_dict(const EvalResult& r) {
  py::dict d = counters_dict(r.counters);
  d["objective"] = r.objective;
  d["pp_rate"] = r.pp_rate;
  d["rlf_rate"] = r.rlf_rate;
  d["w_pp"] = r.weights.w_pp;
  d["w_rlf"] = r.weights.w_rlf;
  return d;
}

py::dict trace_dict(const RunResult& r) {
  const auto& h = r.trace.history;
  const auto d = h.empty() ? 0 : h.front().x.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(h.size()), d);
  Eigen::VectorXd y(static_cast<Eigen::Index>(h.size())), best(static_cast<Eigen::Index>(h.size()));
  std::vector<std::size_t> iteration, tr_id;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    x.row(k) = h[i].x.transpose();
    y(k) = h[i].y;
    best(k) = h[i].best_so_far;
    iteration.push_back(h[i].iteration);
    tr_id.push_back(h[i].tr_id);
  }
  py::dict out;
  out["best_x"] = r.best_x;
  out["best_y"] = r.best_y;
  out["x"] = x;
  out["y"] = y;
  out["best_so_far"] = best;
  out["iteration"] = iteration;
  out["tr_id"] = tr_id;
  return out;
}

}  // namespace

PYBIND11_MODULE(_hoturbo, m) {
  m.doc() = "Handover parameter optimization with trust-region Bayesian optimization.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<BudgetError>(m, "BudgetError", base.ptr());

  py::class_<DeploymentScenario>(m, "Scenario")
      .def_property_readonly("cell_count", &DeploymentScenario::cell_count)
      .def_property_readonly("cell_ids",
                             [](const DeploymentScenario& s) {
                               std::vector<int> ids;
                               for (const auto& c : s.cells) ids.push_back(c.id);
                               return ids;
                             })
      .def_property_readonly("route_ids", [](const DeploymentScenario& s) {
        std::vector<int> ids;
        for (const auto& r : s.routes) ids.push_back(r.id);
        return ids;
      });
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("parse_scenario", [](const std::string& text) { return parse_scenario(text); }, py::arg("text"));

  py::class_<HoConfig>(m, "HoConfig")
      .def_static("shared", &HoConfig::shared, py::arg("n_cells"), py::arg("a3_offset_db"), py::arg("ttt_ms"))
      .def_static("per_cell", &HoConfig::per_cell, py::arg("a3_offset_db"), py::arg("ttt_ms"))
      .def_static(
          "from_unit",
          [](const Eigen::VectorXd& x, std::size_t n_cells, const std::string& mode) {
            return HoConfig::from_unit(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), n_cells,
                                       parse_ho_mode(mode));
          },
          py::arg("x"), py::arg("n_cells"), py::arg("mode"))
      .def("to_unit", &HoConfig::to_unit)
      .def("validate", &HoConfig::validate, py::arg("n_cells"))
      .def_property_readonly("dimension", &HoConfig::dimension)
      .def_property_readonly("mode", [](const HoConfig& c) { return std::string(to_string(c.mode)); })
      .def_readonly("a3_offset_db", &HoConfig::a3_offset_db)
      .def_readonly("ttt_ms", &HoConfig::ttt_ms);
  m.def(
      "benchmark_set",
      [](const std::string& name, std::size_t n_cells) { return benchmark_set(name).config(n_cells); },
      py::arg("name"), py::arg("n_cells"));
  m.def("save_ho_config", &save_ho_config, py::arg("path"), py::arg("config"), py::arg("preamble") = "");
  m.def("load_ho_config", &load_ho_config, py::arg("path"), py::arg("n_cells"));

  m.def(
      "objective",
      [](std::int64_t ho, std::int64_t hof, std::int64_t pp, std::int64_t rlf, double w_pp, double w_rlf) {
        return objective(KpiCounters{ho, hof, pp, rlf, 0}, ObjectiveWeights{w_pp, w_rlf});
      },
      py::arg("ho"), py::arg("hof"), py::arg("pp"), py::arg("rlf"), py::arg("w_pp") = 9.0, py::arg("w_rlf") = 1.0);

  py::class_<MobilityEvaluator>(m, "MobilityEvaluator")
      .def(py::init([](const DeploymentScenario& s, std::vector<int> routes, std::vector<double> speeds_kmh,
                       std::vector<std::uint64_t> seeds, double w_pp, double w_rlf) {
             if (routes.empty())
               for (const auto& r : s.routes) routes.push_back(r.id);
             for (double& v : speeds_kmh) v = kmh_to_mps(v);
             return MobilityEvaluator(s, routes, speeds_kmh, seeds, ObjectiveWeights{w_pp, w_rlf});
           }),
           py::arg("scenario"), py::arg("routes"), py::arg("speeds_kmh"), py::arg("seeds"), py::arg("w_pp") = 9.0,
           py::arg("w_rlf") = 1.0)
      .def(
          "evaluate",
          [](const MobilityEvaluator& e, const HoConfig& c) {
            EvalResult r;
            {
              py::gil_scoped_release release;
              r = e.evaluate(c);
            }
            return eval_dict(r);
          },
          py::arg("config"))
      .def(
          "evaluate_unit",
          [](const MobilityEvaluator& e, const Eigen::VectorXd& x, const std::string& mode) {
            return e.evaluate_unit(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                                   parse_ho_mode(mode));
          },
          py::arg("x"), py::arg("mode"))
      .def_property_readonly("cell_count", &MobilityEvaluator::cell_count);

  py::class_<GpHyper>(m, "GpHyper")
      .def(py::init([](Eigen::VectorXd ls, double sv, double nv, double mu) {
             GpHyper h{std::move(ls), sv, nv, mu};
             h.validate();
             return h;
           }),
           py::arg("length_scales"), py::arg("signal_var") = 1.0, py::arg("noise_var") = 1e-6,
           py::arg("mean_const") = 0.0)
      .def_readonly("length_scales", &GpHyper::length_scales)
      .def_readonly("signal_var", &GpHyper::signal_var)
      .def_readonly("noise_var", &GpHyper::noise_var)
      .def_readonly("mean_const", &GpHyper::mean_const);
  m.def(
      "kernel",
      [](const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyper& h) { return kernel(a, b, h); },
      py::arg("a"), py::arg("b"), py::arg("hyper"));

  py::class_<GpModel>(m, "GpModel")
      .def_static(
          "condition",
          [](const GpHyper& h, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
            return GpModel::condition(h, Dataset(x, y));
          },
          py::arg("hyper"), py::arg("x"), py::arg("y"))
      .def_static(
          "fit", [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed) {
            return GpModel::fit(Dataset(x, y), seed);
          },
          py::arg("x"), py::arg("y"), py::arg("seed") = 0)
      .def(
          "posterior",
          [](const GpModel& g, const Eigen::VectorXd& x) {
            Posterior p = g.posterior(x);
            return py::make_tuple(p.mean, p.var);
          },
          py::arg("x"))
      .def("sample_joint", &GpModel::sample_joint, py::arg("candidates"), py::arg("seed"), py::arg("count") = 1)
      .def_property_readonly("hyper", &GpModel::hyper);

  m.def(
      "tr_side_lengths", [](const Eigen::VectorXd& ls, double l) { return tr_side_lengths(ls, l); },
      py::arg("length_scales"), py::arg("base_length"));
  m.def("target_row_count", &target_row_count, py::arg("fraction"), py::arg("n_init"));
  m.def(
      "normalize_kpi", [](double raw, double baseline, double upper) { return normalize_kpi(raw, baseline, upper).normalized; },
      py::arg("raw"), py::arg("baseline"), py::arg("upper"));

  m.def(
      "minimize",
      [](const std::function<double(const Eigen::VectorXd&)>& f, std::size_t d, std::size_t budget, std::size_t n_init,
         std::size_t q, std::uint64_t seed) {
        TurboConfig cfg;
        cfg.d = d;
        cfg.budget = budget;
        cfg.n_init = n_init;
        cfg.q = q;
        return trace_dict(run(cfg, f, seed));
      },
      py::arg("f"), py::arg("d"), py::arg("budget"), py::arg("n_init"), py::arg("q") = 5, py::arg("seed") = 0);

  m.def(
      "optimize_ho",
      [](const MobilityEvaluator& e, const std::string& mode, std::size_t budget, std::size_t n_init, std::size_t q,
         std::uint64_t seed) {
        TurboConfig cfg;
        cfg.budget = budget;
        cfg.n_init = n_init;
        cfg.q = q;
        HoOptimization r;
        {
          py::gil_scoped_release release;
          r = optimize_ho(e, parse_ho_mode(mode), cfg, seed);
        }
        py::dict out = trace_dict(r.run);
        out["config"] = r.best;
        out["evaluation"] = eval_dict(r.best_eval);
        return out;
      },
      py::arg("evaluator"), py::arg("mode") = "per-cell", py::arg("budget") = 160, py::arg("n_init") = 60,
      py::arg("q") = 5, py::arg("seed") = 0);
}
