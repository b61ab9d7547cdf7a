#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>

#include "trajinf/config.hpp"
#include "trajinf/dare_sensitivity.hpp"
#include "trajinf/errors.hpp"
#include "trajinf/io.hpp"
#include "trajinf/matrix_equations.hpp"
#include "trajinf/pipeline.hpp"

namespace py = pybind11;
using namespace trajinf;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double or_nan(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

VectorXd column(std::size_t n, const std::function<double(std::size_t)>& f) {
  VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = f(i);
  return out;
}

py::list trajectories(const Dataset& d) {
  py::list out;
  for (const auto& tau : d.trajectories) {
    const auto T = static_cast<Eigen::Index>(tau.transitions.size());
    MatrixXd x(T, d.n_x), u(T, d.n_u), xp(T, d.n_x);
    for (Eigen::Index t = 0; t < T; ++t) {
      x.row(t) = tau.transitions[t].x.transpose();
      u.row(t) = tau.transitions[t].u.transpose();
      xp.row(t) = tau.transitions[t].x_plus.transpose();
    }
    py::dict rec;
    rec["id"] = tau.id;
    rec["x"] = x;
    rec["u"] = u;
    rec["x_plus"] = xp;
    out.append(rec);
  }
  return out;
}

ExperimentData from_file(const io::DatasetFile& file, const RunConfig& rc) {
  ExperimentData data;
  data.config = rc.experiment;
  data.config.family = file.family;
  data.config.seed = file.seed;
  data.plant = file.plant;
  data.train = file.train;
  data.test = file.test;
  return data;
}

py::dict counters_dict(const instrument::Counters& c) {
  py::dict d;
  d["hessian_factorizations"] = c.hessian_factorizations;
  d["downdate_factorizations"] = c.downdate_factorizations;
  d["forward_lyapunov_solves"] = c.forward_lyapunov_solves;
  d["adjoint_lyapunov_solves"] = c.adjoint_lyapunov_solves;
  d["dare_solves"] = c.dare_solves;
  d["trace_assemblies"] = c.trace_assemblies;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Trajectory influence scores for identified LQR designs";

  static py::exception<Error> error_type(m, "TrajinfError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const auto cls = py::reinterpret_borrow<py::object>(error_type.ptr());
      py::object exc = cls(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      exc.attr("stage") = e.stage();
      exc.attr("exit_code") = exit_code_for(e.kind());
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<RunConfig>(m, "Config")
      .def_static("parse", &parse_config, py::arg("text"),
                  py::arg("origin") = "<config>")
      .def_static("load", &load_config, py::arg("path"))
      .def_property_readonly("family",
                             [](const RunConfig& c) { return to_string(c.experiment.family); })
      .def_property(
          "seed", [](const RunConfig& c) { return c.experiment.seed; },
          [](RunConfig& c, std::uint64_t s) { c.experiment.seed = s; })
      .def_property_readonly("N", [](const RunConfig& c) { return c.experiment.N; })
      .def_property_readonly("lambda_", [](const RunConfig& c) { return c.experiment.lambda; })
      .def_property_readonly("top_k", [](const RunConfig& c) { return c.top_k; });
  m.def("config_keys", &config_keys);

  py::class_<ExperimentData>(m, "Experiment")
      .def_property_readonly("family",
                             [](const ExperimentData& e) { return to_string(e.config.family); })
      .def_property_readonly("seed", [](const ExperimentData& e) { return e.config.seed; })
      .def_property_readonly("n_x", [](const ExperimentData& e) { return e.train.n_x; })
      .def_property_readonly("n_u", [](const ExperimentData& e) { return e.train.n_u; })
      .def_property_readonly("train", [](const ExperimentData& e) { return trajectories(e.train); })
      .def_property_readonly("test", [](const ExperimentData& e) { return trajectories(e.test); })
      .def("to_jsonl", [](const ExperimentData& e) {
        return io::serialize_dataset(io::dataset_file(e));
      })
      .def("save", [](const ExperimentData& e, const std::string& path) {
        io::write_dataset(path, io::dataset_file(e));
      });

  m.def("generate", [](RunConfig config) { return generate_experiment(config.experiment); },
        py::arg("config"), "Simulates the training and held-out trajectories.");
  m.def(
      "load_dataset",
      [](const std::string& path, const RunConfig& config) {
        return from_file(io::read_dataset(path), config);
      },
      py::arg("path"), py::arg("config") = RunConfig{});

  py::class_<InfluenceReport>(m, "Report")
      .def_property_readonly("traj_id", [](const InfluenceReport& r) {
        return column(r.records.size(), [&](std::size_t i) { return r.records[i].traj_id; });
      })
      .def_property_readonly("if1", [](const InfluenceReport& r) {
        return column(r.records.size(), [&](std::size_t i) { return r.records[i].if1; });
      })
      .def_property_readonly("if2", [](const InfluenceReport& r) {
        return column(r.records.size(), [&](std::size_t i) { return or_nan(r.records[i].if2); });
      })
      .def_property_readonly("exact_loto_pred_delta", [](const InfluenceReport& r) {
        return column(r.records.size(),
                      [&](std::size_t i) { return r.records[i].exact_loto_pred_delta; });
      })
      .def_property_readonly("grad_only_pred", [](const InfluenceReport& r) {
        return column(r.records.size(), [&](std::size_t i) { return r.records[i].grad_only_pred; });
      })
      .def_property_readonly("residual_norm", [](const InfluenceReport& r) {
        return column(r.records.size(), [&](std::size_t i) { return r.records[i].residual_norm; });
      })
      .def_property_readonly("delta_k", [](const InfluenceReport& r) {
        return column(r.records.size(), [&](std::size_t i) { return r.records[i].delta_k; });
      })
      .def_property_readonly("assumption_ok",
                             [](const InfluenceReport& r) { return r.model.assumption_ok; })
      .def_property_readonly("assumption_message",
                             [](const InfluenceReport& r) { return r.model.assumption_message; })
      .def_property_readonly("J", [](const InfluenceReport& r) { return or_nan(r.model.J); })
      .def_property_readonly("rho_cl", [](const InfluenceReport& r) { return or_nan(r.model.rho_cl); })
      .def_property_readonly("p", [](const InfluenceReport& r) { return r.model.p; })
      .def_property_readonly("counters",
                             [](const InfluenceReport& r) { return counters_dict(r.counters); })
      .def("to_jsonl", [](const InfluenceReport& r, const std::string& system) {
        return io::serialize_report({system, r});
      }, py::arg("system") = "");

  m.def(
      "influence",
      [](const ExperimentData& e, const RunConfig& config) {
        py::gil_scoped_release release;
        return run_algorithm1(e.train, e.test, config.experiment.lambda,
                              cost_matrices(config.experiment, e.train.n_x, e.train.n_u),
                              config.pipeline);
      },
      py::arg("experiment"), py::arg("config"),
      "IF1, IF2, exact LOTO and baselines for every training trajectory.");

  py::class_<GroundTruth>(m, "Truth")
      .def_property_readonly("traj_id", [](const GroundTruth& t) {
        return column(t.traj_ids.size(), [&](std::size_t i) { return t.traj_ids[i]; });
      })
      .def_property_readonly("d_pred", [](const GroundTruth& t) {
        return column(t.d_pred.size(), [&](std::size_t i) { return or_nan(t.d_pred[i]); });
      })
      .def_property_readonly("d_J", [](const GroundTruth& t) {
        return column(t.d_J.size(), [&](std::size_t i) { return or_nan(t.d_J[i]); });
      })
      .def_property_readonly("d_plant", [](const GroundTruth& t) {
        return column(t.d_plant.size(), [&](std::size_t i) { return or_nan(t.d_plant[i]); });
      })
      .def_readonly("retrain_seconds", &GroundTruth::retrain_seconds);

  m.def(
      "loto",
      [](const ExperimentData& e, const RunConfig& config, int threads) {
        GroundTruthOptions options =
            ground_truth_options(config.experiment, e.train.n_x, e.train.n_u);
        options.threads = threads;
        options.dare = config.pipeline.dare;
        py::gil_scoped_release release;
        return loto_ground_truth(e.train, e.test, e.plant, options);
      },
      py::arg("experiment"), py::arg("config"), py::arg("threads") = 1,
      "Leave-one-trajectory-out retraining sweep.");

  m.def(
      "evaluate",
      [](const InfluenceReport& r, const GroundTruth& t, const std::string& system,
         int top_k) {
        py::list out;
        for (const auto& row : evaluate(r, t, system, top_k)) {
          py::dict d;
          d["system"] = row.system;
          d["target"] = row.target;
          d["method"] = row.method;
          d["pearson"] = row.metrics ? or_nan(row.metrics->pearson) : std::nan("");
          d["spearman"] = row.metrics ? or_nan(row.metrics->spearman) : std::nan("");
          d["mae"] = row.metrics ? row.metrics->mae : std::nan("");
          d["topk"] = row.metrics ? row.metrics->topk_overlap : std::nan("");
          d["time_s"] = row.time_s;
          d["speedup"] = row.speedup;
          out.append(d);
        }
        return out;
      },
      py::arg("report"), py::arg("truth"), py::arg("system") = "", py::arg("top_k") = 5);

  m.def(
      "solve_dare",
      [](const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R) {
        const DareSolution s = solve_dare(A, B, Q, R);
        py::dict d;
        d["P"] = s.P;
        d["K"] = s.K;
        d["A_cl"] = s.A_cl;
        d["rho_cl"] = s.rho_cl;
        d["residual_norm"] = s.residual_norm;
        d["iterations"] = s.iterations;
        return d;
      },
      py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"));
  m.def("solve_dlyap", &solve_dlyap_t, py::arg("A_cl"), py::arg("C"),
        "X with X - A_cl' X A_cl = C.");
  m.def("solve_dlyap_adj", &solve_dlyap_adj, py::arg("A_cl"), py::arg("Sigma0"),
        "Lambda with Lambda - A_cl Lambda A_cl' = Sigma0.");

  m.def(
      "lqr_gradient",
      [](const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R,
         const MatrixXd& Sigma0, const std::string& method) {
        if (method != "adjoint" && method != "forward") {
          throw Error(ErrorKind::BadInput, "lqr_gradient",
                      "method must be 'adjoint' or 'forward'");
        }
        const LqrDesign d = design_lqr(ParamVector::from_matrices(A, B), Q, R, Sigma0);
        const CostGradient g = grad_J(d, method == "adjoint" ? GradientMethod::Adjoint
                                                             : GradientMethod::Forward);
        py::dict out;
        out["J"] = d.cost();
        out["P"] = d.P();
        out["K"] = d.K();
        out["Lambda"] = d.Lambda();
        out["grad"] = as_param_matrix(g.grad, d.n_x(), d.n_u());
        return out;
      },
      py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"), py::arg("Sigma0"),
      py::arg("method") = "adjoint",
      "J = Tr(P Sigma0) and its gradient with respect to [A B].");
}
