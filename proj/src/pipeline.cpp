#include "trajinf/pipeline.hpp"

#include <chrono>
#include <map>
#include <set>

#include "trajinf/errors.hpp"

namespace trajinf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

VectorXd inverse_hvp(const RidgeFit& fit, const Dataset& train,
                     const VectorXd& v, const PipelineOptions& options) {
  if (options.hvp == HvpMethod::Cg) {
    return cg_inverse_hvp(fit, train, v, options.cg).x;
  }
  return fit.solve(v);
}

}  // namespace

InfluenceReport run_algorithm1(const Dataset& train, const Dataset& test,
                               double lambda, const CostMatrices& costs,
                               const PipelineOptions& options) {
  train.validate(2);
  test.validate(1);
  if (test.n_x != train.n_x || test.n_u != train.n_u) {
    throw Error(ErrorKind::Data, "dataset",
                "train and test dimensions differ");
  }

  InfluenceReport report;
  instrument::ScopedCounters counters;
  Stopwatch clock;
  const std::size_t N = train.size();

  // Fit and factorize H.
  const RidgeFit fit = fit_ridge(train, lambda);
  const double t_fit = clock.lap();

  report.model.n_x = fit.n_x();
  report.model.n_u = fit.n_u();
  report.model.p = fit.p();
  report.model.n_train = static_cast<int>(N);
  report.model.lambda = lambda;
  report.records.resize(N);

  std::vector<VectorXd> grads(N);
  for (std::size_t k = 0; k < N; ++k) {
    grads[k] = traj_gradient(fit, train.trajectories[k]);
    report.records[k].traj_id = train.trajectories[k].id;
  }
  const double t_grads = clock.lap();

  for (std::size_t k = 0; k < N; ++k) {
    report.records[k].residual_norm =
        traj_loss(fit.theta(), train.trajectories[k]);
  }
  const double t_residual = clock.lap();

  const PredLossQuadratic pred = pred_loss_quadratic(fit.theta(), test);
  const double t_pred_grad = clock.lap();

  // IF1: one back-solve for H^{-1} grad L_pred, then dot products.
  const VectorXd v_pred = inverse_hvp(fit, train, pred.grad, options);
  for (std::size_t k = 0; k < N; ++k) {
    report.records[k].if1 = grads[k].dot(v_pred);
  }
  const double t_if1 = clock.lap();

  for (std::size_t k = 0; k < N; ++k) {
    report.records[k].grad_only_pred = grads[k].dot(pred.grad);
  }
  const double t_grad_only_pred = clock.lap();

  // DARE, adjoint Gramian, grad J and v = H^{-1} grad J.
  std::optional<VectorXd> grad_J;
  std::optional<VectorXd> v_J;
  try {
    const LqrDesign design = design_lqr(fit.theta(), costs.Q, costs.R,
                                        costs.Sigma0, options.dare);
    grad_J = trajinf::grad_J(design, options.gradient).grad;
    v_J = inverse_hvp(fit, train, *grad_J, options);
    report.model.assumption_ok = true;
    report.model.rho_cl = design.dare().rho_cl;
    report.model.J = design.cost();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::AssumptionViolated &&
        e.kind() != ErrorKind::NonStabilizable &&
        e.kind() != ErrorKind::NoConvergence &&
        e.kind() != ErrorKind::Unstable) {
      throw;
    }
    report.model.assumption_ok = false;
    report.model.assumption_message = e.what();
  }
  const double t_design = clock.lap();

  // IF2_k = g_k' v and the gradient-only control baseline.
  double t_if2 = 0.0;
  double t_grad_only_J = 0.0;
  if (grad_J) {
    for (std::size_t k = 0; k < N; ++k) {
      report.records[k].if2 = grads[k].dot(*v_J);
    }
    t_if2 = clock.lap();
    for (std::size_t k = 0; k < N; ++k) {
      report.records[k].grad_only_J = grads[k].dot(*grad_J);
    }
    t_grad_only_J = clock.lap();
  }

  for (std::size_t k = 0; k < N; ++k) {
    const LotoShift shift = exact_loto(fit, train.trajectories[k]);
    report.records[k].exact_loto_pred_delta = pred.change(*shift.exact_shift);
  }
  const double t_exact = clock.lap();

  for (std::size_t k = 0; k < N; ++k) {
    const double delta = curvature_share(fit, train.trajectories[k]);
    report.records[k].delta_k = delta;
    if (delta >= 1.0) ++report.n_delta_at_least_one;
  }
  clock.lap();

  auto& t = report.timings;
  t.fit = t_fit;
  t.residual = t_fit + t_residual;
  t.grad_only_pred = t_fit + t_grads + t_pred_grad + t_grad_only_pred;
  t.if1 = t_fit + t_grads + t_pred_grad + t_if1;
  t.grad_only_J = t_fit + t_grads + t_design + t_grad_only_J;
  t.if2 = t_fit + t_grads + t_design + t_if2;
  t.exact_loto = t_fit + t_grads + t_pred_grad + t_exact;
  t.total = t_fit + t_grads + t_residual + t_pred_grad + t_if1 +
            t_grad_only_pred + t_design + t_if2 + t_grad_only_J + t_exact;
  report.counters = counters.counts();
  return report;
}

std::vector<EvalRow> evaluate(const InfluenceReport& report,
                              const GroundTruth& truth,
                              const std::string& system, int top_k) {
  std::map<int, std::size_t> truth_index;
  for (std::size_t i = 0; i < truth.traj_ids.size(); ++i) {
    truth_index[truth.traj_ids[i]] = i;
  }
  std::set<int> report_ids;
  for (const auto& r : report.records) report_ids.insert(r.traj_id);
  if (report_ids.size() != truth_index.size() ||
      report_ids.size() != report.records.size()) {
    throw Error(ErrorKind::IdMismatch, "evaluate",
                "report and ground truth cover different trajectories");
  }
  for (int id : report_ids) {
    if (!truth_index.count(id)) {
      throw Error(ErrorKind::IdMismatch, "evaluate",
                  "trajectory " + std::to_string(id) +
                      " missing from the ground truth");
    }
  }

  // Truth columns aligned with report order.
  std::vector<std::optional<double>> d_pred, d_J, d_plant;
  for (const auto& r : report.records) {
    const std::size_t i = truth_index.at(r.traj_id);
    d_pred.push_back(truth.d_pred[i]);
    d_J.push_back(truth.d_J[i]);
    d_plant.push_back(truth.d_plant[i]);
  }
  auto any = [](const std::vector<std::optional<double>>& v) {
    for (const auto& x : v) {
      if (x) return true;
    }
    return false;
  };

  auto column = [&](auto getter) {
    std::vector<double> out;
    for (const auto& r : report.records) out.push_back(getter(r));
    return out;
  };
  const double retrain = truth.retrain_seconds;
  std::vector<EvalRow> rows;
  auto add = [&](const std::string& target, const std::string& method,
                 const std::vector<double>& predicted,
                 const std::vector<std::optional<double>>& actual,
                 double time_s) {
    EvalRow row{system, target, method, std::nullopt, time_s,
                time_s > 0.0 ? retrain / time_s : 0.0};
    try {
      row.metrics = compute_metrics(predicted, actual, top_k);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateInput) throw;
    }
    rows.push_back(std::move(row));
  };

  const auto& t = report.timings;
  const auto residual = column([](const auto& r) { return r.residual_norm; });
  add("pred", "Residual", residual, d_pred, t.residual);
  add("pred", "Grad-only",
      column([](const auto& r) { return r.grad_only_pred; }), d_pred,
      t.grad_only_pred);
  add("pred", "IF1", column([](const auto& r) { return r.if1; }), d_pred,
      t.if1);
  add("pred", "Exact LOTO",
      column([](const auto& r) { return r.exact_loto_pred_delta; }), d_pred,
      t.exact_loto);

  if (report.model.assumption_ok) {
    const auto grad_only_J =
        column([](const auto& r) { return r.grad_only_J.value_or(0.0); });
    const auto if2 = column([](const auto& r) { return r.if2.value_or(0.0); });
    if (any(d_J)) {
      add("lqr", "Residual", residual, d_J, t.residual);
      add("lqr", "Grad-only", grad_only_J, d_J, t.grad_only_J);
      add("lqr", "IF2", if2, d_J, t.if2);
    }
    if (any(d_plant)) {
      add("plant", "Residual", residual, d_plant, t.residual);
      add("plant", "Grad-only", grad_only_J, d_plant, t.grad_only_J);
      add("plant", "IF2", if2, d_plant, t.if2);
    }
  }
  rows.push_back({system, "-", "Retraining", std::nullopt, retrain, 1.0});
  return rows;
}

}  // namespace trajinf
