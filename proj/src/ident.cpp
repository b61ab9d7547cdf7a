#include "trajinf/ident.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "trajinf/errors.hpp"
#include "trajinf/instrument.hpp"
#include "trajinf/matrix_equations.hpp"

namespace trajinf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd stacked(const Transition& t) {
  VectorXd z(t.x.size() + t.u.size());
  z << t.x, t.u;
  return z;
}

void check_dims(const ParamVector& theta, const Trajectory& tau,
                const char* stage) {
  for (const auto& t : tau.transitions) {
    if (t.x.size() != theta.n_x() || t.u.size() != theta.n_u() ||
        t.x_plus.size() != theta.n_x()) {
      throw Error(ErrorKind::BadInput, stage,
                  "transition dimensions do not match the parameter vector");
    }
  }
}

// Residual-weighted outer products: sum (x+ - Theta z) z'. n_x x (n_x+n_u).
MatrixXd residual_moment(const MatrixXd& Theta, const Trajectory& tau) {
  MatrixXd out = MatrixXd::Zero(Theta.rows(), Theta.cols());
  for (const auto& t : tau.transitions) {
    const VectorXd z = stacked(t);
    out.noalias() += (t.x_plus - Theta * z) * z.transpose();
  }
  return out;
}

}  // namespace

std::size_t Dataset::transition_count() const {
  std::size_t n = 0;
  for (const auto& tau : trajectories) n += tau.transitions.size();
  return n;
}

Dataset Dataset::without(std::size_t index) const {
  if (index >= trajectories.size()) {
    throw Error(ErrorKind::IndexOutOfRange, "Dataset::without",
                "trajectory index " + std::to_string(index) + " out of range");
  }
  Dataset out{n_x, n_u, {}};
  out.trajectories.reserve(trajectories.size() - 1);
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    if (k != index) out.trajectories.push_back(trajectories[k]);
  }
  return out;
}

void Dataset::validate(std::size_t min_trajectories) const {
  constexpr const char* stage = "dataset";
  if (n_x < 1 || n_u < 1) {
    throw Error(ErrorKind::Data, stage, "n_x and n_u must be positive");
  }
  if (trajectories.size() < min_trajectories) {
    throw Error(ErrorKind::Data, stage,
                "need at least " + std::to_string(min_trajectories) +
                    " trajectories, got " +
                    std::to_string(trajectories.size()));
  }
  std::set<int> ids;
  for (const auto& tau : trajectories) {
    if (tau.id < 0 || !ids.insert(tau.id).second) {
      throw Error(ErrorKind::Data, stage,
                  "trajectory id " + std::to_string(tau.id) +
                      " is negative or duplicated");
    }
    if (tau.transitions.empty()) {
      throw Error(ErrorKind::Data, stage,
                  "trajectory " + std::to_string(tau.id) + " is empty");
    }
    for (const auto& t : tau.transitions) {
      if (t.x.size() != n_x || t.u.size() != n_u || t.x_plus.size() != n_x) {
        throw Error(ErrorKind::Data, stage,
                    "trajectory " + std::to_string(tau.id) +
                        " has inconsistent dimensions");
      }
      if (!t.x.allFinite() || !t.u.allFinite() || !t.x_plus.allFinite()) {
        throw Error(ErrorKind::Data, stage,
                    "trajectory " + std::to_string(tau.id) +
                        " has non-finite entries");
      }
    }
  }
}

ParamVector::ParamVector(int n_x, int n_u)
    : ParamVector(n_x, n_u, VectorXd::Zero(param_count(n_x, n_u))) {}

ParamVector::ParamVector(int n_x, int n_u, VectorXd theta)
    : n_x_(n_x), n_u_(n_u), theta_(std::move(theta)) {
  if (n_x < 1 || n_u < 1 || theta_.size() != param_count(n_x, n_u)) {
    throw Error(ErrorKind::BadInput, "ParamVector",
                "length must equal n_x (n_x + n_u)");
  }
}

ParamVector ParamVector::from_matrices(const MatrixXd& A, const MatrixXd& B) {
  if (A.rows() != A.cols() || B.rows() != A.rows()) {
    throw Error(ErrorKind::BadInput, "ParamVector", "A/B dimension mismatch");
  }
  MatrixXd AB(A.rows(), A.cols() + B.cols());
  AB << A, B;
  return ParamVector(static_cast<int>(A.rows()), static_cast<int>(B.cols()),
                     from_param_matrix(AB));
}

MatrixXd ParamVector::A() const {
  return as_param_matrix(theta_, n_x_, n_u_).leftCols(n_x_);
}

MatrixXd ParamVector::B() const {
  return as_param_matrix(theta_, n_x_, n_u_).rightCols(n_u_);
}

MatrixXd as_param_matrix(const VectorXd& v, int n_x, int n_u) {
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(v.data(), n_x, n_x + n_u);
}

VectorXd from_param_matrix(const MatrixXd& M) {
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rm = M;
  return Eigen::Map<const VectorXd>(rm.data(), rm.size());
}

MatrixXd regressor(const VectorXd& x, const VectorXd& u) {
  if (x.size() < 1 || u.size() < 1) {
    throw Error(ErrorKind::BadInput, "regressor", "empty state or input");
  }
  const Eigen::Index n_x = x.size();
  const Eigen::Index d = x.size() + u.size();
  MatrixXd phi = MatrixXd::Zero(n_x, n_x * d);
  for (Eigen::Index i = 0; i < n_x; ++i) {
    phi.block(i, i * d, 1, n_x) = x.transpose();
    phi.block(i, i * d + n_x, 1, u.size()) = u.transpose();
  }
  return phi;
}

RidgeFit::RidgeFit(int n_x, int n_u, double lambda, MatrixXd gram,
                   const MatrixXd& cross)
    : theta_(n_x, n_u), lambda_(lambda), gram_(std::move(gram)) {
  factor_.compute(gram_);
  instrument::count_hessian_factorization();
  if (factor_.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalFailure, "fit_ridge",
                "Cholesky factorization of the Hessian failed");
  }
  const MatrixXd Theta = factor_.solve(cross.transpose()).transpose();
  theta_ = ParamVector(n_x, n_u, from_param_matrix(Theta));
}

MatrixXd RidgeFit::hessian() const {
  return kron(MatrixXd::Identity(n_x(), n_x()), 2.0 * gram_);
}

VectorXd RidgeFit::apply_hessian(const VectorXd& v) const {
  const MatrixXd V = as_param_matrix(v, n_x(), n_u());
  return from_param_matrix(2.0 * V * gram_);
}

VectorXd RidgeFit::solve(const VectorXd& v) const {
  const MatrixXd V = as_param_matrix(v, n_x(), n_u());
  const MatrixXd W = factor_.solve(V.transpose()).transpose();
  return from_param_matrix(0.5 * W);
}

MatrixXd traj_gram(const Trajectory& tau, int n_x, int n_u) {
  const int d = n_x + n_u;
  MatrixXd G = MatrixXd::Zero(d, d);
  for (const auto& t : tau.transitions) {
    const VectorXd z = stacked(t);
    G.selfadjointView<Eigen::Lower>().rankUpdate(z);
  }
  return G.selfadjointView<Eigen::Lower>();
}

RidgeFit fit_ridge(const Dataset& data, double lambda) {
  constexpr const char* stage = "fit_ridge";
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::BadInput, stage, "lambda must be positive");
  }
  if (data.transition_count() == 0) {
    throw Error(ErrorKind::EmptyDataset, stage, "dataset has no transitions");
  }
  const int n_x = data.n_x;
  const int n_u = data.n_u;
  const int d = n_x + n_u;
  MatrixXd G = MatrixXd::Zero(d, d);
  MatrixXd cross = MatrixXd::Zero(n_x, d);  // sum x+ z'
  for (const auto& tau : data.trajectories) {
    for (const auto& t : tau.transitions) {
      if (t.x.size() != n_x || t.u.size() != n_u || t.x_plus.size() != n_x) {
        throw Error(ErrorKind::BadInput, stage, "dimension mismatch");
      }
      const VectorXd z = stacked(t);
      G.selfadjointView<Eigen::Lower>().rankUpdate(z);
      cross.noalias() += t.x_plus * z.transpose();
    }
  }
  G = MatrixXd(G.selfadjointView<Eigen::Lower>());
  G.diagonal().array() += lambda;
  if (!G.allFinite() || !cross.allFinite()) {
    throw Error(ErrorKind::NumericalFailure, stage, "non-finite data");
  }
  return RidgeFit(n_x, n_u, lambda, std::move(G), cross);
}

VectorXd fit_ridge_dense(const Dataset& data, double lambda) {
  const int n_x = data.n_x;
  const int p = param_count(n_x, data.n_u);
  const auto rows = static_cast<Eigen::Index>(data.transition_count()) * n_x;
  MatrixXd stack(rows + p, p);
  VectorXd rhs(rows + p);
  Eigen::Index r = 0;
  for (const auto& tau : data.trajectories) {
    for (const auto& t : tau.transitions) {
      stack.middleRows(r, n_x) = regressor(t.x, t.u);
      rhs.segment(r, n_x) = t.x_plus;
      r += n_x;
    }
  }
  stack.bottomRows(p) = std::sqrt(lambda) * MatrixXd::Identity(p, p);
  rhs.tail(p).setZero();
  return stack.colPivHouseholderQr().solve(rhs);
}

double traj_loss(const ParamVector& theta, const Trajectory& tau) {
  check_dims(theta, tau, "traj_loss");
  const MatrixXd Theta = as_param_matrix(theta.values(), theta.n_x(),
                                         theta.n_u());
  double loss = 0.0;
  for (const auto& t : tau.transitions) {
    loss += (t.x_plus - Theta * stacked(t)).squaredNorm();
  }
  return loss;
}

VectorXd traj_gradient(const ParamVector& theta, const Trajectory& tau) {
  check_dims(theta, tau, "traj_gradient");
  const MatrixXd Theta = as_param_matrix(theta.values(), theta.n_x(),
                                         theta.n_u());
  return from_param_matrix(-2.0 * residual_moment(Theta, tau));
}

MatrixXd traj_hessian(int n_x, int n_u, const Trajectory& tau) {
  check_dims(ParamVector(n_x, n_u), tau, "traj_hessian");
  return kron(MatrixXd::Identity(n_x, n_x), 2.0 * traj_gram(tau, n_x, n_u));
}

LotoShift exact_loto(const RidgeFit& fit, const Trajectory& tau) {
  constexpr const char* stage = "exact_loto";
  check_dims(fit.theta(), tau, stage);
  const MatrixXd G_rest = fit.gram() - traj_gram(tau, fit.n_x(), fit.n_u());
  const Eigen::LLT<MatrixXd> llt(G_rest);
  instrument::count_downdate_factorization();
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularSystem, stage,
                "H - H_k is not positive definite");
  }
  const MatrixXd Gk =
      as_param_matrix(traj_gradient(fit, tau), fit.n_x(), fit.n_u());
  LotoShift out;
  out.traj_id = tau.id;
  out.exact_shift =
      from_param_matrix(0.5 * llt.solve(Gk.transpose()).transpose());
  return out;
}

double curvature_share(const RidgeFit& fit, const Trajectory& tau) {
  // Largest eigenvalue of L^{-1} G_k L^{-T} with G = L L'. The pencil
  // (H_k, H) has the same spectrum because both are kron(I, 2 .).
  const MatrixXd Gk = traj_gram(tau, fit.n_x(), fit.n_u());
  const auto L = fit.gram_factor().matrixL();
  MatrixXd W = L.solve(Gk);
  W = L.solve(W.transpose().eval());
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(W),
                                                   Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

double curvature_share_dense(const RidgeFit& fit, const Trajectory& tau) {
  const MatrixXd H = fit.hessian();
  const MatrixXd Hk = traj_hessian(fit.n_x(), fit.n_u(), tau);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
  const MatrixXd H_inv_sqrt = es.operatorInverseSqrt();
  const MatrixXd S = H_inv_sqrt * Hk * H_inv_sqrt;
  return Eigen::JacobiSVD<MatrixXd>(S).singularValues()(0);
}

LotoShift first_order_loto(const RidgeFit& fit, const Trajectory& tau) {
  check_dims(fit.theta(), tau, "first_order_loto");
  LotoShift out;
  out.traj_id = tau.id;
  out.first_order_shift = fit.solve(traj_gradient(fit, tau));
  const double delta = curvature_share(fit, tau);
  out.delta_k = delta;
  out.bound_relative_error = delta < 1.0
                                 ? delta / (1.0 - delta)
                                 : std::numeric_limits<double>::infinity();
  return out;
}

namespace {

template <typename ApplyH>
CgResult conjugate_gradient(ApplyH&& apply, const VectorXd& v,
                            const CgOptions& options) {
  CgResult out;
  out.x = VectorXd::Zero(v.size());
  const double v_norm = v.norm();
  if (v_norm == 0.0) return out;
  VectorXd r = v;
  VectorXd d = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < options.max_iter; ++it) {
    if (std::sqrt(rr) <= options.tol * v_norm) break;
    const VectorXd Hd = apply(d);
    const double alpha = rr / d.dot(Hd);
    out.x += alpha * d;
    r -= alpha * Hd;
    const double rr_next = r.squaredNorm();
    d = r + (rr_next / rr) * d;
    rr = rr_next;
    out.iterations = it + 1;
  }
  // Report the true residual, not the recursively updated one.
  out.relative_residual = (apply(out.x) - v).norm() / v_norm;
  if (!(out.relative_residual <= options.tol)) {
    throw Error(ErrorKind::NoConvergence, "cg_inverse_hvp",
                "relative residual " + std::to_string(out.relative_residual) +
                    " after " + std::to_string(out.iterations) +
                    " iterations");
  }
  return out;
}

}  // namespace

CgResult cg_inverse_hvp(const RidgeFit& fit, const VectorXd& v,
                        const CgOptions& options) {
  if (v.size() != fit.p()) {
    throw Error(ErrorKind::BadInput, "cg_inverse_hvp", "dimension mismatch");
  }
  return conjugate_gradient(
      [&](const VectorXd& d) { return fit.apply_hessian(d); }, v, options);
}

CgResult cg_inverse_hvp(const RidgeFit& fit, const Dataset& data,
                        const VectorXd& v, const CgOptions& options) {
  if (v.size() != fit.p()) {
    throw Error(ErrorKind::BadInput, "cg_inverse_hvp", "dimension mismatch");
  }
  const int n_x = fit.n_x();
  const int n_u = fit.n_u();
  auto apply = [&](const VectorXd& d) {
    const MatrixXd D = as_param_matrix(d, n_x, n_u);
    MatrixXd out = MatrixXd::Zero(D.rows(), D.cols());
    for (const auto& tau : data.trajectories) {
      for (const auto& t : tau.transitions) {
        const VectorXd z = stacked(t);
        out.noalias() += (D * z) * z.transpose();  // Phi'(Phi d)
      }
    }
    return VectorXd(2.0 * from_param_matrix(out) + 2.0 * fit.lambda() * d);
  };
  return conjugate_gradient(apply, v, options);
}

double pred_loss(const ParamVector& theta, const Dataset& test) {
  if (test.transition_count() == 0) {
    throw Error(ErrorKind::EmptyDataset, "pred_loss", "empty test set");
  }
  double loss = 0.0;
  for (const auto& tau : test.trajectories) loss += traj_loss(theta, tau);
  return loss;
}

VectorXd pred_loss_grad(const ParamVector& theta, const Dataset& test) {
  if (test.transition_count() == 0) {
    throw Error(ErrorKind::EmptyDataset, "pred_loss_grad", "empty test set");
  }
  VectorXd grad = VectorXd::Zero(theta.size());
  for (const auto& tau : test.trajectories) grad += traj_gradient(theta, tau);
  return grad;
}

MatrixXd pred_loss_hessian(const Dataset& test) {
  const int d = test.n_x + test.n_u;
  MatrixXd G = MatrixXd::Zero(d, d);
  for (const auto& tau : test.trajectories) {
    G += traj_gram(tau, test.n_x, test.n_u);
  }
  return kron(MatrixXd::Identity(test.n_x, test.n_x), 2.0 * G);
}

double PredLossQuadratic::change(const VectorXd& shift) const {
  // 0.5 d' kron(I, 2 G) d = trace(D G D')
  const MatrixXd D = as_param_matrix(shift, n_x, n_u);
  return grad.dot(shift) + (D * gram).cwiseProduct(D).sum();
}

PredLossQuadratic pred_loss_quadratic(const ParamVector& theta,
                                      const Dataset& test) {
  PredLossQuadratic q;
  q.grad = pred_loss_grad(theta, test);
  q.n_x = theta.n_x();
  q.n_u = theta.n_u();
  q.gram = MatrixXd::Zero(q.n_x + q.n_u, q.n_x + q.n_u);
  for (const auto& tau : test.trajectories) {
    q.gram += traj_gram(tau, q.n_x, q.n_u);
  }
  return q;
}

double exact_pred_delta(const RidgeFit& fit, const Trajectory& tau,
                        const Dataset& test) {
  return pred_loss_quadratic(fit.theta(), test)
      .change(*exact_loto(fit, tau).exact_shift);
}

double if1_score(const RidgeFit& fit, const Trajectory& tau,
                 const Dataset& test) {
  const VectorXd v = fit.solve(pred_loss_grad(fit.theta(), test));
  return traj_gradient(fit, tau).dot(v);
}

BaselineScores baseline_scores(const RidgeFit& fit, const Trajectory& tau,
                               const VectorXd& direction) {
  if (direction.size() != fit.p()) {
    throw Error(ErrorKind::BadInput, "baseline_scores", "dimension mismatch");
  }
  return {traj_gradient(fit, tau).dot(direction),
          traj_loss(fit.theta(), tau)};
}

}  // namespace trajinf
