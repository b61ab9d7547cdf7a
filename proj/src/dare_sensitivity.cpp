#include "trajinf/dare_sensitivity.hpp"

#include <string>

#include "trajinf/errors.hpp"
#include "trajinf/instrument.hpp"

namespace trajinf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void check_cost_matrices(int n_x, int n_u, const MatrixXd& Q,
                         const MatrixXd& R, const MatrixXd& Sigma0) {
  if (Q.rows() != n_x || Q.cols() != n_x || R.rows() != n_u ||
      R.cols() != n_u || Sigma0.rows() != n_x || Sigma0.cols() != n_x) {
    throw Error(ErrorKind::BadInput, "design_lqr",
                "Q, R, Sigma0 dimensions do not match the model");
  }
}

void check_coordinate(const LqrDesign& design, int m) {
  if (m < 0 || m >= design.p()) {
    throw Error(ErrorKind::IndexOutOfRange, "dresidual_dtheta",
                "coordinate " + std::to_string(m) + " outside [0, " +
                    std::to_string(design.p()) + ")");
  }
}

// Unit perturbations (A_m, B_m) for coordinate m.
std::pair<MatrixXd, MatrixXd> basis_pair(const LqrDesign& design, int m) {
  const int n_x = design.n_x();
  const int n_u = design.n_u();
  const int d = n_x + n_u;
  MatrixXd Am = MatrixXd::Zero(n_x, n_x);
  MatrixXd Bm = MatrixXd::Zero(n_x, n_u);
  const int i = m / d;
  const int j = m % d;
  if (j < n_x) {
    Am(i, j) = 1.0;
  } else {
    Bm(i, j - n_x) = 1.0;
  }
  return {Am, Bm};
}

}  // namespace

LqrDesign design_lqr(const ParamVector& theta, const MatrixXd& Q,
                     const MatrixXd& R, const MatrixXd& Sigma0,
                     const DareOptions& options) {
  check_cost_matrices(theta.n_x(), theta.n_u(), Q, R, Sigma0);
  LqrDesign design;
  design.A_ = theta.A();
  design.B_ = theta.B();
  design.Q_ = symmetrized(Q);
  design.R_ = symmetrized(R);
  design.Sigma0_ = symmetrized(Sigma0);
  design.dare_ = solve_dare(design.A_, design.B_, design.Q_, design.R_,
                            options);
  if (!(design.dare_.rho_cl < 1.0 - kStabilityMargin)) {
    throw Error(ErrorKind::AssumptionViolated, "design_lqr",
                "closed loop of the identified model is not Schur stable "
                "(rho=" +
                    std::to_string(design.dare_.rho_cl) + ")");
  }
  try {
    design.Lambda_ = solve_dlyap_adj(design.dare_.A_cl, design.Sigma0_);
  } catch (const Error& e) {
    // A stabilizing gain so large that the closed-loop Lyapunov operator is
    // numerically singular means the model is stabilizable in name only.
    if (e.kind() != ErrorKind::SingularOperator) throw;
    throw Error(ErrorKind::AssumptionViolated, "design_lqr",
                "identified model is numerically unstabilizable (|K|=" +
                    std::to_string(design.dare_.K.norm()) + "): " + e.what());
  }
  return design;
}

double lqr_cost(const ParamVector& theta, const MatrixXd& Q, const MatrixXd& R,
                const MatrixXd& Sigma0, const DareOptions& options) {
  check_cost_matrices(theta.n_x(), theta.n_u(), Q, R, Sigma0);
  const DareSolution dare = solve_dare(theta.A(), theta.B(), Q, R, options);
  return (dare.P * Sigma0).trace();
}

MatrixXd frechet_T(const MatrixXd& A_cl, const MatrixXd& dP) {
  return lyapunov_operator(A_cl, dP);
}

MatrixXd closed_loop_direction(const LqrDesign& design, int m) {
  check_coordinate(design, m);
  const auto [Am, Bm] = basis_pair(design, m);
  return Am - Bm * design.K();
}

MatrixXd dresidual_dtheta(const LqrDesign& design, int m) {
  const MatrixXd Acl_m = closed_loop_direction(design, m);
  const MatrixXd X = Acl_m.transpose() * design.P() * design.A_cl();
  return symmetrized(-(X + X.transpose()));
}

MatrixXd dresidual_dtheta_expanded(const LqrDesign& design, int m) {
  check_coordinate(design, m);
  const auto [Am, Bm] = basis_pair(design, m);
  const MatrixXd& P = design.P();
  const MatrixXd& K = design.K();
  const MatrixXd Acl = design.A() - design.B() * K;
  const MatrixXd dAcl = Am - Bm * K;
  return -dAcl.transpose() * P * Acl - Acl.transpose() * P * dAcl -
         K.transpose() * Bm.transpose() * P * Bm * K +
         K.transpose() * Bm.transpose() * P * Acl +
         Acl.transpose() * P * Bm * K;
}

MatrixXd forward_sensitivity(const LqrDesign& design, int m) {
  return solve_dlyap_t(design.A_cl(), -dresidual_dtheta(design, m));
}

CostGradient grad_J_adjoint(const LqrDesign& design) {
  const MatrixXd W = design.P() * design.A_cl() * design.Lambda();
  MatrixXd G(design.n_x(), design.n_x() + design.n_u());
  G << 2.0 * W, -2.0 * W * design.K().transpose();
  instrument::count_trace_assemblies(design.p());
  return {from_param_matrix(G), GradientMethod::Adjoint};
}

CostGradient grad_J_adjoint_dense(const LqrDesign& design) {
  VectorXd grad(design.p());
  const MatrixXd PA = design.P() * design.A_cl();
  for (int m = 0; m < design.p(); ++m) {
    const MatrixXd Acl_m = closed_loop_direction(design, m);
    grad(m) = (design.Lambda() * (Acl_m.transpose() * PA +
                                  PA.transpose() * Acl_m))
                  .trace();
  }
  return {grad, GradientMethod::Adjoint};
}

CostGradient grad_J_forward(const LqrDesign& design) {
  VectorXd grad(design.p());
  for (int m = 0; m < design.p(); ++m) {
    grad(m) = (forward_sensitivity(design, m) * design.Sigma0()).trace();
  }
  return {grad, GradientMethod::Forward};
}

CostGradient grad_J(const LqrDesign& design, GradientMethod method) {
  return method == GradientMethod::Adjoint ? grad_J_adjoint(design)
                                           : grad_J_forward(design);
}

double if2_score(const RidgeFit& fit, const Trajectory& tau,
                 const CostGradient& grad) {
  if (grad.grad.size() != fit.p()) {
    throw Error(ErrorKind::BadInput, "if2_score", "dimension mismatch");
  }
  return traj_gradient(fit, tau).dot(fit.solve(grad.grad));
}

}  // namespace trajinf
