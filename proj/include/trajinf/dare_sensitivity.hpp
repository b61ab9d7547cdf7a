#pragma once

// Sensitivity of the nominal LQR cost J(theta) = Tr(P(theta) Sigma0) through
// the stabilizing DARE solution, and the control-level influence score IF2.
//
// With A_cl = A - B K the residual map R(P, theta) has Frechet derivative
// T(dP) = dP - A_cl' dP A_cl in P, and for a single parameter coordinate m
//   dR/dtheta_m = -(Acl_m' P A_cl + A_cl' P Acl_m),  Acl_m = A_m - B_m K,
// where A_m / B_m are the unit perturbations of A / B selected by m. The
// gradient is either assembled from p forward Lyapunov solves
// (S_m = T^{-1}(-dR/dtheta_m), [grad J]_m = Tr(S_m Sigma0)) or from a single
// adjoint solve L - A_cl L A_cl' = Sigma0.

#include <Eigen/Dense>

#include "trajinf/ident.hpp"
#include "trajinf/matrix_equations.hpp"

namespace trajinf {

class LqrDesign {
 public:
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::MatrixXd& R() const { return R_; }
  const Eigen::MatrixXd& Sigma0() const { return Sigma0_; }
  const DareSolution& dare() const { return dare_; }
  const Eigen::MatrixXd& P() const { return dare_.P; }
  const Eigen::MatrixXd& K() const { return dare_.K; }
  const Eigen::MatrixXd& A_cl() const { return dare_.A_cl; }
  // Adjoint solution of L - A_cl L A_cl' = Sigma0.
  const Eigen::MatrixXd& Lambda() const { return Lambda_; }
  int n_x() const { return static_cast<int>(A_.rows()); }
  int n_u() const { return static_cast<int>(B_.cols()); }
  int p() const { return param_count(n_x(), n_u()); }

  double cost() const { return (dare_.P * Sigma0_).trace(); }

 private:
  friend LqrDesign design_lqr(const ParamVector&, const Eigen::MatrixXd&,
                              const Eigen::MatrixXd&, const Eigen::MatrixXd&,
                              const DareOptions&);
  Eigen::MatrixXd A_, B_, Q_, R_, Sigma0_;
  DareSolution dare_;
  Eigen::MatrixXd Lambda_;
};

/// Solves the DARE at theta and the adjoint Lyapunov equation.
/// Throws Error{AssumptionViolated} when the closed loop is not Schur stable
/// with margin kStabilityMargin, Error{NonStabilizable} from the DARE solver.
LqrDesign design_lqr(const ParamVector& theta, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& R, const Eigen::MatrixXd& Sigma0,
                     const DareOptions& options = {});

// J at theta, re-solving the DARE (no adjoint solve).
double lqr_cost(const ParamVector& theta, const Eigen::MatrixXd& Q,
                const Eigen::MatrixXd& R, const Eigen::MatrixXd& Sigma0,
                const DareOptions& options = {});

Eigen::MatrixXd frechet_T(const Eigen::MatrixXd& A_cl,
                          const Eigen::MatrixXd& dP);

// Acl_m = A_m - B_m K as a dense n_x x n_x matrix.
Eigen::MatrixXd closed_loop_direction(const LqrDesign& design, int m);

/// dR/dtheta_m at (P0, theta_hat) in the compact two-term form.
Eigen::MatrixXd dresidual_dtheta(const LqrDesign& design, int m);

// The same derivative in the expanded five-term form. Reference for tests.
Eigen::MatrixXd dresidual_dtheta_expanded(const LqrDesign& design, int m);

/// S_m = dP/dtheta_m, one forward Lyapunov solve.
Eigen::MatrixXd forward_sensitivity(const LqrDesign& design, int m);

enum class GradientMethod { Forward, Adjoint };

struct CostGradient {
  Eigen::VectorXd grad;
  GradientMethod method = GradientMethod::Adjoint;
};

/// grad J by the adjoint route. Uses the Lambda already stored in the design.
/// With W = P A_cl Lambda every component is a lookup:
///   A-coordinate (i, j): 2 W(i, j);  B-coordinate (i, l): -2 (W K')(i, l).
CostGradient grad_J_adjoint(const LqrDesign& design);

// Adjoint route evaluated as one explicit trace per coordinate with dense
// basis matrices. Reference path for tests.
CostGradient grad_J_adjoint_dense(const LqrDesign& design);

/// grad J from p forward Lyapunov solves.
CostGradient grad_J_forward(const LqrDesign& design);

CostGradient grad_J(const LqrDesign& design, GradientMethod method);

/// IF2_k = g_k' H^{-1} grad J(theta_hat).
double if2_score(const RidgeFit& fit, const Trajectory& tau,
                 const CostGradient& grad);

}  // namespace trajinf
