#pragma once

// Ridge-regularized least-squares identification of x+ = A x + B u and the
// leave-one-trajectory-out (LOTO) machinery built on it.
//
// Parameter layout: theta stacks the rows of [A B], so theta[i*(n_x+n_u) + j]
// is [A B](i, j) and the regressor is Phi(x, u) = kron(I_{n_x}, [x' u']).
// With this layout every Phi'Phi is block diagonal with n_x identical
// (n_x+n_u)^2 blocks z z', z = [x; u]. The Hessian is therefore
//   H = kron(I_{n_x}, 2 G),   G = sum_s z_s z_s' + lambda I,
// and all solves reduce to one (n_x+n_u)-sized Cholesky factor.
//
// Losses are unnormalized sums over transitions:
//   L_k(theta) = sum_{s in traj k} ||x+_s - Phi_s theta||^2.

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

namespace trajinf {

struct Transition {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  Eigen::VectorXd x_plus;
};

struct Trajectory {
  int id = 0;
  std::vector<Transition> transitions;
};

struct Dataset {
  int n_x = 0;
  int n_u = 0;
  std::vector<Trajectory> trajectories;

  std::size_t size() const { return trajectories.size(); }
  std::size_t transition_count() const;

  // Copy of the dataset with the trajectory at `index` removed.
  Dataset without(std::size_t index) const;

  // Dimension consistency, finiteness, non-empty trajectories, unique ids and
  // at least `min_trajectories` trajectories. Throws Error{Data}.
  void validate(std::size_t min_trajectories = 1) const;
};

class ParamVector {
 public:
  ParamVector(int n_x, int n_u);
  ParamVector(int n_x, int n_u, Eigen::VectorXd theta);
  static ParamVector from_matrices(const Eigen::MatrixXd& A,
                                   const Eigen::MatrixXd& B);

  int n_x() const { return n_x_; }
  int n_u() const { return n_u_; }
  int size() const { return static_cast<int>(theta_.size()); }
  const Eigen::VectorXd& values() const { return theta_; }

  Eigen::MatrixXd A() const;
  Eigen::MatrixXd B() const;

 private:
  int n_x_;
  int n_u_;
  Eigen::VectorXd theta_;
};

inline int param_count(int n_x, int n_u) { return n_x * (n_x + n_u); }

// Row-major view of a p-vector as the n_x x (n_x+n_u) matrix [A B].
Eigen::MatrixXd as_param_matrix(const Eigen::VectorXd& v, int n_x, int n_u);
Eigen::VectorXd from_param_matrix(const Eigen::MatrixXd& M);

/// Phi(x, u), n_x x p.
Eigen::MatrixXd regressor(const Eigen::VectorXd& x, const Eigen::VectorXd& u);

// Immutable result of fit_ridge. Holds theta-hat and the Cholesky factor of
// the shared Hessian block G = sum z z' + lambda I (H = kron(I, 2G)).
class RidgeFit {
 public:
  // Factorizes `gram` (G) once and solves Theta G = cross for theta-hat,
  // where cross = sum x+ z'.
  RidgeFit(int n_x, int n_u, double lambda, Eigen::MatrixXd gram,
           const Eigen::MatrixXd& cross);

  const ParamVector& theta() const { return theta_; }
  double lambda() const { return lambda_; }
  int n_x() const { return theta_.n_x(); }
  int n_u() const { return theta_.n_u(); }
  int p() const { return theta_.size(); }

  // G, so that H = kron(I_{n_x}, 2 G).
  const Eigen::MatrixXd& gram() const { return gram_; }
  const Eigen::LLT<Eigen::MatrixXd>& gram_factor() const { return factor_; }

  // Dense p x p Hessian of the regularized objective.
  Eigen::MatrixXd hessian() const;
  // H v without forming H.
  Eigen::VectorXd apply_hessian(const Eigen::VectorXd& v) const;
  // H^{-1} v through the block Cholesky factor.
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const;

 private:
  ParamVector theta_;
  double lambda_;
  Eigen::MatrixXd gram_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
};

/// Tikhonov-regularized least squares on all transitions of `data`.
/// Throws Error{BadInput} for lambda <= 0, Error{EmptyDataset} when there are
/// no transitions and Error{NumericalFailure} if the factorization breaks down.
RidgeFit fit_ridge(const Dataset& data, double lambda);

// Reference path: stacks every Phi_s with sqrt(lambda) I and solves the
// augmented least-squares problem by column-pivoted QR. Test oracle only.
Eigen::VectorXd fit_ridge_dense(const Dataset& data, double lambda);

// Sum over the trajectory of z z', z = [x; u].
Eigen::MatrixXd traj_gram(const Trajectory& tau, int n_x, int n_u);

// L_k(theta)
double traj_loss(const ParamVector& theta, const Trajectory& tau);

/// g_k = -2 sum Phi_s'(x+_s - Phi_s theta_hat), the gradient of L_k at theta.
Eigen::VectorXd traj_gradient(const ParamVector& theta, const Trajectory& tau);
inline Eigen::VectorXd traj_gradient(const RidgeFit& fit,
                                     const Trajectory& tau) {
  return traj_gradient(fit.theta(), tau);
}

/// H_k = 2 sum Phi_s' Phi_s (dense p x p).
Eigen::MatrixXd traj_hessian(int n_x, int n_u, const Trajectory& tau);

struct LotoShift {
  int traj_id = 0;
  std::optional<Eigen::VectorXd> exact_shift;        // (H - H_k)^{-1} g_k
  std::optional<Eigen::VectorXd> first_order_shift;  // H^{-1} g_k
  std::optional<double> delta_k;  // ||H^{-1/2} H_k H^{-1/2}||_2
  // delta_k / (1 - delta_k), infinite when delta_k >= 1.
  std::optional<double> bound_relative_error;
};

/// Exact LOTO parameter shift theta_{-k} - theta_hat.
LotoShift exact_loto(const RidgeFit& fit, const Trajectory& tau);

/// H^{-1} g_k together with delta_k (largest generalized eigenvalue of the
/// pencil (H_k, H)).
LotoShift first_order_loto(const RidgeFit& fit, const Trajectory& tau);

double curvature_share(const RidgeFit& fit, const Trajectory& tau);

// Dense reference for delta_k: symmetric eigensolve of H^{-1/2} H_k H^{-1/2}
// with explicit p x p matrices.
double curvature_share_dense(const RidgeFit& fit, const Trajectory& tau);

struct CgOptions {
  double tol = 1e-10;  // relative residual ||H x - v|| <= tol ||v||
  int max_iter = 1000;
};

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Conjugate-gradient H^{-1} v with H applied through the block Gram matrix.
/// Throws Error{NoConvergence} if the tolerance is not met in max_iter steps.
CgResult cg_inverse_hvp(const RidgeFit& fit, const Eigen::VectorXd& v,
                        const CgOptions& options = {});

/// Same, but H is applied matrix-free through the per-transition products
/// Phi_s' (Phi_s v) over `data` (which must be the fitted dataset).
CgResult cg_inverse_hvp(const RidgeFit& fit, const Dataset& data,
                        const Eigen::VectorXd& v,
                        const CgOptions& options = {});

/// Held-out loss sum ||x+ - Phi theta||^2 over all test transitions.
double pred_loss(const ParamVector& theta, const Dataset& test);
Eigen::VectorXd pred_loss_grad(const ParamVector& theta, const Dataset& test);
// Constant Hessian of pred_loss (no regularization), dense p x p.
Eigen::MatrixXd pred_loss_hessian(const Dataset& test);

// Quadratic model of the held-out loss at theta: its gradient and the Gram
// block of H_pred = kron(I, 2 gram). Exact because the loss is quadratic.
struct PredLossQuadratic {
  Eigen::VectorXd grad;
  Eigen::MatrixXd gram;
  int n_x = 0;
  int n_u = 0;

  // L_pred(theta + shift) - L_pred(theta)
  double change(const Eigen::VectorXd& shift) const;
};

PredLossQuadratic pred_loss_quadratic(const ParamVector& theta,
                                      const Dataset& test);

/// grad' d + 0.5 d' H_pred d with d the exact LOTO shift; equals
/// pred_loss(theta_{-k}) - pred_loss(theta_hat) for the quadratic loss.
double exact_pred_delta(const RidgeFit& fit, const Trajectory& tau,
                        const Dataset& test);

/// IF1_k = g_k' H^{-1} grad L_pred(theta_hat).
double if1_score(const RidgeFit& fit, const Trajectory& tau,
                 const Dataset& test);

struct BaselineScores {
  double grad_only = 0.0;      // g_k' direction
  double residual_norm = 0.0;  // L_k(theta_hat)
};

BaselineScores baseline_scores(const RidgeFit& fit, const Trajectory& tau,
                               const Eigen::VectorXd& direction);

}  // namespace trajinf
