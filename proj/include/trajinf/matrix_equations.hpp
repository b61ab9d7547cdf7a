#pragma once

// Dense kernels for the discrete-time matrix equations used by the LQR stage:
// the stabilizing DARE solution, discrete Lyapunov solves in both
// orientations, and the spectral radius.
//
// Sizes of interest are n <= 10, so the Lyapunov equations are solved by
// Kronecker vectorization and LU. That is O(n^6) but matches the operator
// exactly and is far below any other cost in the pipeline.

#include <Eigen/Dense>

namespace trajinf {

struct DareOptions {
  double tol_abs = 1e-12;
  double tol_rel = 1e-10;
  int max_newton_iterations = 100;
  // Riccati value iterations allowed while searching for a stabilizing gain
  // (open-loop unstable A) and in the fixed-point fallback.
  int max_fixed_point_iterations = 20000;
};

struct DareSolution {
  Eigen::MatrixXd P;     // stabilizing solution, n_x x n_x
  Eigen::MatrixXd K;     // (R + B'PB)^{-1} B'PA, n_u x n_x
  Eigen::MatrixXd A_cl;  // A - BK
  Eigen::MatrixXd M;     // R + B'PB
  double residual_norm = 0.0;  // Frobenius norm of the DARE residual at P
  double rho_cl = 0.0;
  int iterations = 0;
  bool used_fallback = false;
};

// Margin below which a closed loop counts as Schur stable for the solvers.
inline constexpr double kStabilityMargin = 1e-8;

/// Stabilizing solution of P = Q + A'PA - A'PB(R+B'PB)^{-1}B'PA.
///
/// Newton-Kleinman iteration. When rho(A) < 1 it starts from K = 0, otherwise
/// from the first stabilizing gain produced by Riccati value iteration. If a
/// Newton step loses stability the solver falls back to fixed-point Riccati
/// iteration from the best iterate so far.
///
/// Throws Error{BadInput} on dimension mismatch or R not positive definite,
/// Error{NonStabilizable} when no stabilizing gain is found, and
/// Error{NoConvergence} when the residual tolerance is not met.
DareSolution solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                        const DareOptions& options = {});

// P - Q - A'PA + A'PB(R+B'PB)^{-1}B'PA
Eigen::MatrixXd dare_residual(const Eigen::MatrixXd& A,
                              const Eigen::MatrixXd& B,
                              const Eigen::MatrixXd& Q,
                              const Eigen::MatrixXd& R,
                              const Eigen::MatrixXd& P);

/// Solves X - A_cl' X A_cl = C. Requires rho(A_cl) < 1 - kStabilityMargin.
Eigen::MatrixXd solve_dlyap_t(const Eigen::MatrixXd& A_cl,
                              const Eigen::MatrixXd& C);

/// Solves L - A_cl L A_cl' = C (the adjoint orientation).
Eigen::MatrixXd solve_dlyap_adj(const Eigen::MatrixXd& A_cl,
                                const Eigen::MatrixXd& C);

// T(X) = X - A_cl' X A_cl and its Frobenius adjoint T*(Y) = Y - A_cl Y A_cl'.
Eigen::MatrixXd lyapunov_operator(const Eigen::MatrixXd& A_cl,
                                  const Eigen::MatrixXd& X);
Eigen::MatrixXd lyapunov_operator_adjoint(const Eigen::MatrixXd& A_cl,
                                          const Eigen::MatrixXd& Y);

// Matrix of T acting on column-major vec(X): I - kron(A_cl', A_cl').
Eigen::MatrixXd lyapunov_kronecker(const Eigen::MatrixXd& A_cl);

Eigen::MatrixXd kron(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V);

double spectral_radius(const Eigen::MatrixXd& M);

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& X) {
  return 0.5 * (X + X.transpose());
}

}  // namespace trajinf
