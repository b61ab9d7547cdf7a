#include "trajinf/matrix_equations.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "trajinf/errors.hpp"
#include "trajinf/instrument.hpp"

namespace trajinf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr const char* kDareStage = "solve_dare";
constexpr const char* kLyapStage = "solve_dlyap";

void require_square(const MatrixXd& M, const char* name, const char* stage) {
  if (M.rows() < 1 || M.rows() != M.cols()) {
    throw Error(ErrorKind::BadInput, stage,
                std::string(name) + " must be square and non-empty");
  }
  if (!M.allFinite()) {
    throw Error(ErrorKind::BadInput, stage,
                std::string(name) + " has non-finite entries");
  }
}

// K = (R + B'PB)^{-1} B'PA
MatrixXd lqr_gain(const MatrixXd& A, const MatrixXd& B, const MatrixXd& R,
                  const MatrixXd& P) {
  const MatrixXd M = R + B.transpose() * P * B;
  return M.llt().solve(B.transpose() * P * A);
}

MatrixXd riccati_step(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                      const MatrixXd& R, const MatrixXd& P) {
  const MatrixXd BtPA = B.transpose() * P * A;
  const MatrixXd M = R + B.transpose() * P * B;
  return symmetrized(Q + A.transpose() * P * A -
                     BtPA.transpose() * M.llt().solve(BtPA));
}

// Lyapunov solve through the vectorized operator. `op` is the n^2 x n^2 matrix
// of the linear map; the result is symmetrized.
MatrixXd solve_vectorized(const MatrixXd& op, const MatrixXd& C) {
  const Eigen::Index n = C.rows();
  const Eigen::PartialPivLU<MatrixXd> lu(op);
  if (!(lu.rcond() > 1e3 * std::numeric_limits<double>::epsilon())) {
    throw Error(ErrorKind::SingularOperator, kLyapStage,
                "Kronecker system is numerically singular (rcond=" +
                    std::to_string(lu.rcond()) + ")");
  }
  const VectorXd x =
      lu.solve(Eigen::Map<const VectorXd>(C.data(), n * n));
  return symmetrized(Eigen::Map<const MatrixXd>(x.data(), n, n));
}

void check_lyapunov_inputs(const MatrixXd& A_cl, const MatrixXd& C) {
  require_square(A_cl, "A_cl", kLyapStage);
  require_square(C, "C", kLyapStage);
  if (C.rows() != A_cl.rows()) {
    throw Error(ErrorKind::BadInput, kLyapStage, "dimension mismatch");
  }
  const double rho = spectral_radius(A_cl);
  if (rho >= 1.0 - kStabilityMargin) {
    throw Error(ErrorKind::Unstable, kLyapStage,
                "closed loop is not Schur stable (rho=" + std::to_string(rho) +
                    ")");
  }
}

}  // namespace

MatrixXd kron(const MatrixXd& U, const MatrixXd& V) {
  MatrixXd out(U.rows() * V.rows(), U.cols() * V.cols());
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    for (Eigen::Index j = 0; j < U.cols(); ++j) {
      out.block(i * V.rows(), j * V.cols(), V.rows(), V.cols()) = U(i, j) * V;
    }
  }
  return out;
}

double spectral_radius(const MatrixXd& M) {
  require_square(M, "M", "spectral_radius");
  if (M.rows() == 1) return std::abs(M(0, 0));
  const Eigen::EigenSolver<MatrixXd> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::EigenFailure, "spectral_radius",
                "eigenvalue iteration did not converge");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXd lyapunov_operator(const MatrixXd& A_cl, const MatrixXd& X) {
  return X - A_cl.transpose() * X * A_cl;
}

MatrixXd lyapunov_operator_adjoint(const MatrixXd& A_cl, const MatrixXd& Y) {
  return Y - A_cl * Y * A_cl.transpose();
}

MatrixXd lyapunov_kronecker(const MatrixXd& A_cl) {
  const Eigen::Index n = A_cl.rows();
  const MatrixXd At = A_cl.transpose();
  return MatrixXd::Identity(n * n, n * n) - kron(At, At);
}

MatrixXd solve_dlyap_t(const MatrixXd& A_cl, const MatrixXd& C) {
  check_lyapunov_inputs(A_cl, C);
  instrument::count_forward_lyapunov_solve();
  return solve_vectorized(lyapunov_kronecker(A_cl), symmetrized(C));
}

MatrixXd solve_dlyap_adj(const MatrixXd& A_cl, const MatrixXd& C) {
  check_lyapunov_inputs(A_cl, C);
  instrument::count_adjoint_lyapunov_solve();
  const Eigen::Index n = A_cl.rows();
  const MatrixXd op = MatrixXd::Identity(n * n, n * n) - kron(A_cl, A_cl);
  return solve_vectorized(op, symmetrized(C));
}

MatrixXd dare_residual(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                       const MatrixXd& R, const MatrixXd& P) {
  const MatrixXd BtPA = B.transpose() * P * A;
  const MatrixXd M = R + B.transpose() * P * B;
  return P - Q - A.transpose() * P * A +
         BtPA.transpose() * M.llt().solve(BtPA);
}

DareSolution solve_dare(const MatrixXd& A, const MatrixXd& B,
                        const MatrixXd& Q_in, const MatrixXd& R_in,
                        const DareOptions& options) {
  require_square(A, "A", kDareStage);
  require_square(Q_in, "Q", kDareStage);
  require_square(R_in, "R", kDareStage);
  const Eigen::Index n = A.rows();
  if (B.rows() != n || B.cols() != R_in.rows() || Q_in.rows() != n) {
    throw Error(ErrorKind::BadInput, kDareStage, "dimension mismatch");
  }
  if (!B.allFinite()) {
    throw Error(ErrorKind::BadInput, kDareStage, "B has non-finite entries");
  }
  const MatrixXd Q = symmetrized(Q_in);
  const MatrixXd R = symmetrized(R_in);
  if (R.llt().info() != Eigen::Success) {
    throw Error(ErrorKind::BadInput, kDareStage,
                "R must be symmetric positive definite");
  }
  instrument::count_dare_solve();

  auto tolerance = [&](const MatrixXd& P) {
    return options.tol_abs + options.tol_rel * P.norm();
  };
  auto stable = [](const MatrixXd& Acl) {
    return spectral_radius(Acl) < 1.0 - kStabilityMargin;
  };

  DareSolution sol;
  int iterations = 0;

  // Initial stabilizing gain.
  MatrixXd K = MatrixXd::Zero(B.cols(), n);
  if (!stable(A)) {
    MatrixXd P = Q;
    bool found = false;
    for (int it = 0; it < options.max_fixed_point_iterations; ++it) {
      P = riccati_step(A, B, Q, R, P);
      ++iterations;
      K = lqr_gain(A, B, R, P);
      if (!K.allFinite()) break;
      if (stable(A - B * K)) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error(ErrorKind::NonStabilizable, kDareStage,
                  "no stabilizing gain found by Riccati value iteration");
    }
  }

  // Newton-Kleinman. The first step is the Kleinman Lyapunov solve; later steps
  // solve for the correction T(dP) = -R(P), which is the same iteration but
  // keeps the right-hand side small near convergence.
  MatrixXd P;
  bool newton_ok = true;
  try {
    P = solve_dlyap_t(A - B * K, Q + K.transpose() * R * K);
    ++iterations;
  } catch (const Error&) {
    newton_ok = false;
  }

  MatrixXd best_P = P;
  double best_res = std::numeric_limits<double>::infinity();
  if (newton_ok) {
    int stalled = 0;
    for (int it = 0; it < options.max_newton_iterations; ++it) {
      const MatrixXd res = dare_residual(A, B, Q, R, P);
      const double res_norm = res.norm();
      if (!std::isfinite(res_norm)) {
        newton_ok = false;
        break;
      }
      if (res_norm < best_res) {
        best_res = res_norm;
        best_P = P;
        stalled = 0;
      } else if (++stalled >= 3) {
        break;
      }
      if (res_norm <= tolerance(P)) break;
      K = lqr_gain(A, B, R, P);
      const MatrixXd Acl = A - B * K;
      try {
        P = symmetrized(P + solve_dlyap_t(Acl, -res));
      } catch (const Error&) {
        newton_ok = false;
        break;
      }
      ++iterations;
    }
  }

  P = best_P;
  if (!newton_ok || !(best_res <= tolerance(P))) {
    // Fixed-point fallback from the best iterate (or from Q if Newton never
    // produced one).
    if (P.size() == 0 || !P.allFinite()) P = Q;
    sol.used_fallback = true;
    for (int it = 0; it < options.max_fixed_point_iterations; ++it) {
      const double res_norm = dare_residual(A, B, Q, R, P).norm();
      if (res_norm <= tolerance(P)) break;
      P = riccati_step(A, B, Q, R, P);
      ++iterations;
    }
  }

  sol.P = symmetrized(P);
  sol.M = symmetrized(R + B.transpose() * sol.P * B);
  sol.K = sol.M.llt().solve(B.transpose() * sol.P * A);
  sol.A_cl = A - B * sol.K;
  sol.residual_norm = dare_residual(A, B, Q, R, sol.P).norm();
  sol.rho_cl = spectral_radius(sol.A_cl);
  sol.iterations = iterations;

  if (!std::isfinite(sol.residual_norm) || !(sol.rho_cl < 1.0)) {
    throw Error(ErrorKind::NonStabilizable, kDareStage,
                "iteration did not produce a stabilizing solution (rho_cl=" +
                    std::to_string(sol.rho_cl) + ")");
  }
  if (sol.residual_norm > tolerance(sol.P)) {
    throw Error(ErrorKind::NoConvergence, kDareStage,
                "residual " + std::to_string(sol.residual_norm) +
                    " above tolerance after " + std::to_string(iterations) +
                    " iterations");
  }
  return sol;
}

}  // namespace trajinf
