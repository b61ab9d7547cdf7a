#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library's solvers: each oracle takes a different numerical route
// (root bracketing, series summation, explicit stacking, finite differences).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "trajinf/ident.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd gaussian(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd M(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) M(i, j) = n(rng);
  }
  return M;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline MatrixXd random_symmetric(std::mt19937_64& rng, int n) {
  const MatrixXd X = gaussian(rng, n, n);
  return 0.5 * (X + X.transpose());
}

inline MatrixXd random_spd(std::mt19937_64& rng, int n, double shift = 0.5) {
  const MatrixXd X = gaussian(rng, n, n);
  return X * X.transpose() / n + shift * MatrixXd::Identity(n, n);
}

// Spectral radius by power iteration on A'A is not the spectral radius; use
// the complex eigenvalues of Eigen only for *rescaling* test inputs.
inline double rho_for_scaling(const MatrixXd& A) {
  return A.eigenvalues().cwiseAbs().maxCoeff();
}

// Random matrix with spectral radius exactly `rho`.
inline MatrixXd random_stable(std::mt19937_64& rng, int n, double rho) {
  MatrixXd A = gaussian(rng, n, n);
  const double r = rho_for_scaling(A);
  return r > 0.0 ? MatrixXd(A * (rho / r)) : A;
}

// Positive root of the scalar DARE p = q + a^2 p - a^2 b^2 p^2 / (r + b^2 p)
// by bisection.
inline double scalar_dare_bisection(double a, double b, double q, double r) {
  auto f = [&](double p) {
    return q + a * a * p - a * a * b * b * p * p / (r + b * b * p) - p;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (f(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// sum_j (A')^j C A^j, truncated when the terms drop below 1e-18 relative.
inline MatrixXd lyapunov_series(const MatrixXd& A, const MatrixXd& C) {
  MatrixXd X = C;
  MatrixXd term = C;
  for (int j = 0; j < 100000; ++j) {
    term = A.transpose() * term * A;
    X += term;
    if (term.norm() <= 1e-18 * X.norm()) break;
  }
  return X;
}

// Reachability-type sum_j A^j C (A')^j.
inline MatrixXd gramian_series(const MatrixXd& A, const MatrixXd& C) {
  return lyapunov_series(A.transpose(), C);
}

// Characteristic polynomial coefficients (monic, highest degree first) by
// the Faddeev-LeVerrier recursion.
inline std::vector<double> characteristic_polynomial(const MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  std::vector<double> c(n + 1, 0.0);
  c[0] = 1.0;
  MatrixXd M = MatrixXd::Zero(n, n);
  const MatrixXd I = MatrixXd::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    M = A * M + c[k - 1] * I;
    c[k] = -(A * M).trace() / k;
  }
  return c;
}

// All roots of a monic polynomial by Durand-Kerner iteration.
inline std::vector<std::complex<double>> polynomial_roots(
    const std::vector<double>& c) {
  using C = std::complex<double>;
  const int n = static_cast<int>(c.size()) - 1;
  double bound = 0.0;
  for (int k = 1; k <= n; ++k) bound = std::max(bound, std::abs(c[k]));
  bound += 1.0;
  std::vector<C> z(n);
  for (int i = 0; i < n; ++i) {
    z[i] = std::polar(bound, 2.0 * M_PI * i / n + 0.4);
  }
  auto eval = [&](C x) {
    C v = 1.0;
    for (int k = 1; k <= n; ++k) v = v * x + c[k];
    return v;
  };
  for (int it = 0; it < 5000; ++it) {
    double change = 0.0;
    for (int i = 0; i < n; ++i) {
      C den = 1.0;
      for (int j = 0; j < n; ++j) {
        if (j != i) den *= z[i] - z[j];
      }
      const C step = eval(z[i]) / den;
      z[i] -= step;
      change = std::max(change, std::abs(step));
    }
    if (change < 1e-15 * bound) break;
  }
  // Newton polish on each root.
  for (auto& r : z) {
    for (int it = 0; it < 5; ++it) {
      C v = 1.0, d = 0.0;
      for (int k = 1; k <= n; ++k) {
        d = d * r + v;
        v = v * r + c[k];
      }
      if (std::abs(d) > 0.0) r -= v / d;
    }
  }
  return z;
}

inline double spectral_radius_polynomial(const MatrixXd& A) {
  double r = 0.0;
  for (const auto& z : polynomial_roots(characteristic_polynomial(A))) {
    r = std::max(r, std::abs(z));
  }
  return r;
}

// exp(M) by scaling and squaring of a long Taylor series.
inline MatrixXd expm_series(const MatrixXd& M) {
  int s = 0;
  double norm = M.lpNorm<Eigen::Infinity>();
  while (norm > 0.05) {
    norm /= 2.0;
    ++s;
  }
  const MatrixXd X = M / std::pow(2.0, s);
  const auto n = M.rows();
  MatrixXd E = MatrixXd::Identity(n, n);
  MatrixXd term = MatrixXd::Identity(n, n);
  for (int k = 1; k < 30; ++k) {
    term = term * X / double(k);
    E += term;
  }
  for (int i = 0; i < s; ++i) E = E * E;
  return E;
}

// Central difference of a scalar function along coordinate `i`.
inline double central_difference(const std::function<double(const VectorXd&)>& f,
                                 const VectorXd& x, int i, double h) {
  VectorXd xp = x, xm = x;
  xp(i) += h;
  xm(i) -= h;
  return (f(xp) - f(xm)) / (2.0 * h);
}

inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f,
                            const VectorXd& x, double h) {
  VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) g(i) = central_difference(f, x, i, h);
  return g;
}

// Hessian of a quadratic by second differences (exact up to rounding).
inline MatrixXd fd_hessian(const std::function<double(const VectorXd&)>& f,
                           const VectorXd& x, double h) {
  const auto p = x.size();
  MatrixXd H(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      VectorXd pp = x, pm = x, mp = x, mm = x;
      pp(i) += h; pp(j) += h;
      pm(i) += h; pm(j) -= h;
      mp(i) -= h; mp(j) += h;
      mm(i) -= h; mm(j) -= h;
      H(i, j) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
    }
  }
  return H;
}

// Explicit regressor for the row-stacked [A B] layout, written out entrywise.
inline MatrixXd stacked_regressor(const VectorXd& x, const VectorXd& u) {
  const int n_x = static_cast<int>(x.size());
  const int n_u = static_cast<int>(u.size());
  const int d = n_x + n_u;
  MatrixXd Phi = MatrixXd::Zero(n_x, n_x * d);
  for (int i = 0; i < n_x; ++i) {
    for (int j = 0; j < n_x; ++j) Phi(i, i * d + j) = x(j);
    for (int j = 0; j < n_u; ++j) Phi(i, i * d + n_x + j) = u(j);
  }
  return Phi;
}

// Retraining oracle: normal equations of the full stacked system solved by
// SVD, independent of the block-Cholesky path.
inline VectorXd ridge_normal_equations(const trajinf::Dataset& data,
                                       double lambda) {
  const int p = data.n_x * (data.n_x + data.n_u);
  MatrixXd H = 2.0 * lambda * MatrixXd::Identity(p, p);
  VectorXd b = VectorXd::Zero(p);
  for (const auto& tau : data.trajectories) {
    for (const auto& s : tau.transitions) {
      const MatrixXd Phi = stacked_regressor(s.x, s.u);
      H += 2.0 * Phi.transpose() * Phi;
      b += 2.0 * Phi.transpose() * s.x_plus;
    }
  }
  return H.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
}

inline double stacked_loss(const VectorXd& theta,
                           const trajinf::Trajectory& tau) {
  double L = 0.0;
  for (const auto& s : tau.transitions) {
    L += (s.x_plus - stacked_regressor(s.x, s.u) * theta).squaredNorm();
  }
  return L;
}

inline double stacked_loss(const VectorXd& theta, const trajinf::Dataset& d) {
  double L = 0.0;
  for (const auto& tau : d.trajectories) L += stacked_loss(theta, tau);
  return L;
}

// Random linear-system dataset: x+ = A x + B u + sigma w.
inline trajinf::Dataset random_dataset(std::mt19937_64& rng, int n_x, int n_u,
                                       int N, int T, double sigma,
                                       const MatrixXd& A, const MatrixXd& B,
                                       int first_id = 0) {
  trajinf::Dataset d;
  d.n_x = n_x;
  d.n_u = n_u;
  for (int k = 0; k < N; ++k) {
    trajinf::Trajectory tau;
    tau.id = first_id + k;
    VectorXd x = gaussian(rng, n_x, 1);
    for (int t = 0; t < T; ++t) {
      const VectorXd u = gaussian(rng, n_u, 1);
      const VectorXd xp = A * x + B * u + sigma * gaussian(rng, n_x, 1);
      tau.transitions.push_back({x, u, xp});
      x = xp;
    }
    d.trajectories.push_back(std::move(tau));
  }
  return d;
}

inline trajinf::Dataset random_dataset(std::mt19937_64& rng, int n_x, int n_u,
                                       int N, int T, double sigma) {
  const MatrixXd A = random_stable(rng, n_x, 0.8);
  const MatrixXd B = gaussian(rng, n_x, n_u);
  return random_dataset(rng, n_x, n_u, N, T, sigma, A, B);
}

// Pearson from the textbook two-pass formula.
inline double pearson(const std::vector<double>& a,
                      const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Average ranks by pairwise counting: rank = 1 + #less + (#equal - 1) / 2.
inline std::vector<double> brute_force_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) less += 1;
      if (w == v[i]) equal += 1;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

}  // namespace oracle
