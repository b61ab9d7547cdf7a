#include <chrono>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "trajinf/dare_sensitivity.hpp"
#include "trajinf/errors.hpp"
#include "trajinf/instrument.hpp"

using namespace trajinf;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// R(P, theta) written out independently of the library.
MatrixXd residual(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                  const MatrixXd& R, const MatrixXd& P) {
  const MatrixXd M = R + B.transpose() * P * B;
  return P - Q - A.transpose() * P * A +
         A.transpose() * P * B * M.inverse() * B.transpose() * P * A;
}

struct Instance {
  ParamVector theta;
  MatrixXd Q, R, Sigma0;
};

Instance random_instance(std::mt19937_64& rng, int n_x, int n_u) {
  const MatrixXd A = oracle::random_stable(rng, n_x, oracle::uniform(rng, 0.5, 1.1));
  const MatrixXd B = oracle::gaussian(rng, n_x, n_u);
  return {ParamVector::from_matrices(A, B), oracle::random_spd(rng, n_x),
          oracle::random_spd(rng, n_u), oracle::random_spd(rng, n_x, 0.1)};
}

double J_at(const Instance& in, const VectorXd& theta) {
  return lqr_cost(ParamVector(in.theta.n_x(), in.theta.n_u(), theta), in.Q,
                  in.R, in.Sigma0);
}

double max_rel(const VectorXd& a, const VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_SUITE("design_lqr") {
  TEST_CASE("zero dynamics with full actuation") {
    const MatrixXd I = MatrixXd::Identity(2, 2);
    const LqrDesign d = design_lqr(
        ParamVector::from_matrices(MatrixXd::Zero(2, 2), I), I, I, I);
    CHECK((d.P() - I).norm() < 1e-14);
    CHECK(d.K().norm() < 1e-14);
    CHECK(d.A_cl().norm() < 1e-14);
    CHECK((d.Lambda() - I).norm() < 1e-14);
    CHECK(d.cost() == doctest::Approx(2.0).epsilon(1e-14));
  }

  TEST_CASE("unactuated stable plant costs Tr(X Sigma0)") {
    std::mt19937_64 rng(1);
    const MatrixXd A = oracle::random_stable(rng, 3, 0.7);
    const MatrixXd Q = oracle::random_spd(rng, 3);
    const MatrixXd S = oracle::random_spd(rng, 3);
    const LqrDesign d = design_lqr(
        ParamVector::from_matrices(A, MatrixXd::Zero(3, 1)), Q,
        MatrixXd::Identity(1, 1), S);
    const double ref = (oracle::lyapunov_series(A, Q) * S).trace();
    CHECK(std::abs(d.cost() - ref) <= 1e-10 * ref);
  }

  TEST_CASE("scalar system") {
    const double p = oracle::scalar_dare_bisection(0.9, 1.0, 1.0, 0.1);
    const MatrixXd one = MatrixXd::Constant(1, 1, 1.0);
    const LqrDesign d =
        design_lqr(ParamVector(1, 1, (VectorXd(2) << 0.9, 1.0).finished()), one,
                   0.1 * one, 2.5 * one);
    CHECK(d.cost() == doctest::Approx(2.5 * p).epsilon(1e-12));
  }

  TEST_CASE("adjoint Gramian invariant") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
      const Instance in = random_instance(rng, 2 + trial % 5, 1 + trial % 2);
      const LqrDesign d = design_lqr(in.theta, in.Q, in.R, in.Sigma0);
      const MatrixXd res =
          d.Lambda() - d.A_cl() * d.Lambda() * d.A_cl().transpose() - in.Sigma0;
      CHECK(res.norm() <= 1e-10 * d.Lambda().norm());
      CHECK(d.Lambda().selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() >=
            -1e-12);
    }
  }

  TEST_CASE("unstabilizable model is an assumption failure") {
    MatrixXd A(2, 2);
    A << 1.2, 0.0, 0.0, 0.3;
    const MatrixXd B = (MatrixXd(2, 1) << 0.0, 1.0).finished();
    const MatrixXd I = MatrixXd::Identity(2, 2);
    try {
      design_lqr(ParamVector::from_matrices(A, B), I, MatrixXd::Identity(1, 1), I);
      FAIL("expected a failure");
    } catch (const Error& e) {
      CHECK(exit_code_for(e.kind()) == 5);
    }
  }

  TEST_CASE("closed-loop form uses K' R K") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const Instance in = random_instance(rng, 2 + trial % 5, 1 + trial % 3);
      const LqrDesign d = design_lqr(in.theta, in.Q, in.R, in.Sigma0);
      const MatrixXd rhs = in.Q + d.A_cl().transpose() * d.P() * d.A_cl() +
                           d.K().transpose() * in.R * d.K();
      CHECK((d.P() - rhs).norm() <= 1e-10 * d.P().norm());
    }
  }
}

TEST_SUITE("residual derivatives") {
  TEST_CASE("Frechet derivative") {
    std::mt19937_64 rng(4);
    const Instance in = random_instance(rng, 3, 2);
    const LqrDesign d = design_lqr(in.theta, in.Q, in.R, in.Sigma0);
    const MatrixXd dP = oracle::random_symmetric(rng, 3);
    CHECK((frechet_T(MatrixXd::Zero(3, 3), dP) - dP).norm() == 0.0);
    CHECK(frechet_T(d.A_cl(), MatrixXd::Zero(3, 3)).norm() == 0.0);
    double previous = 1e300;
    for (double eps : {1e-3, 1e-4, 1e-5}) {
      const MatrixXd fd = (residual(d.A(), d.B(), in.Q, in.R, d.P() + eps * dP) -
                           residual(d.A(), d.B(), in.Q, in.R, d.P())) / eps;
      const double err = (fd - frechet_T(d.A_cl(), dP)).norm();
      CHECK(err < previous);  // O(eps) decay
      previous = err;
    }
    CHECK(previous <= 1e-4 * dP.norm());
  }

  TEST_CASE("key expansion identity holds for arbitrary K") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + trial % 8, m = 1 + trial % 3;
      const MatrixXd A = oracle::gaussian(rng, n, n);
      const MatrixXd B = oracle::gaussian(rng, n, m);
      const MatrixXd K = oracle::gaussian(rng, m, n);
      const MatrixXd dP = oracle::random_symmetric(rng, n);
      const MatrixXd Acl = A - B * K;
      const MatrixXd lhs = A.transpose() * dP * B * K +
                           K.transpose() * B.transpose() * dP * A -
                           K.transpose() * B.transpose() * dP * B * K;
      const MatrixXd rhs = A.transpose() * dP * A - Acl.transpose() * dP * Acl;
      CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, lhs.norm()));
    }
  }

  TEST_CASE("compact derivative against finite differences with P frozen") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 5; ++trial) {
      const Instance in = random_instance(rng, 2 + trial, 1 + trial % 2);
      const LqrDesign d = design_lqr(in.theta, in.Q, in.R, in.Sigma0);
      const int n_x = d.n_x(), n_u = d.n_u();
      for (int m = 0; m < d.p(); ++m) {
        const double h = 1e-6;
        VectorXd tp = in.theta.values(), tm = tp;
        tp(m) += h;
        tm(m) -= h;
        const ParamVector P1(n_x, n_u, tp), P2(n_x, n_u, tm);
        const MatrixXd fd = (residual(P1.A(), P1.B(), in.Q, in.R, d.P()) -
                             residual(P2.A(), P2.B(), in.Q, in.R, d.P())) /
                            (2 * h);
        const MatrixXd got = dresidual_dtheta(d, m);
        CHECK((got - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
        CHECK((got - got.transpose()).norm() == 0.0);
      }
    }
  }

  TEST_CASE("B coordinates are cost-invisible at K = 0") {
    // Zero cost weight gives P = 0 and K = 0.
    std::mt19937_64 rng(7);
    const MatrixXd A = oracle::random_stable(rng, 3, 0.6);
    const MatrixXd B = oracle::gaussian(rng, 3, 2);
    const LqrDesign d = design_lqr(ParamVector::from_matrices(A, B),
                                   MatrixXd::Zero(3, 3), MatrixXd::Identity(2, 2),
                                   MatrixXd::Identity(3, 3));
    CHECK(d.K().norm() == 0.0);
    for (int m = 0; m < d.p(); ++m) {
      CHECK(dresidual_dtheta(d, m).norm() == 0.0);  // P = 0 as well
    }
    // Nonzero P but K forced to zero through B = 0: B-coordinates vanish.
    const LqrDesign d2 = design_lqr(
        ParamVector::from_matrices(A, MatrixXd::Zero(3, 2)),
        MatrixXd::Identity(3, 3), MatrixXd::Identity(2, 2),
        MatrixXd::Identity(3, 3));
    for (int i = 0; i < 3; ++i) {
      for (int j = 3; j < 5; ++j) {
        CHECK(dresidual_dtheta(d2, i * 5 + j).norm() == 0.0);
      }
    }
  }

  TEST_CASE("expanded five-term form: agrees on A coordinates only") {
    // The literal five-term expansion double counts the B-direction terms;
    // for B coordinates it equals 2 * compact - K' Bm' P Bm K instead.
    std::mt19937_64 rng(8);
    const Instance in = random_instance(rng, 3, 2);
    const LqrDesign d = design_lqr(in.theta, in.Q, in.R, in.Sigma0);
    const int w = d.n_x() + d.n_u();
    for (int m = 0; m < d.p(); ++m) {
      const MatrixXd compact = dresidual_dtheta(d, m);
      const MatrixXd expanded = dresidual_dtheta_expanded(d, m);
      if (m % w < d.n_x()) {
        CHECK((compact - expanded).norm() <= 1e-12 * std::max(1.0, compact.norm()));
      } else {
        MatrixXd Bm = MatrixXd::Zero(d.n_x(), d.n_u());
        Bm(m / w, m % w - d.n_x()) = 1.0;
        const MatrixXd predicted =
            2.0 * compact -
            d.K().transpose() * Bm.transpose() * d.P() * Bm * d.K();
        CHECK((expanded - predicted).norm() <= 1e-12 * std::max(1.0, compact.norm()));
        CHECK((compact - expanded).norm() > 1e-6);
      }
    }
  }

  TEST_CASE("coordinate range is checked") {
    const MatrixXd I = MatrixXd::Identity(2, 2);
    const LqrDesign d =
        design_lqr(ParamVector::from_matrices(0.5 * I, I), I, I, I);
    CHECK_THROWS_AS(dresidual_dtheta(d, -1), Error);
    CHECK_THROWS_AS(dresidual_dtheta(d, d.p()), Error);
  }
}

TEST_SUITE("cost gradient") {
  TEST_CASE("scalar sensitivities match the implicit-function derivative") {
    const double a = 0.9, b = 1.0, q = 1.0, r = 0.1;
    const double p = oracle::scalar_dare_bisection(a, b, q, r);
    const double s = r + b * b * p;
    const double f_p = a * a - a * a * b * b * (2 * p * s - b * b * p * p) / (s * s) - 1.0;
    const double f_a = 2 * a * p - 2 * a * b * b * p * p / s;
    const double f_b = -a * a * p * p * 2 * b * r / (s * s);
    const MatrixXd one = MatrixXd::Constant(1, 1, 1.0);
    const LqrDesign d = design_lqr(ParamVector(1, 1, (VectorXd(2) << a, b).finished()),
                                   q * one, r * one, one);
    CHECK(forward_sensitivity(d, 0)(0, 0) == doctest::Approx(-f_a / f_p).epsilon(1e-10));
    CHECK(forward_sensitivity(d, 1)(0, 0) == doctest::Approx(-f_b / f_p).epsilon(1e-10));
    const VectorXd g = grad_J_adjoint(d).grad;
    CHECK(g(0) == doctest::Approx(-f_a / f_p).epsilon(1e-10));
    CHECK(g(1) == doctest::Approx(-f_b / f_p).epsilon(1e-10));
  }

  TEST_CASE("zero Sigma0 gives zero gradient") {
    std::mt19937_64 rng(9);
    const Instance in = random_instance(rng, 3, 2);
    const LqrDesign d = design_lqr(in.theta, in.Q, in.R, MatrixXd::Zero(3, 3));
    CHECK(d.Lambda().norm() == 0.0);
    CHECK(grad_J_adjoint(d).grad.norm() == 0.0);
    CHECK(grad_J_forward(d).grad.norm() == 0.0);
  }

  TEST_CASE("zero closed loop gives zero gradient") {
    const MatrixXd I = MatrixXd::Identity(2, 2);
    const LqrDesign d =
        design_lqr(ParamVector::from_matrices(MatrixXd::Zero(2, 2), I), I, I, I);
    CHECK((d.Lambda() - I).norm() < 1e-15);
    CHECK(grad_J_adjoint(d).grad.norm() < 1e-15);
    CHECK(grad_J_forward(d).grad.norm() < 1e-15);
  }

  TEST_CASE("adjoint, dense adjoint, forward and finite differences agree") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 20; ++trial) {
      const Instance in = random_instance(rng, 2 + trial % 5, 1 + trial % 3);
      const LqrDesign d = design_lqr(in.theta, in.Q, in.R, in.Sigma0);
      const VectorXd adj = grad_J_adjoint(d).grad;
      CHECK(max_rel(grad_J_adjoint_dense(d).grad, adj) <= 1e-12);
      CHECK(max_rel(grad_J_forward(d).grad, adj) <= 1e-9);
      auto J = [&](const VectorXd& t) { return J_at(in, t); };
      CHECK(max_rel(oracle::fd_gradient(J, in.theta.values(), 1e-5), adj) <= 1e-4);
      for (int m = 0; m < d.p(); m += 3) {
        CHECK((forward_sensitivity(d, m) * in.Sigma0).trace() ==
              doctest::Approx(adj(m)).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("adjoint uses one adjoint solve and p trace assemblies") {
    std::mt19937_64 rng(11);
    const Instance in = random_instance(rng, 4, 2);
    instrument::ScopedCounters counters;
    const LqrDesign d = design_lqr(in.theta, in.Q, in.R, in.Sigma0);
    grad_J(d, GradientMethod::Adjoint);
    CHECK(counters.counts().adjoint_lyapunov_solves == 1);
    CHECK(counters.counts().trace_assemblies == d.p());
    const auto before = counters.counts().forward_lyapunov_solves;
    grad_J(d, GradientMethod::Forward);
    CHECK(counters.counts().forward_lyapunov_solves - before == d.p());
  }

  TEST_CASE("adjoint is cheaper than forward at n_x = 10, p = 140") {
    std::mt19937_64 rng(12);
    const Instance in = random_instance(rng, 10, 4);
    const LqrDesign d = design_lqr(in.theta, in.Q, in.R, in.Sigma0);
    REQUIRE(d.p() == 140);
    using clock = std::chrono::steady_clock;
    double t_adj = 0, t_fwd = 0;
    for (int run = 0; run < 20; ++run) {
      auto t0 = clock::now();
      const auto a = grad_J_adjoint(d);
      auto t1 = clock::now();
      const auto f = grad_J_forward(d);
      auto t2 = clock::now();
      CHECK(a.grad.size() == f.grad.size());
      t_adj += std::chrono::duration<double>(t1 - t0).count();
      t_fwd += std::chrono::duration<double>(t2 - t1).count();
    }
    CHECK(t_adj <= t_fwd);
  }
}

TEST_SUITE("IF2") {
  TEST_CASE("definition and degenerate cases") {
    std::mt19937_64 rng(13);
    const Dataset data = oracle::random_dataset(rng, 2, 1, 5, 10, 0.1);
    const RidgeFit fit = fit_ridge(data, 1e-4);
    const MatrixXd I = MatrixXd::Identity(2, 2);
    const LqrDesign d = design_lqr(fit.theta(), I, 0.1 * MatrixXd::Identity(1, 1), I);
    const CostGradient g = grad_J_adjoint(d);
    for (const auto& tau : data.trajectories) {
      const double ref =
          traj_gradient(fit, tau).dot(fit.hessian().ldlt().solve(g.grad));
      CHECK(if2_score(fit, tau, g) == doctest::Approx(ref).epsilon(1e-10));
      CHECK(if2_score(fit, tau, {VectorXd::Zero(fit.p()), GradientMethod::Adjoint}) == 0.0);
    }
    Trajectory exact;
    exact.transitions.push_back({VectorXd::Ones(2), VectorXd::Ones(1),
                                 fit.theta().A() * VectorXd::Ones(2) +
                                     fit.theta().B() * VectorXd::Ones(1)});
    CHECK(std::abs(if2_score(fit, exact, g)) < 1e-12);
  }
}
