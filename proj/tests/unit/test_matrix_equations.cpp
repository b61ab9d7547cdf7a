#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "trajinf/errors.hpp"
#include "trajinf/instrument.hpp"
#include "trajinf/matrix_equations.hpp"

using namespace trajinf;
using Eigen::MatrixXd;

namespace {

double rel_dare_residual(const MatrixXd& A, const MatrixXd& B,
                         const MatrixXd& Q, const MatrixXd& R,
                         const MatrixXd& P) {
  return dare_residual(A, B, Q, R, P).norm() / std::max(1.0, P.norm());
}

}  // namespace

TEST_SUITE("dare") {
  TEST_CASE("zero dynamics reduce the DARE to P = Q") {
    const MatrixXd A = MatrixXd::Zero(2, 2);
    const MatrixXd B = (MatrixXd(2, 1) << 1.0, -2.0).finished();
    const MatrixXd I = MatrixXd::Identity(2, 2);
    const DareSolution s = solve_dare(A, B, I, MatrixXd::Identity(1, 1));
    CHECK((s.P - I).norm() < 1e-14);
    CHECK(s.K.norm() < 1e-14);
    CHECK(s.A_cl.norm() < 1e-14);
    CHECK(s.rho_cl < 1e-14);
  }

  TEST_CASE("without actuation the DARE is a Lyapunov equation") {
    std::mt19937_64 rng(11);
    const MatrixXd A = oracle::random_stable(rng, 3, 0.8);
    const MatrixXd I = MatrixXd::Identity(3, 3);
    const DareSolution s =
        solve_dare(A, MatrixXd::Zero(3, 1), I, MatrixXd::Identity(1, 1));
    CHECK((s.P - oracle::lyapunov_series(A, I)).norm() < 1e-10 * s.P.norm());
  }

  TEST_CASE("scalar DARE matches bisection on the scalar quadratic") {
    const double p_ref = oracle::scalar_dare_bisection(0.9, 1.0, 1.0, 0.1);
    const DareSolution s =
        solve_dare(MatrixXd::Constant(1, 1, 0.9), MatrixXd::Constant(1, 1, 1.0),
                   MatrixXd::Constant(1, 1, 1.0), MatrixXd::Constant(1, 1, 0.1));
    CHECK(std::abs(s.P(0, 0) - p_ref) < 1e-12);
    CHECK(std::abs(s.K(0, 0) - 0.9 * p_ref / (0.1 + p_ref)) < 1e-12);
    CHECK(std::abs(s.M(0, 0) - (0.1 + p_ref)) < 1e-12);
  }

  TEST_CASE("open-loop unstable plants get a stabilizing solution") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 1 + trial % 6;
      const MatrixXd A = oracle::random_stable(rng, n, 1.3);
      const MatrixXd B = oracle::gaussian(rng, n, 2);
      const MatrixXd Q = MatrixXd::Identity(n, n);
      const MatrixXd R = 0.1 * MatrixXd::Identity(2, 2);
      const DareSolution s = solve_dare(A, B, Q, R);
      CHECK(s.rho_cl < 1.0);
      CHECK(rel_dare_residual(A, B, Q, R, s.P) <= 1e-10);
      CHECK((s.P - s.P.transpose()).norm() == doctest::Approx(0.0));
      CHECK(s.P.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() >
            -1e-10);
    }
  }

  TEST_CASE("unstabilizable pairs are rejected") {
    // The unstable mode 1.5 is not reachable from the input.
    MatrixXd A(2, 2);
    A << 1.5, 0.0, 0.0, 0.5;
    const MatrixXd B = (MatrixXd(2, 1) << 0.0, 1.0).finished();
    const MatrixXd I = MatrixXd::Identity(2, 2);
    try {
      solve_dare(A, B, I, MatrixXd::Identity(1, 1));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK((e.kind() == ErrorKind::NonStabilizable ||
             e.kind() == ErrorKind::NoConvergence));
    }
  }

  TEST_CASE("bad inputs are rejected") {
    const MatrixXd I = MatrixXd::Identity(2, 2);
    const MatrixXd B = MatrixXd::Ones(2, 1);
    CHECK_THROWS_AS(solve_dare(I, B, I, -MatrixXd::Identity(1, 1)), Error);
    CHECK_THROWS_AS(solve_dare(I, MatrixXd::Ones(3, 1), I,
                               MatrixXd::Identity(1, 1)),
                    Error);
    try {
      solve_dare(I, B, I, MatrixXd::Zero(1, 1));
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BadInput);
    }
  }

  TEST_CASE("every DARE solve is counted") {
    instrument::ScopedCounters counters;
    const MatrixXd I = MatrixXd::Identity(2, 2);
    solve_dare(0.5 * I, I, I, I);
    CHECK(counters.counts().dare_solves == 1);
  }

  TEST_CASE("property: relative residual below 1e-10 on random systems") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + trial % 10;
      const int m = 1 + trial % 3;
      const MatrixXd A = oracle::random_stable(rng, n, oracle::uniform(rng, 0.1, 1.2));
      const MatrixXd B = oracle::gaussian(rng, n, m);
      const MatrixXd Q = oracle::random_spd(rng, n);
      const MatrixXd R = oracle::random_spd(rng, m);
      const DareSolution s = solve_dare(A, B, Q, R);
      CHECK(rel_dare_residual(A, B, Q, R, s.P) <= 1e-10);
      CHECK(s.rho_cl < 1.0);
    }
  }
}

TEST_SUITE("lyapunov") {
  TEST_CASE("zero closed loop makes the operator the identity") {
    std::mt19937_64 rng(1);
    const MatrixXd C = oracle::random_symmetric(rng, 3);
    const MatrixXd Z = MatrixXd::Zero(3, 3);
    CHECK((solve_dlyap_t(Z, C) - C).norm() < 1e-15);
    CHECK((solve_dlyap_adj(Z, C) - C).norm() < 1e-15);
  }

  TEST_CASE("scalar geometric series") {
    const MatrixXd x = solve_dlyap_t(MatrixXd::Constant(1, 1, 0.5),
                                     MatrixXd::Constant(1, 1, 1.0));
    CHECK(x(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  }

  TEST_CASE("forward orientation matches the series oracle") {
    std::mt19937_64 rng(3);
    const MatrixXd A = oracle::random_stable(rng, 3, 0.85);
    const MatrixXd I = MatrixXd::Identity(3, 3);
    const MatrixXd X = solve_dlyap_t(A, I);
    CHECK((X - oracle::lyapunov_series(A, I)).norm() <= 1e-10 * X.norm());
    CHECK((X - X.transpose()).norm() == 0.0);
  }

  TEST_CASE("adjoint orientation gives the reachability Gramian") {
    std::mt19937_64 rng(4);
    const MatrixXd A = oracle::random_stable(rng, 4, 0.9);
    const MatrixXd I = MatrixXd::Identity(4, 4);
    const MatrixXd L = solve_dlyap_adj(A, I);
    CHECK((L - oracle::gramian_series(A, I)).norm() <= 1e-10 * L.norm());
    CHECK((L - solve_dlyap_t(A.transpose(), I)).norm() <= 1e-13 * L.norm());
  }

  TEST_CASE("unstable closed loops are rejected") {
    const MatrixXd I = MatrixXd::Identity(2, 2);
    try {
      solve_dlyap_t(1.01 * I, I);
      FAIL("expected Unstable");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Unstable);
    }
    CHECK_THROWS_AS(solve_dlyap_adj(I, I), Error);
  }

  TEST_CASE("solves are counted per orientation") {
    instrument::ScopedCounters counters;
    const MatrixXd I = MatrixXd::Identity(2, 2);
    solve_dlyap_t(0.5 * I, I);
    solve_dlyap_adj(0.5 * I, I);
    solve_dlyap_adj(0.5 * I, I);
    CHECK(counters.counts().forward_lyapunov_solves == 1);
    CHECK(counters.counts().adjoint_lyapunov_solves == 2);
  }

  TEST_CASE("property: adjointness under the Frobenius inner product") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 1 + trial % 8;
      const MatrixXd A = oracle::random_stable(rng, n, 0.9);
      const MatrixXd X = oracle::random_symmetric(rng, n);
      const MatrixXd Y = oracle::random_symmetric(rng, n);
      const double lhs = (lyapunov_operator(A, X).array() * Y.array()).sum();
      const double rhs =
          (X.array() * lyapunov_operator_adjoint(A, Y).array()).sum();
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }

  TEST_CASE("property: Kronecker eigenvalues are 1 - conj(mu_i) mu_j") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 2 + trial % 4;
      const MatrixXd A = oracle::random_stable(rng, n, 0.9);
      const Eigen::VectorXcd mu = A.eigenvalues();
      std::vector<std::complex<double>> expected;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          expected.push_back(1.0 - std::conj(mu(i)) * mu(j));
        }
      }
      const Eigen::VectorXcd got = lyapunov_kronecker(A).eigenvalues();
      // Greedy matching: every expected value has a computed partner.
      std::vector<bool> used(got.size(), false);
      for (const auto& e : expected) {
        double best = 1e300;
        int at = -1;
        for (int k = 0; k < got.size(); ++k) {
          if (!used[k] && std::abs(got(k) - e) < best) {
            best = std::abs(got(k) - e);
            at = k;
          }
        }
        REQUIRE(at >= 0);
        used[at] = true;
        CHECK(best < 1e-9);
      }
    }
  }

  TEST_CASE("property: round trip on 100 random stable systems") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + trial % 10;
      const MatrixXd A = oracle::random_stable(rng, n, oracle::uniform(rng, 0.0, 0.97));
      const MatrixXd C = oracle::random_symmetric(rng, n);
      const MatrixXd X = solve_dlyap_t(A, C);
      CHECK((lyapunov_operator(A, X) - C).norm() <= 1e-10 * std::max(1.0, C.norm()));
      const MatrixXd L = solve_dlyap_adj(A, C);
      CHECK((lyapunov_operator_adjoint(A, L) - C).norm() <=
            1e-10 * std::max(1.0, C.norm()));
    }
  }
}

TEST_SUITE("spectral radius") {
  TEST_CASE("simple spectra") {
    CHECK(spectral_radius(MatrixXd::Identity(3, 3)) ==
          doctest::Approx(1.0).epsilon(1e-15));
    MatrixXd D = MatrixXd::Zero(2, 2);
    D(0, 0) = 0.3;
    D(1, 1) = -0.7;
    CHECK(spectral_radius(D) == doctest::Approx(0.7).epsilon(1e-15));
  }

  TEST_CASE("random 5x5 agrees with characteristic-polynomial roots") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
      const MatrixXd A = oracle::gaussian(rng, 5, 5);
      const double ref = oracle::spectral_radius_polynomial(A);
      CHECK(std::abs(spectral_radius(A) - ref) <= 1e-10 * ref);
    }
  }

  TEST_CASE("non-finite input is rejected") {
    MatrixXd A = MatrixXd::Identity(2, 2);
    A(0, 1) = std::nan("");
    CHECK_THROWS_AS(spectral_radius(A), Error);
  }
}
