#pragma once

// Benchmark plants, trajectory simulation and the retraining ground truth.
//
//   S1  mass-spring-damper (m = k = c = 1), dt = 0.1, zero-order hold. Fixed.
//   S2  4-state / 2-input stable system: two damped second-order modes
//       (longitudinal, lateral) with seed-drawn weak coupling.
//   S3  random stable system, (n_x, n_u) = (8, 3) or (10, 4).
//   S4  planar two-link arm (n_x = 4, n_u = 2), RK4 over dt = 0.05.
//
// S2 and S3 are rescaled so that rho(A) <= 0.95, or exactly to a requested
// target spectral radius.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "trajinf/ident.hpp"
#include "trajinf/matrix_equations.hpp"

namespace trajinf {

enum class Family { S1, S2, S3, S4 };

std::string to_string(Family family);
Family family_from_string(const std::string& name);  // throws UnknownFamily

struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  // Optional smooth mismatch: x+ = A x + B u + mismatch * tanh(x).
  double mismatch = 0.0;
  std::string name;
};

struct TwoLinkArm {
  double m1 = 1.0;
  double m2 = 1.0;
  double l1 = 1.0;
  double l2 = 1.0;
  double gravity = 9.81;
  double damping1 = 0.1;
  double damping2 = 0.1;
  double dt = 0.05;

  // State (q1, q2, dq1, dq2); angles from the downward vertical.
  Eigen::Vector4d derivative(const Eigen::Vector4d& state,
                             const Eigen::Vector2d& torque) const;
  Eigen::Vector4d rk4_step(const Eigen::Vector4d& state,
                           const Eigen::Vector2d& torque, double h) const;
};

using Plant = std::variant<LinearSystem, TwoLinkArm>;

int plant_state_dim(const Plant& plant);
int plant_input_dim(const Plant& plant);

// Noise-free successor state.
Eigen::VectorXd plant_step(const Plant& plant, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u);

struct SystemOptions {
  int s3_state_dim = 10;  // 8 or 10
  std::optional<double> target_rho;
  double mismatch = 0.0;
};

Plant make_system(Family family, std::uint64_t seed,
                  const SystemOptions& options = {});

// ZOH discretization of the mass-spring-damper x = (position, velocity).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> mass_spring_damper(double mass,
                                                               double stiffness,
                                                               double damping,
                                                               double dt);

// Scales A so that rho(A) equals `rho`.
Eigen::MatrixXd rescale_to_spectral_radius(const Eigen::MatrixXd& A,
                                           double rho);

// Deterministic stream seeding: one generator per (seed, purpose, index).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t purpose,
                          std::uint64_t index = 0);
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t purpose,
                            std::uint64_t index = 0);

/// Rolls the plant forward over the rows of `inputs` (T x n_u), adding
/// N(0, sigma_w^2 I) process noise drawn from `noise_seed`.
/// Throws Error{NonFinite} if the state norm exceeds 1e6.
Trajectory simulate(const Plant& plant, const Eigen::VectorXd& x0,
                    const Eigen::MatrixXd& inputs, double sigma_w,
                    std::uint64_t noise_seed, int id = 0);

struct ExperimentConfig {
  Family family = Family::S1;
  int N = 30;
  int T = 25;
  double sigma_w = 0.03;
  double lambda = 1e-5;
  double q_scale = 1.0;       // Q = q_scale I
  double r_scale = 0.1;       // R = r_scale I
  double sigma0_scale = 1.0;  // Sigma0 = sigma0_scale I
  std::uint64_t seed = 0;
  double input_std = 1.0;  // u_t ~ N(0, input_std^2 I)
  double x0_std = 1.0;     // x_0 ~ N(0, x0_std^2 I)
  double test_fraction = 0.2;
  SystemOptions system;
  bool plant_cost = false;  // also evaluate closed-loop cost on the plant
  int plant_horizon = 400;
  int plant_rollouts = 64;
};

ExperimentConfig default_config(Family family);

struct CostMatrices {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::MatrixXd Sigma0;
};

CostMatrices cost_matrices(const ExperimentConfig& config, int n_x, int n_u);

struct ExperimentData {
  ExperimentConfig config;
  Plant plant;
  Dataset train;
  Dataset test;
};

/// Simulates N training and ceil(test_fraction N) held-out trajectories.
/// Identical configs give bit-identical data.
ExperimentData generate_experiment(const ExperimentConfig& config);

struct PlantCost {
  double cost = 0.0;
  bool diverged = false;
};

inline constexpr double kDivergedCost = 1e12;

/// Monte-Carlo closed-loop cost of u = -K x on the plant, averaged over
/// `rollouts` noise-free rollouts with x0 ~ N(0, Sigma0). The initial states
/// come from `seed` only and are moment-matched so their sample covariance
/// equals Sigma0 exactly; every gain evaluated with the same seed sees the
/// same initial states.
PlantCost plant_cost(const Plant& plant, const Eigen::MatrixXd& K,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                     const Eigen::MatrixXd& Sigma0, int horizon, int rollouts,
                     std::uint64_t seed);

struct GroundTruthOptions {
  double lambda = 1e-5;
  CostMatrices costs;
  DareOptions dare;
  bool plant_cost = false;
  int plant_horizon = 400;
  int plant_rollouts = 64;
  std::uint64_t rollout_seed = 0;
  int threads = 1;
};

GroundTruthOptions ground_truth_options(const ExperimentConfig& config,
                                        int n_x, int n_u);

struct GroundTruth {
  std::vector<int> traj_ids;
  std::vector<std::optional<double>> d_pred;   // L_pred(theta_-k) - L_pred
  std::vector<std::optional<double>> d_J;      // J(theta_-k) - J(theta_hat)
  std::vector<std::optional<double>> d_plant;  // plant-level cost change
  std::optional<double> base_pred_loss;
  std::optional<double> base_J;
  std::optional<double> base_plant_cost;
  int n_missing_J = 0;
  int n_missing_plant = 0;
  double retrain_seconds = 0.0;
};

/// Full retraining sweep: refit on D \ {tau_k}, recompute the held-out loss,
/// re-solve the DARE for J and optionally re-evaluate the plant cost.
/// Stabilizability failures are recorded as missing, never thrown.
GroundTruth loto_ground_truth(const Dataset& train, const Dataset& test,
                              const Plant& plant,
                              const GroundTruthOptions& options);

}  // namespace trajinf
