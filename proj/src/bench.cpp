#include "trajinf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <cmath>
#include <thread>
#include <unsupported/Eigen/MatrixFunctions>

#include "trajinf/dare_sensitivity.hpp"
#include "trajinf/errors.hpp"

namespace trajinf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

enum StreamPurpose : std::uint64_t {
  kSystemStream = 1,
  kTrainExcitation = 2,
  kTrainNoise = 3,
  kTestExcitation = 4,
  kTestNoise = 5,
  kRolloutStream = 6,
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                  double std_dev = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd out(rows, cols);
  // Fill in row-major order so the draw sequence does not depend on storage.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = std_dev * normal(rng);
  }
  return out;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

MatrixXd cap_or_target(const MatrixXd& A, const SystemOptions& options) {
  if (options.target_rho) {
    return rescale_to_spectral_radius(A, *options.target_rho);
  }
  return spectral_radius(A) > 0.95 ? rescale_to_spectral_radius(A, 0.95) : A;
}

// ZOH for x' = Ac x + Bc u via the exponential of the augmented generator.
std::pair<MatrixXd, MatrixXd> zoh(const MatrixXd& Ac, const MatrixXd& Bc,
                                  double dt) {
  const Eigen::Index n = Ac.rows();
  const Eigen::Index m = Bc.cols();
  MatrixXd aug = MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = Ac * dt;
  aug.topRightCorner(n, m) = Bc * dt;
  const MatrixXd E = aug.exp();
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

LinearSystem make_s2(std::uint64_t seed, const SystemOptions& options) {
  auto rng = make_stream(seed, kSystemStream, 2);
  // Longitudinal mode (position, speed) and lateral mode (offset, rate).
  MatrixXd Ac = MatrixXd::Zero(4, 4);
  MatrixXd Bc = MatrixXd::Zero(4, 2);
  for (int mode = 0; mode < 2; ++mode) {
    const double omega = uniform(rng, 0.8, 1.6);
    const double zeta = uniform(rng, 0.2, 0.6);
    const int o = 2 * mode;
    Ac(o, o + 1) = 1.0;
    Ac(o + 1, o) = -omega * omega;
    Ac(o + 1, o + 1) = -2.0 * zeta * omega;
    Bc(o + 1, mode) = uniform(rng, 0.8, 1.2);
  }
  // Weak cross-coupling between the two modes.
  for (int i = 0; i < 2; ++i) {
    Ac(1, 2 + i) += 0.1 * gaussian(rng, 1, 1)(0, 0);
    Ac(3, i) += 0.1 * gaussian(rng, 1, 1)(0, 0);
  }
  auto [A, B] = zoh(Ac, Bc, 0.1);
  return {cap_or_target(A, options), B, options.mismatch, "S2"};
}

LinearSystem make_s3(std::uint64_t seed, const SystemOptions& options) {
  const int n_x = options.s3_state_dim;
  if (n_x != 8 && n_x != 10) {
    throw Error(ErrorKind::Config, "make_system",
                "S3 state dimension must be 8 or 10");
  }
  const int n_u = n_x == 8 ? 3 : 4;
  auto rng = make_stream(seed, kSystemStream, 3);
  MatrixXd A = gaussian(rng, n_x, n_x) / std::sqrt(double(n_x));
  const MatrixXd B = gaussian(rng, n_x, n_u);
  A = rescale_to_spectral_radius(A, 0.9);
  return {cap_or_target(A, options), B, options.mismatch, "S3"};
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::S1: return "S1";
    case Family::S2: return "S2";
    case Family::S3: return "S3";
    case Family::S4: return "S4";
  }
  return "?";
}

Family family_from_string(const std::string& name) {
  if (name == "S1") return Family::S1;
  if (name == "S2") return Family::S2;
  if (name == "S3") return Family::S3;
  if (name == "S4") return Family::S4;
  throw Error(ErrorKind::UnknownFamily, "make_system",
              "unknown system family '" + name + "'");
}

Eigen::Vector4d TwoLinkArm::derivative(const Eigen::Vector4d& s,
                                       const Eigen::Vector2d& torque) const {
  const double q1 = s(0), q2 = s(1), dq1 = s(2), dq2 = s(3);
  const double c2 = std::cos(q2);
  const double h = m2 * l1 * l2 * std::sin(q2);
  Eigen::Matrix2d M;
  M(0, 0) = (m1 + m2) * l1 * l1 + m2 * l2 * l2 + 2.0 * m2 * l1 * l2 * c2;
  M(0, 1) = m2 * l2 * l2 + m2 * l1 * l2 * c2;
  M(1, 0) = M(0, 1);
  M(1, 1) = m2 * l2 * l2;
  const Eigen::Vector2d coriolis(-h * (2.0 * dq1 * dq2 + dq2 * dq2),
                                 h * dq1 * dq1);
  const double s12 = std::sin(q1 + q2);
  const Eigen::Vector2d grav(
      (m1 + m2) * gravity * l1 * std::sin(q1) + m2 * gravity * l2 * s12,
      m2 * gravity * l2 * s12);
  const Eigen::Vector2d friction(damping1 * dq1, damping2 * dq2);
  const Eigen::Vector2d ddq =
      M.llt().solve(torque - coriolis - grav - friction);
  Eigen::Vector4d out;
  out << dq1, dq2, ddq;
  return out;
}

Eigen::Vector4d TwoLinkArm::rk4_step(const Eigen::Vector4d& s,
                                     const Eigen::Vector2d& torque,
                                     double h) const {
  const Eigen::Vector4d k1 = derivative(s, torque);
  const Eigen::Vector4d k2 = derivative(s + 0.5 * h * k1, torque);
  const Eigen::Vector4d k3 = derivative(s + 0.5 * h * k2, torque);
  const Eigen::Vector4d k4 = derivative(s + h * k3, torque);
  return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

int plant_state_dim(const Plant& plant) {
  if (const auto* lin = std::get_if<LinearSystem>(&plant)) {
    return static_cast<int>(lin->A.rows());
  }
  return 4;
}

int plant_input_dim(const Plant& plant) {
  if (const auto* lin = std::get_if<LinearSystem>(&plant)) {
    return static_cast<int>(lin->B.cols());
  }
  return 2;
}

VectorXd plant_step(const Plant& plant, const VectorXd& x, const VectorXd& u) {
  if (const auto* lin = std::get_if<LinearSystem>(&plant)) {
    VectorXd next = lin->A * x + lin->B * u;
    if (lin->mismatch != 0.0) next += lin->mismatch * x.array().tanh().matrix();
    return next;
  }
  const auto& arm = std::get<TwoLinkArm>(plant);
  return arm.rk4_step(Eigen::Vector4d(x), Eigen::Vector2d(u), arm.dt);
}

std::pair<MatrixXd, MatrixXd> mass_spring_damper(double mass, double stiffness,
                                                 double damping, double dt) {
  MatrixXd Ac(2, 2);
  Ac << 0.0, 1.0, -stiffness / mass, -damping / mass;
  MatrixXd Bc(2, 1);
  Bc << 0.0, 1.0 / mass;
  return zoh(Ac, Bc, dt);
}

MatrixXd rescale_to_spectral_radius(const MatrixXd& A, double rho) {
  const double current = spectral_radius(A);
  if (current == 0.0) return A;
  return A * (rho / current);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t purpose,
                          std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ purpose) + index);
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t purpose,
                            std::uint64_t index) {
  return std::mt19937_64(stream_seed(seed, purpose, index));
}

Plant make_system(Family family, std::uint64_t seed,
                  const SystemOptions& options) {
  switch (family) {
    case Family::S1: {
      auto [A, B] = mass_spring_damper(1.0, 1.0, 1.0, 0.1);
      return LinearSystem{A, B, options.mismatch, "S1"};
    }
    case Family::S2:
      return make_s2(seed, options);
    case Family::S3:
      return make_s3(seed, options);
    case Family::S4:
      return TwoLinkArm{};
  }
  throw Error(ErrorKind::UnknownFamily, "make_system", "unknown family");
}

Trajectory simulate(const Plant& plant, const VectorXd& x0,
                    const MatrixXd& inputs, double sigma_w,
                    std::uint64_t noise_seed, int id) {
  const int n_x = plant_state_dim(plant);
  if (x0.size() != n_x || inputs.cols() != plant_input_dim(plant)) {
    throw Error(ErrorKind::BadInput, "simulate", "dimension mismatch");
  }
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Trajectory tau{id, {}};
  tau.transitions.reserve(static_cast<std::size_t>(inputs.rows()));
  VectorXd x = x0;
  for (Eigen::Index t = 0; t < inputs.rows(); ++t) {
    const VectorXd u = inputs.row(t).transpose();
    VectorXd next = plant_step(plant, x, u);
    if (sigma_w > 0.0) {
      for (int i = 0; i < n_x; ++i) next(i) += sigma_w * normal(rng);
    }
    if (!next.allFinite() || next.norm() > 1e6) {
      throw Error(ErrorKind::NonFinite, "simulate",
                  "state norm exceeded 1e6 at step " + std::to_string(t) +
                      " of trajectory " + std::to_string(id));
    }
    tau.transitions.push_back({x, u, next});
    x = std::move(next);
  }
  return tau;
}

ExperimentConfig default_config(Family family) {
  ExperimentConfig config;
  config.family = family;
  switch (family) {
    case Family::S1:
      config.N = 30;
      config.T = 25;
      break;
    case Family::S2:
      config.N = 50;
      config.T = 30;
      break;
    case Family::S3:
      config.N = 80;
      config.T = 30;
      break;
    case Family::S4:
      config.N = 50;
      config.T = 30;
      config.plant_cost = true;
      break;
  }
  return config;
}

CostMatrices cost_matrices(const ExperimentConfig& config, int n_x, int n_u) {
  return {config.q_scale * MatrixXd::Identity(n_x, n_x),
          config.r_scale * MatrixXd::Identity(n_u, n_u),
          config.sigma0_scale * MatrixXd::Identity(n_x, n_x)};
}

namespace {

Dataset simulate_split(const ExperimentConfig& config, const Plant& plant,
                       int count, std::uint64_t excitation_purpose,
                       std::uint64_t noise_purpose) {
  const int n_x = plant_state_dim(plant);
  const int n_u = plant_input_dim(plant);
  Dataset data{n_x, n_u, {}};
  data.trajectories.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    auto rng = make_stream(config.seed, excitation_purpose,
                           static_cast<std::uint64_t>(k));
    const VectorXd x0 = gaussian(rng, n_x, 1, config.x0_std);
    const MatrixXd inputs = gaussian(rng, config.T, n_u, config.input_std);
    data.trajectories.push_back(simulate(
        plant, x0, inputs, config.sigma_w,
        stream_seed(config.seed, noise_purpose, static_cast<std::uint64_t>(k)),
        k));
  }
  return data;
}

}  // namespace

ExperimentData generate_experiment(const ExperimentConfig& config) {
  if (config.N < 2 || config.T < 1) {
    throw Error(ErrorKind::Config, "generate", "need N >= 2 and T >= 1");
  }
  if (!(config.test_fraction > 0.0)) {
    throw Error(ErrorKind::Config, "generate", "test_fraction must be > 0");
  }
  ExperimentData out{config, make_system(config.family, config.seed,
                                         config.system),
                     {}, {}};
  const int n_test = std::max(
      1, static_cast<int>(std::ceil(config.test_fraction * config.N - 1e-9)));
  out.train = simulate_split(config, out.plant, config.N, kTrainExcitation,
                             kTrainNoise);
  out.test = simulate_split(config, out.plant, n_test, kTestExcitation,
                            kTestNoise);
  return out;
}

PlantCost plant_cost(const Plant& plant, const MatrixXd& K, const MatrixXd& Q,
                     const MatrixXd& R, const MatrixXd& Sigma0, int horizon,
                     int rollouts, std::uint64_t seed) {
  const int n_x = plant_state_dim(plant);
  const int n_u = plant_input_dim(plant);
  if (K.rows() != n_u || K.cols() != n_x || rollouts < 1 || horizon < 1) {
    throw Error(ErrorKind::BadInput, "plant_cost", "bad gain or settings");
  }
  auto rng = make_stream(seed, kRolloutStream);
  MatrixXd Z = gaussian(rng, rollouts, n_x);
  if (rollouts >= n_x) {
    // Moment matching: make (1/n) Z'Z = I exactly.
    const MatrixXd S = Z.transpose() * Z / double(rollouts);
    const Eigen::LLT<MatrixXd> llt(S);
    if (llt.info() == Eigen::Success) {
      Z = llt.matrixU().transpose().solve(Z.transpose()).transpose();
    }
  }
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(Sigma0));
  const MatrixXd root =
      es.eigenvectors() *
      es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
      es.eigenvectors().transpose();

  double total = 0.0;
  for (int r = 0; r < rollouts; ++r) {
    VectorXd x = root * Z.row(r).transpose();
    double cost = 0.0;
    for (int t = 0; t < horizon; ++t) {
      const VectorXd u = -K * x;
      cost += x.dot(Q * x) + u.dot(R * u);
      x = plant_step(plant, x, u);
      if (!x.allFinite() || x.norm() > 1e6) return {kDivergedCost, true};
    }
    total += cost;
  }
  return {total / rollouts, false};
}

GroundTruthOptions ground_truth_options(const ExperimentConfig& config,
                                        int n_x, int n_u) {
  GroundTruthOptions options;
  options.lambda = config.lambda;
  options.costs = cost_matrices(config, n_x, n_u);
  options.plant_cost = config.plant_cost;
  options.plant_horizon = config.plant_horizon;
  options.plant_rollouts = config.plant_rollouts;
  options.rollout_seed = config.seed;
  return options;
}

namespace {

struct RetrainOutcome {
  double pred_loss = 0.0;
  std::optional<double> J;
  std::optional<double> plant;
};

RetrainOutcome retrain(const Dataset& train, const Dataset& test,
                       const Plant& plant, const GroundTruthOptions& options) {
  RetrainOutcome out;
  const RidgeFit fit = fit_ridge(train, options.lambda);
  out.pred_loss = pred_loss(fit.theta(), test);
  try {
    const DareSolution dare =
        solve_dare(fit.theta().A(), fit.theta().B(), options.costs.Q,
                   options.costs.R, options.dare);
    if (dare.rho_cl < 1.0 - kStabilityMargin) {
      out.J = (dare.P * options.costs.Sigma0).trace();
      if (options.plant_cost) {
        const PlantCost pc = trajinf::plant_cost(
            plant, dare.K, options.costs.Q, options.costs.R,
            options.costs.Sigma0, options.plant_horizon,
            options.plant_rollouts, options.rollout_seed);
        if (!pc.diverged) out.plant = pc.cost;
      }
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonStabilizable &&
        e.kind() != ErrorKind::NoConvergence &&
        e.kind() != ErrorKind::Unstable) {
      throw;
    }
  }
  return out;
}

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers =
      std::clamp<std::size_t>(threads < 1 ? 1 : std::size_t(threads), 1, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

GroundTruth loto_ground_truth(const Dataset& train, const Dataset& test,
                              const Plant& plant,
                              const GroundTruthOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  GroundTruth gt;
  const std::size_t N = train.size();
  const RetrainOutcome base = retrain(train, test, plant, options);
  gt.base_pred_loss = base.pred_loss;
  gt.base_J = base.J;
  gt.base_plant_cost = base.plant;

  gt.traj_ids.resize(N);
  gt.d_pred.assign(N, std::nullopt);
  gt.d_J.assign(N, std::nullopt);
  gt.d_plant.assign(N, std::nullopt);
  parallel_for(N, options.threads, [&](std::size_t k) {
    gt.traj_ids[k] = train.trajectories[k].id;
    const RetrainOutcome loo = retrain(train.without(k), test, plant, options);
    gt.d_pred[k] = loo.pred_loss - base.pred_loss;
    if (loo.J && base.J) gt.d_J[k] = *loo.J - *base.J;
    if (loo.plant && base.plant) gt.d_plant[k] = *loo.plant - *base.plant;
  });
  for (std::size_t k = 0; k < N; ++k) {
    if (!gt.d_J[k]) ++gt.n_missing_J;
    if (options.plant_cost && !gt.d_plant[k]) ++gt.n_missing_plant;
  }
  gt.retrain_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  return gt;
}

}  // namespace trajinf
