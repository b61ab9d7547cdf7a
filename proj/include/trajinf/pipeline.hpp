#pragma once

// End-to-end trajectory influence scores:
//   fit -> factorize H -> DARE -> adjoint Lambda -> grad J -> v = H^{-1} grad J
//   -> per trajectory g_k, IF1_k = g_k' H^{-1} grad L_pred, IF2_k = g_k' v.
// The report also carries the exact LOTO prediction delta, the gradient-only
// and residual baselines, and delta_k for every trajectory.

#include <optional>
#include <string>
#include <vector>

#include "trajinf/bench.hpp"
#include "trajinf/dare_sensitivity.hpp"
#include "trajinf/ident.hpp"
#include "trajinf/instrument.hpp"
#include "trajinf/metrics.hpp"

namespace trajinf {

enum class HvpMethod { Direct, Cg };

struct PipelineOptions {
  HvpMethod hvp = HvpMethod::Direct;
  CgOptions cg;
  GradientMethod gradient = GradientMethod::Adjoint;
  DareOptions dare;
};

struct InfluenceRecord {
  int traj_id = 0;
  double if1 = 0.0;
  std::optional<double> if2;
  double exact_loto_pred_delta = 0.0;
  double grad_only_pred = 0.0;
  std::optional<double> grad_only_J;
  double residual_norm = 0.0;
  double delta_k = 0.0;
};

struct ModelSummary {
  int n_x = 0;
  int n_u = 0;
  int p = 0;
  int n_train = 0;
  double lambda = 0.0;
  bool assumption_ok = false;
  std::string assumption_message;
  std::optional<double> rho_cl;
  std::optional<double> J;
};

// Wall-clock seconds per method, each including the shared fit.
struct MethodTimings {
  double fit = 0.0;
  double residual = 0.0;
  double grad_only_pred = 0.0;
  double grad_only_J = 0.0;
  double if1 = 0.0;
  double if2 = 0.0;
  double exact_loto = 0.0;
  double total = 0.0;
};

struct InfluenceReport {
  ModelSummary model;
  std::vector<InfluenceRecord> records;
  MethodTimings timings;
  instrument::Counters counters;
  int n_delta_at_least_one = 0;
};

/// Runs the full pipeline. A closed-loop assumption failure at theta-hat is
/// not thrown: IF1 and the identification diagnostics are still produced,
/// IF2 / grad_only_J are left empty and model.assumption_ok is false.
InfluenceReport run_algorithm1(const Dataset& train, const Dataset& test,
                               double lambda, const CostMatrices& costs,
                               const PipelineOptions& options = {});

struct EvalRow {
  std::string system;
  std::string target;  // "pred", "lqr", "plant", "-"
  std::string method;  // Residual, Grad-only, IF1, IF2, Exact LOTO, Retraining
  std::optional<EvalMetrics> metrics;
  double time_s = 0.0;
  double speedup = 1.0;
};

/// Compares every score with the retraining truth, one row per
/// (target, method).
/// Throws Error{IdMismatch} unless both sides cover the same trajectory ids.
std::vector<EvalRow> evaluate(const InfluenceReport& report,
                              const GroundTruth& truth,
                              const std::string& system = "",
                              int top_k = 5);

}  // namespace trajinf
