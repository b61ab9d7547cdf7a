#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trajinf/bench.hpp"
#include "trajinf/pipeline.hpp"

namespace trajinf {

// One seeded experiment: generate, score, retrain, compare.
struct ExperimentOutcome {
  ExperimentData data;
  InfluenceReport report;
  GroundTruth truth;
  std::vector<EvalRow> rows;
};

ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const PipelineOptions& options = {},
                                 int threads = 1);

// Pearson of `method` against `target` in an evaluation table, if present.
std::optional<double> find_pearson(const std::vector<EvalRow>& rows,
                                   const std::string& target,
                                   const std::string& method);
std::optional<double> find_spearman(const std::vector<EvalRow>& rows,
                                    const std::string& target,
                                    const std::string& method);

// Overrides one named config field. Supported: N, T, sigma_w, lambda,
// target_rho, mismatch. Throws Error{Config} for anything else.
void apply_parameter(ExperimentConfig& config, const std::string& name,
                     double value);

struct AblationGrid {
  ExperimentConfig base;
  std::string parameter;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  PipelineOptions pipeline;
  int threads = 1;
};

// Medians over the seeds of one grid cell.
struct AblationCell {
  std::string parameter;
  double value = 0.0;
  int n_seeds = 0;
  int n_failed = 0;
  std::optional<double> if1_pearson;
  std::optional<double> if1_spearman;
  std::optional<double> if2_pearson;
  std::optional<double> if2_spearman;
  std::optional<double> grad_only_pred_pearson;
  std::optional<double> plant_if2_pearson;
  std::string error;  // first failure message, empty if none
};

/// Runs every (value, seed) pair of the grid. Failures are recorded per cell
/// and never abort the sweep. The mismatch sweep always evaluates plant cost.
std::vector<AblationCell> ablation_sweep(const AblationGrid& grid);

}  // namespace trajinf
