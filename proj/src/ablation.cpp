#include "trajinf/ablation.hpp"

#include <cmath>

#include "trajinf/errors.hpp"

namespace trajinf {

ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const PipelineOptions& options, int threads) {
  ExperimentOutcome out{generate_experiment(config), {}, {}, {}};
  const int n_x = out.data.train.n_x;
  const int n_u = out.data.train.n_u;
  const CostMatrices costs = cost_matrices(config, n_x, n_u);
  out.report = run_algorithm1(out.data.train, out.data.test, config.lambda,
                              costs, options);
  GroundTruthOptions gt = ground_truth_options(config, n_x, n_u);
  gt.dare = options.dare;
  gt.threads = threads;
  out.truth = loto_ground_truth(out.data.train, out.data.test, out.data.plant,
                                gt);
  out.rows = evaluate(out.report, out.truth, to_string(config.family));
  return out;
}

namespace {

const EvalRow* find_row(const std::vector<EvalRow>& rows,
                        const std::string& target, const std::string& method) {
  for (const auto& r : rows) {
    if (r.target == target && r.method == method) return &r;
  }
  return nullptr;
}

std::optional<double> median_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return median(v);
}

}  // namespace

std::optional<double> find_pearson(const std::vector<EvalRow>& rows,
                                   const std::string& target,
                                   const std::string& method) {
  const EvalRow* row = find_row(rows, target, method);
  if (!row || !row->metrics) return std::nullopt;
  return row->metrics->pearson;
}

std::optional<double> find_spearman(const std::vector<EvalRow>& rows,
                                    const std::string& target,
                                    const std::string& method) {
  const EvalRow* row = find_row(rows, target, method);
  if (!row || !row->metrics) return std::nullopt;
  return row->metrics->spearman;
}

void apply_parameter(ExperimentConfig& config, const std::string& name,
                     double value) {
  auto as_count = [&](const char* what) {
    if (!(value >= 1.0) || value != std::floor(value)) {
      throw Error(ErrorKind::Config, "ablation",
                  std::string(what) + " must be a positive integer");
    }
    return static_cast<int>(value);
  };
  if (name == "N") {
    config.N = as_count("N");
  } else if (name == "T") {
    config.T = as_count("T");
  } else if (name == "sigma_w") {
    config.sigma_w = value;
  } else if (name == "lambda") {
    config.lambda = value;
  } else if (name == "target_rho") {
    config.system.target_rho = value;
  } else if (name == "mismatch") {
    config.system.mismatch = value;
    config.plant_cost = true;
  } else {
    throw Error(ErrorKind::Config, "ablation",
                "unknown sweep parameter '" + name + "'");
  }
}

std::vector<AblationCell> ablation_sweep(const AblationGrid& grid) {
  std::vector<AblationCell> cells;
  for (double value : grid.values) {
    AblationCell cell;
    cell.parameter = grid.parameter;
    cell.value = value;
    std::vector<double> if1p, if1s, if2p, if2s, gop, plant;
    for (std::uint64_t seed : grid.seeds) {
      try {
        ExperimentConfig config = grid.base;
        config.seed = seed;
        apply_parameter(config, grid.parameter, value);
        const ExperimentOutcome o =
            run_experiment(config, grid.pipeline, grid.threads);
        ++cell.n_seeds;
        auto push = [](std::vector<double>& v, std::optional<double> x) {
          if (x) v.push_back(*x);
        };
        push(if1p, find_pearson(o.rows, "pred", "IF1"));
        push(if1s, find_spearman(o.rows, "pred", "IF1"));
        push(if2p, find_pearson(o.rows, "lqr", "IF2"));
        push(if2s, find_spearman(o.rows, "lqr", "IF2"));
        push(gop, find_pearson(o.rows, "pred", "Grad-only"));
        push(plant, find_pearson(o.rows, "plant", "IF2"));
      } catch (const Error& e) {
        ++cell.n_failed;
        if (cell.error.empty()) cell.error = e.what();
      }
    }
    cell.if1_pearson = median_of(if1p);
    cell.if1_spearman = median_of(if1s);
    cell.if2_pearson = median_of(if2p);
    cell.if2_spearman = median_of(if2s);
    cell.grad_only_pred_pearson = median_of(gop);
    cell.plant_if2_pearson = median_of(plant);
    cells.push_back(std::move(cell));
  }
  return cells;
}

}  // namespace trajinf
