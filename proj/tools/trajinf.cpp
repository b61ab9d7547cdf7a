// trajinf: generate datasets, score trajectories, retrain, evaluate, ablate.
//
// Exit codes: 0 ok, 2 config, 3 data / io, 4 numerics, 5 assumption violated.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "trajinf/ablation.hpp"
#include "trajinf/config.hpp"
#include "trajinf/errors.hpp"
#include "trajinf/io.hpp"
#include "trajinf/pipeline.hpp"

using namespace trajinf;

namespace {

constexpr int kExitAssumption = 5;

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* c = cmd->add_option("--config", args.config, "run configuration file");
  if (config_required) c->required();
  cmd->add_option("--out", args.out, "output path")->required();
  cmd->add_option("--seed", args.seed, "override the configured seed");
  cmd->add_option("--threads", args.threads, "worker threads for retraining")
      ->check(CLI::Range(1, 256));
}

RunConfig load(const CommonArgs& args) {
  RunConfig cfg = args.config.empty() ? RunConfig{} : load_config(args.config);
  if (args.seed) cfg.experiment.seed = *args.seed;
  return cfg;
}

// Dataset dimensions win over the configured family; the family only seeds
// defaults. A disagreement is reported but not fatal.
void warn_family(const RunConfig& cfg, const io::DatasetFile& data) {
  if (cfg.experiment.family != data.family) {
    std::cerr << "warning: config family " << to_string(cfg.experiment.family)
              << " differs from dataset family " << to_string(data.family)
              << "\n";
  }
}

int cmd_generate(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  const ExperimentData data = generate_experiment(cfg.experiment);
  io::write_dataset(args.out, io::dataset_file(data));
  std::cout << "wrote " << args.out << ": " << to_string(cfg.experiment.family)
            << ", " << data.train.size() << " train + " << data.test.size()
            << " test trajectories x " << cfg.experiment.T
            << " transitions, seed " << cfg.experiment.seed << "\n";
  return 0;
}

int cmd_influence(const CommonArgs& args, const std::string& data_path) {
  const RunConfig cfg = load(args);
  const io::DatasetFile data = io::read_dataset(data_path);
  warn_family(cfg, data);
  const CostMatrices costs =
      cost_matrices(cfg.experiment, data.train.n_x, data.train.n_u);
  io::ReportFile file{to_string(data.family),
                      run_algorithm1(data.train, data.test,
                                     cfg.experiment.lambda, costs,
                                     cfg.pipeline)};
  io::write_report(args.out, file);
  const auto& m = file.report.model;
  std::cout << "wrote " << args.out << ": " << file.report.records.size()
            << " records";
  if (file.report.n_delta_at_least_one > 0) {
    std::cerr << "warning: " << file.report.n_delta_at_least_one
              << " trajectories have curvature share >= 1\n";
  }
  if (!m.assumption_ok) {
    std::cout << " (IF1 only)\n";
    std::cerr << "error: closed-loop assumption violated at the fitted model: "
              << m.assumption_message << "\n";
    return kExitAssumption;
  }
  std::cout << ", rho(A_cl) = " << *m.rho_cl << ", J = " << *m.J << "\n";
  return 0;
}

int cmd_loto(const CommonArgs& args, const std::string& data_path) {
  RunConfig cfg = load(args);
  const io::DatasetFile data = io::read_dataset(data_path);
  warn_family(cfg, data);
  if (!args.seed) cfg.experiment.seed = data.seed;
  GroundTruthOptions gt =
      ground_truth_options(cfg.experiment, data.train.n_x, data.train.n_u);
  gt.dare = cfg.pipeline.dare;
  gt.threads = args.threads;
  const GroundTruth truth =
      loto_ground_truth(data.train, data.test, data.plant, gt);
  io::write_truth(args.out, truth);
  std::cout << "wrote " << args.out << ": " << truth.traj_ids.size()
            << " retrainings in " << truth.retrain_seconds << " s";
  if (truth.n_missing_J > 0) {
    std::cout << ", " << truth.n_missing_J << " without a stabilizing DARE";
  }
  std::cout << "\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& report_path,
                 const std::string& truth_path) {
  const RunConfig cfg = load(args);
  const io::ReportFile report = io::read_report(report_path);
  const GroundTruth truth = io::read_truth(truth_path);
  const auto rows =
      evaluate(report.report, truth, report.system, cfg.top_k);
  io::write_atomic(args.out, io::metrics_csv(rows));
  std::cout << io::metrics_table(rows);
  return 0;
}

int cmd_ablate(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  if (cfg.sweep_parameter.empty() && !cfg.sweep_values.empty()) {
    throw Error(ErrorKind::Config, "config",
                "sweep_values given without sweep_parameter");
  }
  AblationGrid grid;
  grid.base = cfg.experiment;
  grid.parameter = cfg.sweep_parameter;
  grid.values = cfg.sweep_values;
  grid.seeds = cfg.sweep_seeds;
  if (grid.seeds.empty()) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      grid.seeds.push_back(cfg.experiment.seed + s);
    }
  }
  grid.pipeline = cfg.pipeline;
  grid.threads = args.threads;
  const auto cells = ablation_sweep(grid);
  io::write_atomic(args.out, io::ablation_csv(cells));
  int ok = 0;
  for (const auto& c : cells) {
    if (c.n_seeds > 0) ++ok;
    std::printf("%s = %-8g seeds %d/%zu  IF1 %s  IF2 %s  plant %s\n",
                c.parameter.c_str(), c.value, c.n_seeds, grid.seeds.size(),
                c.if1_pearson ? std::to_string(*c.if1_pearson).c_str() : "-",
                c.if2_pearson ? std::to_string(*c.if2_pearson).c_str() : "-",
                c.plant_if2_pearson
                    ? std::to_string(*c.plant_if2_pearson).c_str()
                    : "-");
  }
  if (!cells.empty() && ok == 0) {
    std::cerr << "error: every ablation cell failed: " << cells.front().error
              << "\n";
    return 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory-level influence scores for identified LQR designs"};
  app.require_subcommand(1);

  CommonArgs gen_args, inf_args, loto_args, eval_args, abl_args;
  std::string inf_data, loto_data, report_path, truth_path;

  auto* gen = app.add_subcommand("generate", "simulate a benchmark dataset");
  add_common(gen, gen_args, true);

  auto* inf = app.add_subcommand("influence", "compute influence scores");
  add_common(inf, inf_args, true);
  inf->add_option("--data", inf_data, "dataset file")->required();

  auto* loto = app.add_subcommand("loto", "leave-one-trajectory-out retraining");
  add_common(loto, loto_args, true);
  loto->add_option("--data", loto_data, "dataset file")->required();

  auto* eval = app.add_subcommand("evaluate", "compare scores with retraining");
  add_common(eval, eval_args, false);
  eval->add_option("--report", report_path, "influence report")->required();
  eval->add_option("--truth", truth_path, "ground-truth file")->required();

  auto* abl = app.add_subcommand("ablate", "run an ablation sweep");
  add_common(abl, abl_args, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_generate(gen_args);
    if (*inf) return cmd_influence(inf_args, inf_data);
    if (*loto) return cmd_loto(loto_args, loto_data);
    if (*eval) return cmd_evaluate(eval_args, report_path, truth_path);
    if (*abl) return cmd_ablate(abl_args);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "] " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
