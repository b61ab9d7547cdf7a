#pragma once

#include <optional>
#include <vector>

namespace trajinf {

struct EvalMetrics {
  std::optional<double> pearson;   // missing when either side has no variance
  std::optional<double> spearman;
  double mae = 0.0;
  double topk_overlap = 0.0;
  int n_pairs = 0;
  int n_missing = 0;
};

/// Compares predicted LOTO effects with the true ones over the non-missing
/// pairs. Spearman uses average ranks for ties; top-k overlap is
/// |top-k(predicted) ∩ top-k(truth)| / k over the largest values, with k
/// clipped to the number of pairs.
/// Throws Error{DegenerateInput} when fewer than two pairs remain.
EvalMetrics compute_metrics(const std::vector<double>& predicted,
                            const std::vector<std::optional<double>>& truth,
                            int k = 5);

std::optional<double> pearson(const std::vector<double>& a,
                              const std::vector<double>& b);
std::optional<double> spearman(const std::vector<double>& a,
                               const std::vector<double>& b);
// 1-based average ranks.
std::vector<double> average_ranks(const std::vector<double>& values);

double median(std::vector<double> values);

}  // namespace trajinf
