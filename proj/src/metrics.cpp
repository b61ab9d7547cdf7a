#include "trajinf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "trajinf/errors.hpp"

namespace trajinf {

std::optional<double> pearson(const std::vector<double>& a,
                              const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n < 2 || b.size() != n) return std::nullopt;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / double(n);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / double(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return values[i] < values[j];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * double(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(const std::vector<double>& a,
                               const std::vector<double>& b) {
  return pearson(average_ranks(a), average_ranks(b));
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

std::set<std::size_t> top_indices(const std::vector<double>& v,
                                  std::size_t k) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return v[i] > v[j]; });
  return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k)};
}

}  // namespace

EvalMetrics compute_metrics(const std::vector<double>& predicted,
                            const std::vector<std::optional<double>>& truth,
                            int k) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorKind::BadInput, "metrics",
                "predicted and truth lengths differ");
  }
  std::vector<double> p, t;
  EvalMetrics out;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (truth[i] && std::isfinite(*truth[i]) && std::isfinite(predicted[i])) {
      p.push_back(predicted[i]);
      t.push_back(*truth[i]);
    } else {
      ++out.n_missing;
    }
  }
  if (p.size() < 2) {
    throw Error(ErrorKind::DegenerateInput, "metrics",
                "fewer than two non-missing pairs");
  }
  out.n_pairs = static_cast<int>(p.size());
  out.pearson = pearson(p, t);
  out.spearman = spearman(p, t);
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) abs_sum += std::abs(p[i] - t[i]);
  out.mae = abs_sum / double(p.size());
  const std::size_t kk =
      std::min<std::size_t>(p.size(), static_cast<std::size_t>(std::max(k, 1)));
  const auto top_p = top_indices(p, kk);
  const auto top_t = top_indices(t, kk);
  std::size_t hits = 0;
  for (auto i : top_p) hits += top_t.count(i);
  out.topk_overlap = double(hits) / double(kk);
  return out;
}

}  // namespace trajinf
