#pragma once

// On-disk formats. Datasets, influence reports and ground-truth files are
// JSON Lines: one header record, then one record per line. Floating-point
// values are written with 17 significant digits, so write -> read -> write is
// byte-identical. Wall-clock timings never enter these files; they go to a
// `<path>.timings.json` sidecar so reruns reproduce the main file exactly.
// Metrics tables are CSV. See docs/formats.md.

#include <optional>
#include <string>
#include <vector>

#include "trajinf/ablation.hpp"
#include "trajinf/bench.hpp"
#include "trajinf/pipeline.hpp"

namespace trajinf::io {

inline constexpr int kFormatVersion = 1;

// Replaces `path` with `content` via a temporary file and rename.
void write_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);  // throws Error{Io}

std::string format_double(double v);  // "%.17g"; non-finite -> "null"

struct DatasetFile {
  Family family = Family::S1;
  std::uint64_t seed = 0;
  Plant plant;
  Dataset train;
  Dataset test;
};

DatasetFile dataset_file(const ExperimentData& data);

std::string serialize_dataset(const DatasetFile& file);
DatasetFile parse_dataset(const std::string& text);  // throws Error{Data}
void write_dataset(const std::string& path, const DatasetFile& file);
DatasetFile read_dataset(const std::string& path);

struct ReportFile {
  std::string system;
  InfluenceReport report;
};

std::string serialize_report(const ReportFile& file);
ReportFile parse_report(const std::string& text);
std::string serialize_report_timings(const MethodTimings& t);
MethodTimings parse_report_timings(const std::string& text);

std::string serialize_truth(const GroundTruth& truth);
GroundTruth parse_truth(const std::string& text);
std::string serialize_truth_timings(const GroundTruth& truth);
double parse_truth_timings(const std::string& text);  // retrain seconds

std::string sidecar_path(const std::string& path);

// Report/truth with optional sidecar: missing sidecars leave timings at 0.
void write_report(const std::string& path, const ReportFile& file);
ReportFile read_report(const std::string& path);
void write_truth(const std::string& path, const GroundTruth& truth);
GroundTruth read_truth(const std::string& path);

// Columns: system,target,method,pearson,spearman,mae,topk,time_s,speedup.
std::string metrics_csv(const std::vector<EvalRow>& rows);
std::string metrics_table(const std::vector<EvalRow>& rows);  // aligned text

std::string ablation_csv(const std::vector<AblationCell>& cells);

}  // namespace trajinf::io
