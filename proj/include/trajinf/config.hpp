#pragma once

// Flat `key = value` run configuration. `#` starts a comment; blank lines are
// ignored. Unknown keys, duplicate keys and malformed values are rejected
// with their line number (Error{Config}). The environment is never read.
//
// The schema is documented in docs/formats.md.

#include <cstdint>
#include <string>
#include <vector>

#include "trajinf/bench.hpp"
#include "trajinf/pipeline.hpp"

namespace trajinf {

struct RunConfig {
  ExperimentConfig experiment;
  PipelineOptions pipeline;
  int top_k = 5;

  // Ablation grid; only used by `ablate`.
  std::string sweep_parameter;
  std::vector<double> sweep_values;
  std::vector<std::uint64_t> sweep_seeds;
};

/// Parses configuration text. `origin` prefixes error locations.
/// Values not given fall back to default_config(family).
RunConfig parse_config(const std::string& text,
                       const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

// Every accepted key, in documentation order.
const std::vector<std::string>& config_keys();

}  // namespace trajinf
