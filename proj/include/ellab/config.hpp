#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ellab/functional.hpp"

namespace ellab {

/// Invalid or unparsable experiment file; the message names the offending
/// field (or the parse position for syntax errors).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Declarative experiment description: the problem plus per-subcommand knobs.
/// Stored as commented JSON with sections problem / grid / solver / run.
struct ExperimentConfig {
  ProblemSpec problem;  // grid and solver sections land inside here

  // run section
  std::vector<double> lambdas;   ///< lambda ladder for branch-style runs
  std::vector<double> mus;       ///< amplification ladder for the mu sweep
  std::vector<double> r_values;  ///< truncation radii for the eigen sweep
  int path_nodes = 33;
  double resolution = -1.0;  ///< bisection resolution (negative = default)
  bool masked = false;       ///< eigen: restrict to {h <= 0}
  bool candidate = false;    ///< certify: solve at lambda and spot-check the result
  std::string format = "json";
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);

/// Deterministic emission; parse(emit(c)) emits the same bytes again.
std::string emit_config(const ExperimentConfig& config);

}  // namespace ellab
