#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ndflow/dpgmm.hpp"
#include "ndflow/l2match.hpp"
#include "ndflow/normalize.hpp"

namespace ndflow {

/// Numeric settings shared by all commands. Each field has a kebab-case
/// flag (`vb_max_iterations` -> `--vb-max-iterations`) and the same
/// snake_case key in a `--config` JSON file.
struct PipelineConfig {
  // DPGMM
  double concentration = 2.0;
  std::size_t truncation = 32;
  std::optional<double> prior_mean;
  double prior_mean_strength = 1.0;
  double prior_shape = 1.0;
  std::optional<double> prior_rate;
  std::size_t vb_max_iterations = 500;
  double elbo_rel_tolerance = 1e-7;
  double prune_threshold = 1e-3;
  std::uint64_t seed = 0;
  // L2 matching
  std::size_t optim_max_iterations = 2000;
  double grad_norm_tolerance = 1e-7;
  double initial_step = 0.1;
  double backtracking_factor = 0.5;
  double armijo_slope = 1e-4;
  // Flow
  std::size_t mesh_points = 200;
  std::size_t rk4_steps = 32;
  double margin_sd = 3.0;
  std::optional<double> mesh_min;
  std::optional<double> mesh_max;

  DpgmmConfig dpgmm() const;
  OptimConfig optim() const;
  FlowSettings flow() const;
  void validate() const;
};

/// Runs the command line `args` (without the program name). Returns the
/// process exit code: 0 success, 2 invalid input, 3 numerical failure,
/// 4 I/O failure. Errors are reported on `err` as one JSON object.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ndflow
