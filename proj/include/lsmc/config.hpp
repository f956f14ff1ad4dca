#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsmc/solver.hpp"

namespace lsmc {

/// A run configuration: the market (already loaded or calibrated), the sweep
/// axes, and every solver/evaluation knob.  `solve` and `evaluate` use the
/// first entry of each axis; the bench subcommands sweep them.
struct RunConfig {
  std::string market_kind;  // "csv" | "model_json" | "synthetic"
  VarModel market;
  std::vector<Index> asset_indices;
  Vector s0;

  std::vector<Index> horizons;
  std::vector<double> gammas;
  std::vector<double> deltas;
  std::vector<std::string> modes;
  std::vector<Index> bench_dims;  // asset counts for the runtime sweep

  double w0 = 1.0;
  double rf_annual = 0.045;
  int periods_per_year = 12;

  int refine_depth = 5;
  int state_degree = 2;
  int global_degree = 4;
  double ridge_scale = 1e-6;
  Index n_paths = 10000;
  std::uint64_t seed = 42;
  int n_threads = 1;

  CostModel costs;

  std::uint64_t eval_seed = 777;
  Index n_eval_paths = 10000;

  std::uint64_t synthetic_seed = 7;
  std::string out_dir = "out";

  double rf_per_period() const { return rf_annual / periods_per_year; }

  /// Assemble a problem for one sweep cell.
  ProblemSpec make_problem(double delta, double gamma, Index horizon,
                           const std::string& mode) const;

  /// First-entry problem for plain solve/evaluate runs.
  ProblemSpec make_default_problem() const;
};

/// Parse and fully validate a config file (throws ConfigError before any
/// output is written).  Relative data paths resolve against the config file's
/// directory.
RunConfig load_config(const std::string& path);

}  // namespace lsmc
