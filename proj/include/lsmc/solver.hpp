#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsmc/control_grid.hpp"
#include "lsmc/cost_model.hpp"
#include "lsmc/evaluation.hpp"
#include "lsmc/market_model.hpp"
#include "lsmc/regression.hpp"
#include "lsmc/types.hpp"

namespace lsmc {

enum class MaximizerMode {
  grid_only,       // argmax over the discrete grid, nothing else
  local_adaptive,  // ridge surrogate on the patch around the argmax, then refinement
  global_adaptive, // least squares surrogate over every grid node, then refinement
};

std::string to_string(MaximizerMode mode);
MaximizerMode maximizer_mode_from_string(const std::string& s);

struct MaximizerSpec {
  MaximizerMode mode = MaximizerMode::local_adaptive;
  int global_degree = 4;  // surrogate degree for global_adaptive
  int refine_depth = 5;   // refinement passes; final resolution mesh / 2^depth

  void validate() const;
};

/// Everything a solve needs: market dynamics, horizon and preferences,
/// frictions, discretization and regression knobs, and the seed.
struct ProblemSpec {
  VarModel market;
  std::vector<Index> asset_indices;  // tradable series of the market model
  Vector s0;                         // initial prices, one per tradable asset
  std::optional<Vector> z0;          // initial state; default stationary mean

  Index horizon = 6;
  double w0 = 1.0;
  double rf_per_period = 0.045 / 12.0;
  UtilitySpec utility;
  CostModel costs;

  double mesh = 0.125;
  MaximizerSpec maximizer;
  int state_degree = 2;       // polynomial degree of the state features
  double ridge_scale = 1e-6;  // ridge lambda = ridge_scale * fit sample size
  Index n_paths = 10000;
  std::uint64_t seed = 42;
  double wealth_floor_frac = 1e-8;
  int n_threads = 1;

  Index n_assets() const { return static_cast<Index>(asset_indices.size()); }
  double wealth_floor() const { return wealth_floor_frac * w0; }
  void validate() const;
};

/// Fitted continuation values for one period: column j of `betas` holds the
/// regression coefficients of node j's continuation value on the state
/// features (map spans the state panel followed by wealth).
struct StepValue {
  FeatureMap map;
  Matrix betas;  // dim_out x grid size
  int rank_fallbacks = 0;
};

struct Policy {
  std::string spec_digest;
  ControlGrid grid;
  MaximizerSpec maximizer;
  double ridge_scale = 1e-6;
  std::vector<StepValue> steps;

  Index n_steps() const { return static_cast<Index>(steps.size()); }

  /// Fitted continuation value of every grid node at state (z, w).
  Vector continuation_values(Index n, const Vector& z, double w) const;

  /// Extracted control at state (z, w); one-shot convenience wrapper.
  Vector control_at(Index n, const Vector& z, double w) const;
};

/// Forward pass output: market panels plus the randomized controls and the
/// wealth they generate.  When costs are on, `market.prices` compounds from
/// impact-shifted mids.
struct ForwardPaths {
  PathSet market;
  std::vector<Matrix> controls;  // horizon entries of n_paths x d
  Matrix wealth;                 // n_paths x (horizon + 1)
  Index floor_hits = 0;
};

struct SolveDiagnostics {
  double forward_seconds = 0.0;
  std::vector<double> step_seconds;  // backward pass, index = time step
  double total_seconds = 0.0;
  Index floor_hits_forward = 0;
  Index floor_hits_backward = 0;
  int rank_fallbacks = 0;
};

struct SolveResult {
  Policy policy;
  SolveDiagnostics diagnostics;
};

using Deadline = std::optional<std::chrono::steady_clock::time_point>;

/// Simulate the market and roll wealth forward under uniformly randomized
/// admissible controls (one control substream per path).
ForwardPaths forward_simulate(const ProblemSpec& spec);

/// One backward-induction period: recompute step-n wealth under every grid
/// node, evaluate the fitted downstream value, and regress per node on the
/// step-n state features.  `next` is null for the terminal step.
StepValue backward_step(Index n, const ForwardPaths& paths, const StepValue* next,
                        const ControlGrid& grid, const ProblemSpec& spec,
                        SolveDiagnostics* diag = nullptr, const Deadline& deadline = {});

struct ExtractResult {
  Vector alpha;
  Index node = -1;          // discrete argmax the search started from
  int surrogate_evals = 0;  // surrogate evaluations spent on refinement
  bool underdetermined = false;
};

/// Reusable control maximizer; caches patches and surrogate bases per grid
/// node so replay loops do not rebuild them per query.
class ControlExtractor {
 public:
  ControlExtractor(const ControlGrid& grid, const MaximizerSpec& spec, double ridge_scale);

  ExtractResult extract(const Vector& cv_values);

 private:
  Index argmax_node(const Vector& cv) const;
  const LocalPatch& patch(Index j);
  const Matrix& patch_features(Index j);

  const ControlGrid* grid_;
  MaximizerSpec spec_;
  double ridge_scale_;
  FeatureMap local_map_;
  FeatureMap global_map_;
  Matrix global_features_;
  std::vector<char> patch_ready_;
  std::vector<char> patch_deficient_;
  std::vector<LocalPatch> patches_;
  std::vector<Matrix> patch_features_;
};

/// One-shot control extraction from a vector of node values.
ExtractResult extract_control(const Vector& cv_values, const ControlGrid& grid,
                              const MaximizerSpec& spec, double ridge_scale = 1e-6);

/// Full least squares Monte Carlo solve: forward pass, backward recursion,
/// policy assembly.  Throws BudgetExceeded when `deadline` passes mid-run.
SolveResult solve(const ProblemSpec& spec, const Deadline& deadline = {});

}  // namespace lsmc
