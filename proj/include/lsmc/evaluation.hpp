#pragma once

#include <cstdint>

#include "lsmc/types.hpp"

namespace lsmc {

struct Policy;
struct ProblemSpec;

/// Constant relative risk aversion preferences; gamma = 1 is log utility.
struct UtilitySpec {
  double gamma = 10.0;
  void validate() const;
};

/// U(w) = w^(1-gamma) / (1-gamma), or log(w) at gamma = 1.
/// Throws std::domain_error for w <= 0.
double crra_utility(double w, double gamma);

/// Inverse of crra_utility; throws std::domain_error outside the range.
double crra_inverse(double u, double gamma);

/// Certainty-equivalent return per period, in basis points: the flat periodic
/// return on w0 whose terminal utility matches the sample mean utility.
double cer_bp(const Vector& terminal_wealth, double gamma, Index n_periods, double w0);

struct EvalReport {
  double cer_bp = 0.0;
  double mean_terminal_wealth = 0.0;
  double stdev_terminal_wealth = 0.0;
  Index n_eval_paths = 0;
  Index n_periods = 0;
  std::uint64_t eval_seed = 0;
  Index floor_activations = 0;
  Vector initial_allocation;  // policy weights at the initial state (mean step-0 draw for the random baseline)
};

/// Replay a solved policy on a fresh panel of eval_seed paths.  The eval seed
/// must differ from the solve seed; in-sample replay is refused.
EvalReport replay_policy(const Policy& policy, const ProblemSpec& spec, std::uint64_t eval_seed,
                         Index n_eval_paths);

/// Baseline: a fresh admissible control drawn uniformly at every step.
EvalReport replay_random(const ProblemSpec& spec, std::uint64_t eval_seed, Index n_eval_paths);

/// Baseline: rebalance to the same weights every period (all-cash when
/// alpha sums to zero).
EvalReport replay_fixed(const ProblemSpec& spec, const Vector& alpha, std::uint64_t eval_seed,
                        Index n_eval_paths);

}  // namespace lsmc
