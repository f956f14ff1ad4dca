#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lsmc/types.hpp"

namespace lsmc {

/// First-order vector autoregression on log returns,
///   x_t = intercept + coeff * x_{t-1} + eps_t,  eps_t ~ N(0, resid_cov).
struct VarModel {
  Vector intercept;
  Matrix coeff;
  Matrix resid_cov;
  Matrix resid_factor;  // lower triangular, resid_factor * resid_factor^T = resid_cov
  std::vector<std::string> names;

  Index dim() const { return intercept.size(); }

  /// Fixed point (I - coeff)^-1 intercept; falls back to the intercept when
  /// I - coeff is numerically singular.
  Vector stationary_mean() const;

  /// Shape and finiteness checks; throws std::invalid_argument.
  void validate() const;
};

/// Lower-triangular factor of a PSD matrix.  Plain Cholesky first, then
/// jittered retries, then a clamped decomposition that zeroes non-PD
/// directions, so marginally indefinite covariances (rounding) still factor.
Matrix psd_factor(const Matrix& cov);

/// Equation-by-equation least squares of x_t on [1, x_{t-1}].  Residual
/// covariance uses denominator max(1, T_obs - 1 - (dim + 1)).  Throws
/// CalibrationError on singular designs (naming the offending series) or too
/// few rows, std::invalid_argument on non-finite input.
VarModel calibrate_var(const Matrix& log_returns, std::vector<std::string> names = {});

/// Simulated market panels.  Index n runs over time, row m over paths.
struct PathSet {
  Index n_paths = 0;
  Index n_steps = 0;
  std::vector<Index> asset_indices;     // which model series are tradable
  std::vector<Matrix> states;           // n_steps+1 entries of n_paths x dim
  std::vector<Matrix> returns;          // n_steps+1 entries of n_paths x n_assets (simple)
  std::vector<Matrix> prices;           // n_steps+1 entries of n_paths x n_assets

  Index n_assets() const { return static_cast<Index>(asset_indices.size()); }
};

/// Simulate n_paths state/return/price panels over n_steps periods.  Every
/// path draws from its own substream of `seed`, so panels are independent of
/// path evaluation order.  Z_0 defaults to the stationary mean; prices start
/// at s0 and compound the simple returns exp(x) - 1 of the tradable series.
PathSet simulate_paths(const VarModel& model, const Vector& s0,
                       const std::vector<Index>& asset_indices, Index n_paths, Index n_steps,
                       std::uint64_t seed, const std::optional<Vector>& z0 = std::nullopt);

/// Uniform draw from the admissible weight set {a >= 0, sum a <= 1}
/// (flat Dirichlet over the d + 1 simplex corners, cash dropped).
Vector draw_admissible_control(Index d, std::mt19937_64& eng);

/// Small stable VAR for tests and benchmarks: mildly autocorrelated series
/// with monthly-equity scale moments.  The last n_predictors series carry no
/// drift, feed the others, and are meant to stay untraded.
VarModel make_synthetic_var(Index dim, std::uint64_t seed, Index n_predictors = 0);

}  // namespace lsmc
