#pragma once

#include <limits>

#include "lsmc/types.hpp"

namespace lsmc {

/// Exponent table of the full polynomial basis of total degree <= degree in
/// `dim` variables, graded lexicographic: constant first, then the linear
/// terms, then quadratics (x0^2, x0*x1, ...), and so on.  One row per basis
/// function.
const Eigen::MatrixXi& monomial_exponents(Index dim, int degree);

/// Polynomial basis with an optional affine standardization of the inputs.
/// Standardizing keeps the normal equations well scaled when raw inputs live
/// on very different ranges (log-return states next to wealth levels).
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(Index dim_in, int degree);

  /// Shift/scale chosen from a sample of rows (mean and standard deviation
  /// per input; constant inputs keep scale one).
  static FeatureMap standardized(Index dim_in, int degree, const Matrix& sample);

  bool empty() const { return dim_in_ == 0; }
  Index dim_in() const { return dim_in_; }
  Index dim_out() const { return exponents_ ? exponents_->rows() : 0; }
  int degree() const { return degree_; }
  const Eigen::MatrixXi& exponents() const { return *exponents_; }
  const Vector& shift() const { return shift_; }
  const Vector& scale() const { return scale_; }
  void set_standardization(const Vector& shift, const Vector& scale);

  /// Feature vector of a single point.
  Vector operator()(const Vector& x) const;

  /// Row-wise features of a sample matrix (rows are points).
  Matrix eval_rows(const Matrix& X) const;

 private:
  Index dim_in_ = 0;
  int degree_ = 0;
  const Eigen::MatrixXi* exponents_ = nullptr;  // interned table, never freed
  Vector shift_, scale_;
};

/// Features of one point without constructing a map.
Vector poly_features(const Vector& x, int degree);

struct FitDiagnostics {
  double rss = std::numeric_limits<double>::quiet_NaN();
  double rcond = 0.0;        // reciprocal condition estimate of the solved system
  bool rank_deficient = false;
  bool used_fallback = false;  // normal equations abandoned for an orthogonal solve
};

struct LinearFit {
  FeatureMap map;  // empty when the fit was made on raw feature columns
  Vector beta;
  double ridge_lambda = 0.0;
  FitDiagnostics diag;

  double at_features(const Vector& phi) const { return beta.dot(phi); }
};

/// Least squares on explicit feature columns.  Solves the normal equations
/// via LDLT and falls back to a minimum-norm orthogonal solve when the
/// Gram matrix is ill conditioned; the fallback is flagged, not fatal.
LinearFit fit_ols(const Matrix& features, const Vector& targets);

/// Ridge regression with penalty `lambda` on all non-constant columns.
/// Columns are standardized internally and coefficients mapped back, so the
/// returned beta applies to the raw features.  lambda = 0 is exactly fit_ols.
LinearFit fit_ridge(const Matrix& features, const Vector& targets, double lambda);

/// Evaluate a fit at a raw input point (through fit.map when present,
/// otherwise x is taken as the feature vector itself).
double predict(const LinearFit& fit, const Vector& x);

}  // namespace lsmc
