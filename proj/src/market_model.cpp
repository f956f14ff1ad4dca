#include "lsmc/market_model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "lsmc/rng.hpp"

namespace lsmc {

Vector VarModel::stationary_mean() const {
  const Index n = dim();
  Eigen::FullPivLU<Matrix> lu(Matrix::Identity(n, n) - coeff);
  if (!lu.isInvertible()) return intercept;
  return lu.solve(intercept);
}

void VarModel::validate() const {
  const Index n = dim();
  if (n < 1) throw std::invalid_argument("var model: empty model");
  if (coeff.rows() != n || coeff.cols() != n || resid_cov.rows() != n || resid_cov.cols() != n)
    throw std::invalid_argument("var model: inconsistent dimensions");
  if (!intercept.allFinite() || !coeff.allFinite() || !resid_cov.allFinite())
    throw std::invalid_argument("var model: non-finite parameters");
  const double scale = std::max(1.0, resid_cov.cwiseAbs().maxCoeff());
  if ((resid_cov - resid_cov.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw std::invalid_argument("var model: residual covariance not symmetric");
  if ((resid_cov.diagonal().array() < -1e-12 * scale).any())
    throw std::invalid_argument("var model: negative residual variance");
  if (!names.empty() && static_cast<Index>(names.size()) != n)
    throw std::invalid_argument("var model: name count mismatch");
}

Matrix psd_factor(const Matrix& cov) {
  const Index n = cov.rows();
  if (cov.isZero(0.0)) return Matrix::Zero(n, n);
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const double base = std::max(cov.trace() / static_cast<double>(n), 1.0) * 1e-12;
  for (int attempt = 1; attempt <= 3; ++attempt) {
    const double jitter = base * std::pow(10.0, attempt);
    llt.compute(cov + jitter * Matrix::Identity(n, n));
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }

  // Clamped outer-product Cholesky: non-PD pivots collapse to zero columns,
  // so a zero covariance yields a zero factor instead of failing.
  Matrix L = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double diag = cov(j, j) - L.row(j).head(j).squaredNorm();
    L(j, j) = diag > 0.0 ? std::sqrt(diag) : 0.0;
    if (L(j, j) <= 0.0) continue;
    for (Index i = j + 1; i < n; ++i) {
      const double off = cov(i, j) - L.row(i).head(j).dot(L.row(j).head(j));
      L(i, j) = off / L(j, j);
    }
  }
  return L;
}

VarModel calibrate_var(const Matrix& log_returns, std::vector<std::string> names) {
  const Index T = log_returns.rows();
  const Index dim = log_returns.cols();
  if (dim < 1) throw CalibrationError("calibrate_var: no series");
  if (!log_returns.allFinite()) throw std::invalid_argument("calibrate_var: non-finite input");
  if (T < dim + 2)
    throw CalibrationError("calibrate_var: need at least dim + 2 observations, got " +
                           std::to_string(T));
  if (names.empty())
    for (Index i = 0; i < dim; ++i) names.push_back("series_" + std::to_string(i));
  if (static_cast<Index>(names.size()) != dim)
    throw std::invalid_argument("calibrate_var: name count mismatch");

  const Index rows = T - 1, K = dim + 1;
  Matrix X(rows, K);
  X.col(0).setOnes();
  X.rightCols(dim) = log_returns.topRows(rows);
  const Matrix Y = log_returns.bottomRows(rows);

  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (qr.rank() < K) {
    std::string offenders;
    const auto& perm = qr.colsPermutation().indices();
    for (Index p = qr.rank(); p < K; ++p) {
      const Index col = perm[p];
      offenders += offenders.empty() ? "" : ", ";
      offenders += col == 0 ? "intercept" : names[static_cast<std::size_t>(col - 1)];
    }
    throw CalibrationError("calibrate_var: singular design (collinear: " + offenders + ")");
  }

  const Matrix B = qr.solve(Y);  // K x dim, one column per equation

  VarModel model;
  model.names = std::move(names);
  model.intercept = B.row(0).transpose();
  model.coeff = B.bottomRows(dim).transpose();

  const Matrix E = Y - X * B;
  const double denom = std::max<Index>(1, rows - K);
  model.resid_cov = (E.transpose() * E) / denom;
  model.resid_factor = psd_factor(model.resid_cov);
  return model;
}

PathSet simulate_paths(const VarModel& model, const Vector& s0,
                       const std::vector<Index>& asset_indices, Index n_paths, Index n_steps,
                       std::uint64_t seed, const std::optional<Vector>& z0) {
  model.validate();
  const Index dim = model.dim();
  const Index d = static_cast<Index>(asset_indices.size());
  if (d < 1 || d > dim) throw std::invalid_argument("simulate_paths: bad asset index count");
  for (const Index a : asset_indices)
    if (a < 0 || a >= dim) throw std::invalid_argument("simulate_paths: asset index out of range");
  if (s0.size() != d || (s0.array() <= 0.0).any())
    throw std::invalid_argument("simulate_paths: initial prices must be positive, one per asset");
  if (n_paths < 1 || n_steps < 1)
    throw std::invalid_argument("simulate_paths: need at least one path and one step");

  const Vector z_init = z0 ? *z0 : model.stationary_mean();
  if (z_init.size() != dim) throw std::invalid_argument("simulate_paths: z0 size mismatch");

  PathSet out;
  out.n_paths = n_paths;
  out.n_steps = n_steps;
  out.asset_indices = asset_indices;
  out.states.assign(static_cast<std::size_t>(n_steps + 1), Matrix(n_paths, dim));
  out.returns.assign(static_cast<std::size_t>(n_steps + 1), Matrix(n_paths, d));
  out.prices.assign(static_cast<std::size_t>(n_steps + 1), Matrix(n_paths, d));

  Vector x(dim), eps(dim), r(d);
  for (Index m = 0; m < n_paths; ++m) {
    rng::NormalSampler normal(rng::substream(seed, rng::Stream::market, static_cast<std::uint64_t>(m)));
    x = z_init;
    out.states[0].row(m) = x;
    for (Index i = 0; i < d; ++i) r[i] = std::expm1(x[asset_indices[static_cast<std::size_t>(i)]]);
    out.returns[0].row(m) = r;
    out.prices[0].row(m) = s0;

    for (Index n = 1; n <= n_steps; ++n) {
      for (Index i = 0; i < dim; ++i) eps[i] = normal();
      x = model.intercept + model.coeff * x + model.resid_factor * eps;
      out.states[static_cast<std::size_t>(n)].row(m) = x;
      for (Index i = 0; i < d; ++i)
        r[i] = std::expm1(x[asset_indices[static_cast<std::size_t>(i)]]);
      out.returns[static_cast<std::size_t>(n)].row(m) = r;
      out.prices[static_cast<std::size_t>(n)].row(m) =
          out.prices[static_cast<std::size_t>(n - 1)].row(m).cwiseProduct(
              (1.0 + r.array()).matrix().transpose());
    }
  }
  return out;
}

Vector draw_admissible_control(Index d, std::mt19937_64& eng) {
  if (d < 1) throw std::invalid_argument("draw_admissible_control: d must be >= 1");
  Vector e(d + 1);
  for (Index i = 0; i <= d; ++i) e[i] = -std::log1p(-rng::uniform01(eng));
  const double total = e.sum();
  if (!(total > 0.0) || !std::isfinite(total))
    return Vector::Constant(d, 1.0 / static_cast<double>(d + 1));
  return e.head(d) / total;
}

VarModel make_synthetic_var(Index dim, std::uint64_t seed, Index n_predictors) {
  if (dim < 1 || n_predictors < 0 || n_predictors >= dim)
    throw std::invalid_argument("make_synthetic_var: bad dimensions");
  std::mt19937_64 eng = rng::substream(seed, rng::Stream::fixture, static_cast<std::uint64_t>(dim));
  auto u = [&eng] { return rng::uniform01(eng); };

  const Index n_assets = dim - n_predictors;
  Matrix A = Matrix::Zero(dim, dim);
  Vector mean(dim), vol(dim);
  for (Index i = 0; i < n_assets; ++i) {
    A(i, i) = 0.05 + 0.10 * u();
    mean[i] = 0.003 + 0.004 * u();
    vol[i] = 0.025 + 0.020 * u();
    if (n_predictors > 0) {
      const Index p = n_assets + (i % n_predictors);
      A(i, p) = 0.20 + 0.20 * u();
    }
  }
  for (Index p = n_assets; p < dim; ++p) {
    A(p, p) = 0.40 + 0.20 * u();
    mean[p] = 0.0;
    vol[p] = 0.015 + 0.010 * u();
  }

  const double rho = 0.20 + 0.10 * u();
  Matrix corr = Matrix::Identity(dim, dim);
  for (Index i = 0; i < n_assets; ++i)
    for (Index j = 0; j < n_assets; ++j)
      if (i != j) corr(i, j) = rho;

  VarModel model;
  model.coeff = A;
  model.intercept = (Matrix::Identity(dim, dim) - A) * mean;
  model.resid_cov = vol.asDiagonal() * corr * vol.asDiagonal();
  model.resid_factor = psd_factor(model.resid_cov);
  for (Index i = 0; i < n_assets; ++i) model.names.push_back("asset_" + std::to_string(i));
  for (Index p = 0; p < n_predictors; ++p) model.names.push_back("factor_" + std::to_string(p));
  return model;
}

}  // namespace lsmc
