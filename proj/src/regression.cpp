#include "lsmc/regression.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>
#include <map>
#include <mutex>
#include <utility>

namespace lsmc {

namespace {

void emit_degree(Index dim, int g, Index axis, Eigen::RowVectorXi& row,
                 std::vector<Eigen::RowVectorXi>& out) {
  if (axis == dim - 1) {
    row[axis] = g;
    out.push_back(row);
    return;
  }
  for (int c = g; c >= 0; --c) {
    row[axis] = c;
    emit_degree(dim, g - c, axis + 1, row, out);
  }
}

}  // namespace

const Eigen::MatrixXi& monomial_exponents(Index dim, int degree) {
  if (dim < 1 || degree < 0) throw std::invalid_argument("monomial_exponents: bad arguments");
  static std::map<std::pair<Index, int>, Eigen::MatrixXi> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find({dim, degree});
  if (it != cache.end()) return it->second;

  std::vector<Eigen::RowVectorXi> rows;
  Eigen::RowVectorXi row(dim);
  for (int g = 0; g <= degree; ++g) emit_degree(dim, g, 0, row, rows);
  Eigen::MatrixXi table(static_cast<Index>(rows.size()), dim);
  for (Index r = 0; r < table.rows(); ++r) table.row(r) = rows[static_cast<std::size_t>(r)];
  return cache.emplace(std::make_pair(dim, degree), std::move(table)).first->second;
}

FeatureMap::FeatureMap(Index dim_in, int degree)
    : dim_in_(dim_in), degree_(degree), exponents_(&monomial_exponents(dim_in, degree)) {
  shift_ = Vector::Zero(dim_in);
  scale_ = Vector::Ones(dim_in);
}

FeatureMap FeatureMap::standardized(Index dim_in, int degree, const Matrix& sample) {
  if (sample.cols() != dim_in) throw std::invalid_argument("FeatureMap: sample width mismatch");
  FeatureMap map(dim_in, degree);
  if (sample.rows() > 1) {
    for (Index i = 0; i < dim_in; ++i) {
      const double mu = sample.col(i).mean();
      const double var =
          (sample.col(i).array() - mu).square().sum() / static_cast<double>(sample.rows() - 1);
      const double sd = std::sqrt(var);
      map.shift_[i] = mu;
      map.scale_[i] = (std::isfinite(sd) && sd > 0.0) ? sd : 1.0;
    }
  }
  return map;
}

void FeatureMap::set_standardization(const Vector& shift, const Vector& scale) {
  if (shift.size() != dim_in_ || scale.size() != dim_in_)
    throw std::invalid_argument("FeatureMap: standardization size mismatch");
  if ((scale.array() <= 0.0).any())
    throw std::invalid_argument("FeatureMap: scales must be positive");
  shift_ = shift;
  scale_ = scale;
}

Vector FeatureMap::operator()(const Vector& x) const {
  if (empty() || x.size() != dim_in_) throw std::invalid_argument("FeatureMap: input size mismatch");
  const Vector u = ((x - shift_).array() / scale_.array()).matrix();

  // powers[i][e] = u_i^e
  Matrix powers(dim_in_, degree_ + 1);
  powers.col(0).setOnes();
  for (int e = 1; e <= degree_; ++e)
    powers.col(e) = powers.col(e - 1).cwiseProduct(u);

  const auto& table = *exponents_;
  Vector phi(table.rows());
  for (Index k = 0; k < table.rows(); ++k) {
    double v = 1.0;
    for (Index i = 0; i < dim_in_; ++i) {
      const int e = table(k, i);
      if (e > 0) v *= powers(i, e);
    }
    phi[k] = v;
  }
  return phi;
}

Matrix FeatureMap::eval_rows(const Matrix& X) const {
  if (empty() || X.cols() != dim_in_) throw std::invalid_argument("FeatureMap: input size mismatch");
  Matrix out(X.rows(), dim_out());
  for (Index r = 0; r < X.rows(); ++r) out.row(r) = (*this)(X.row(r).transpose()).transpose();
  return out;
}

Vector poly_features(const Vector& x, int degree) {
  return FeatureMap(x.size(), degree)(x);
}

namespace {

LinearFit finish_fit(const Matrix& X, const Vector& y, Vector beta, double lambda,
                     FitDiagnostics diag) {
  LinearFit fit;
  fit.beta = std::move(beta);
  fit.ridge_lambda = lambda;
  diag.rss = (y - X * fit.beta).squaredNorm();
  fit.diag = diag;
  return fit;
}

}  // namespace

LinearFit fit_ols(const Matrix& X, const Vector& y) {
  if (X.rows() != y.size() || X.rows() == 0 || X.cols() == 0)
    throw std::invalid_argument("fit_ols: empty or mismatched design");
  const Index K = X.cols();

  const Matrix G = X.transpose() * X;
  const Vector b = X.transpose() * y;
  Eigen::LDLT<Matrix> ldlt(G);
  FitDiagnostics diag;
  // LDLT's solve glosses over near-zero pivots, so judge conditioning from
  // the pivot spread itself rather than rcond().
  const Vector D = ldlt.vectorD();
  const double dmax = D.maxCoeff();
  diag.rcond = dmax > 0.0 ? D.minCoeff() / dmax : 0.0;
  if (ldlt.info() == Eigen::Success && diag.rcond > 1e-12) {
    Vector beta = ldlt.solve(b);
    if (beta.allFinite()) return finish_fit(X, y, std::move(beta), 0.0, diag);
  }

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X);
  diag.used_fallback = true;
  diag.rank_deficient = cod.rank() < K;
  return finish_fit(X, y, cod.solve(y), 0.0, diag);
}

LinearFit fit_ridge(const Matrix& X, const Vector& y, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("fit_ridge: lambda must be finite and >= 0");
  if (lambda == 0.0) return fit_ols(X, y);
  if (X.rows() != y.size() || X.rows() == 0 || X.cols() == 0)
    throw std::invalid_argument("fit_ridge: empty or mismatched design");

  const Index M = X.rows(), K = X.cols();

  // Exactly one constant column stays unpenalized and untouched; the rest
  // are centered (when an intercept column exists) and scaled to unit sd so
  // the penalty is applied on comparable axes.
  Index c0 = -1;
  for (Index j = 0; j < K && c0 < 0; ++j)
    if (X.col(j).maxCoeff() == X.col(j).minCoeff() && X(0, j) != 0.0) c0 = j;

  Vector mu = Vector::Zero(K), sd = Vector::Ones(K);
  Matrix Z = X;
  for (Index j = 0; j < K; ++j) {
    if (j == c0) continue;
    if (c0 >= 0) mu[j] = X.col(j).mean();
    double s = 0.0;
    if (M > 1)
      s = std::sqrt((X.col(j).array() - mu[j]).square().sum() / static_cast<double>(M - 1));
    sd[j] = (std::isfinite(s) && s > 0.0) ? s : 1.0;
    Z.col(j) = (X.col(j).array() - mu[j]) / sd[j];
  }

  Matrix G = Z.transpose() * Z;
  for (Index j = 0; j < K; ++j)
    if (j != c0) G(j, j) += lambda;
  Eigen::LDLT<Matrix> ldlt(G);
  Vector bz = ldlt.solve(Z.transpose() * y);

  Vector beta = Vector::Zero(K);
  double intercept_shift = 0.0;
  for (Index j = 0; j < K; ++j) {
    if (j == c0) continue;
    beta[j] = bz[j] / sd[j];
    intercept_shift += bz[j] * mu[j] / sd[j];
  }
  if (c0 >= 0) beta[c0] = bz[c0] - intercept_shift / X(0, c0);

  FitDiagnostics diag;
  diag.rcond = ldlt.rcond();
  return finish_fit(X, y, std::move(beta), lambda, diag);
}

double predict(const LinearFit& fit, const Vector& x) {
  if (fit.map.empty()) {
    if (x.size() != fit.beta.size())
      throw std::invalid_argument("predict: raw feature size mismatch");
    return fit.beta.dot(x);
  }
  return fit.at_features(fit.map(x));
}

}  // namespace lsmc
