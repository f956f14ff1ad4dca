#include "lsmc/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "lsmc/rng.hpp"
#include "lsmc/serialization.hpp"

namespace lsmc {

std::string to_string(MaximizerMode mode) {
  switch (mode) {
    case MaximizerMode::grid_only: return "grid_only";
    case MaximizerMode::local_adaptive: return "local_adaptive";
    case MaximizerMode::global_adaptive: return "global_adaptive";
  }
  throw std::invalid_argument("unknown maximizer mode");
}

MaximizerMode maximizer_mode_from_string(const std::string& s) {
  if (s == "grid_only") return MaximizerMode::grid_only;
  if (s == "local_adaptive") return MaximizerMode::local_adaptive;
  if (s == "global_adaptive") return MaximizerMode::global_adaptive;
  throw std::invalid_argument("unknown maximizer mode: " + s);
}

void MaximizerSpec::validate() const {
  if (global_degree < 1 || global_degree > 8)
    throw std::invalid_argument("maximizer: global_degree must be in [1, 8]");
  if (refine_depth < 0 || refine_depth > 40)
    throw std::invalid_argument("maximizer: refine_depth must be in [0, 40]");
}

void ProblemSpec::validate() const {
  market.validate();
  const Index d = n_assets();
  if (d < 1) throw std::invalid_argument("problem: no tradable assets");
  for (const Index a : asset_indices)
    if (a < 0 || a >= market.dim())
      throw std::invalid_argument("problem: asset index out of range");
  if (s0.size() != d || (s0.array() <= 0.0).any())
    throw std::invalid_argument("problem: s0 must hold one positive price per asset");
  if (z0 && z0->size() != market.dim())
    throw std::invalid_argument("problem: z0 size mismatch");
  if (horizon < 1) throw std::invalid_argument("problem: horizon must be >= 1");
  if (!(w0 > 0.0)) throw std::invalid_argument("problem: w0 must be positive");
  if (!std::isfinite(rf_per_period) || rf_per_period <= -1.0)
    throw std::invalid_argument("problem: rf_per_period must be finite and > -1");
  utility.validate();
  costs.validate();
  const double s = -std::log2(mesh);
  if (!(mesh > 0.0) || !(mesh < 1.0) || std::abs(s - std::lround(s)) > 1e-9)
    throw std::invalid_argument("problem: mesh must be 2^-s with s >= 1");
  maximizer.validate();
  if (state_degree < 1 || state_degree > 6)
    throw std::invalid_argument("problem: state_degree must be in [1, 6]");
  if (!(ridge_scale >= 0.0) || !std::isfinite(ridge_scale))
    throw std::invalid_argument("problem: ridge_scale must be finite and >= 0");
  if (n_paths < 2) throw std::invalid_argument("problem: n_paths must be >= 2");
  if (!(wealth_floor_frac > 0.0) || !(wealth_floor_frac < 1.0))
    throw std::invalid_argument("problem: wealth_floor_frac must lie in (0, 1)");
}

Vector Policy::continuation_values(Index n, const Vector& z, double w) const {
  if (n < 0 || n >= n_steps()) throw std::invalid_argument("policy: step out of range");
  const StepValue& sv = steps[static_cast<std::size_t>(n)];
  if (z.size() + 1 != sv.map.dim_in())
    throw std::invalid_argument("policy: state size mismatch");
  Vector x(sv.map.dim_in());
  x.head(z.size()) = z;
  x[z.size()] = w;
  return sv.betas.transpose() * sv.map(x);
}

Vector Policy::control_at(Index n, const Vector& z, double w) const {
  return extract_control(continuation_values(n, z, w), grid, maximizer, ridge_scale).alpha;
}

ForwardPaths forward_simulate(const ProblemSpec& spec) {
  spec.validate();
  const Index M = spec.n_paths, N = spec.horizon, d = spec.n_assets();
  const double floor = spec.wealth_floor();
  const bool impact = spec.costs.enabled && spec.costs.perm_impact_frac > 0.0;

  ForwardPaths fw;
  fw.market = simulate_paths(spec.market, spec.s0, spec.asset_indices, M, N, spec.seed, spec.z0);
  fw.controls.assign(static_cast<std::size_t>(N), Matrix(M, d));
  fw.wealth.resize(M, N + 1);
  fw.wealth.col(0).setConstant(spec.w0);

  Vector qprev(d), prices(d), rnext(d), alpha(d);
  for (Index m = 0; m < M; ++m) {
    std::mt19937_64 eng =
        rng::substream(spec.seed, rng::Stream::controls, static_cast<std::uint64_t>(m));
    qprev.setZero();
    prices = fw.market.prices[0].row(m);
    double w = spec.w0;
    for (Index n = 0; n < N; ++n) {
      alpha = draw_admissible_control(d, eng);
      fw.controls[static_cast<std::size_t>(n)].row(m) = alpha;
      rnext = fw.market.returns[static_cast<std::size_t>(n + 1)].row(m);
      const StepResult res =
          step_wealth(w, alpha, prices, rnext, spec.rf_per_period, spec.costs, qprev, floor);
      w = res.wealth;
      fw.wealth(m, n + 1) = w;
      if (res.floored) ++fw.floor_hits;
      qprev = res.positions;
      prices = res.post_prices.cwiseProduct((1.0 + rnext.array()).matrix());
      if (impact) fw.market.prices[static_cast<std::size_t>(n + 1)].row(m) = prices;
      else prices = fw.market.prices[static_cast<std::size_t>(n + 1)].row(m);
    }
  }
  return fw;
}

namespace {

int resolve_threads(int requested, Index work_items) {
  int t = requested;
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  if (t < 1) t = 1;
  return static_cast<int>(std::min<Index>(t, work_items));
}

// Evaluates v(z, w) = max_j fitted continuation value at precomputed states.
// The state-feature monomials split into a z-only part (fixed per path, built
// once) and a wealth power, so per-node evaluation is one scaled product and
// a GEMM against the coefficient matrix.
class NextValueEvaluator {
 public:
  NextValueEvaluator(const StepValue& next, const Matrix& z_next, double value_floor)
      : next_(&next), floor_(value_floor) {
    const auto& tab = next.map.exponents();
    const Index K = tab.rows();
    zdim_ = tab.cols() - 1;
    pat_of_k_.resize(static_cast<std::size_t>(K));
    wexp_of_k_.resize(static_cast<std::size_t>(K));

    std::map<std::vector<int>, int> ids;
    std::vector<std::vector<int>> pats;
    int max_zexp = 0;
    for (Index k = 0; k < K; ++k) {
      std::vector<int> zpat(static_cast<std::size_t>(zdim_));
      for (Index i = 0; i < zdim_; ++i) {
        zpat[static_cast<std::size_t>(i)] = tab(k, i);
        max_zexp = std::max(max_zexp, tab(k, i));
      }
      auto [it, fresh] = ids.try_emplace(zpat, static_cast<int>(pats.size()));
      if (fresh) pats.push_back(zpat);
      pat_of_k_[static_cast<std::size_t>(k)] = it->second;
      wexp_of_k_[static_cast<std::size_t>(k)] = tab(k, zdim_);
      max_wexp_ = std::max(max_wexp_, tab(k, zdim_));
    }

    const Index M = z_next.rows();
    z_monos_.resize(M, static_cast<Index>(pats.size()));
    Matrix upow(zdim_, max_zexp + 1);
    for (Index m = 0; m < M; ++m) {
      for (Index i = 0; i < zdim_; ++i) {
        const double u = (z_next(m, i) - next.map.shift()[i]) / next.map.scale()[i];
        upow(i, 0) = 1.0;
        for (int e = 1; e <= max_zexp; ++e) upow(i, e) = upow(i, e - 1) * u;
      }
      for (std::size_t p = 0; p < pats.size(); ++p) {
        double v = 1.0;
        for (Index i = 0; i < zdim_; ++i) v *= upow(i, pats[p][static_cast<std::size_t>(i)]);
        z_monos_(m, static_cast<Index>(p)) = v;
      }
    }
    wshift_ = next.map.shift()[zdim_];
    wscale_ = next.map.scale()[zdim_];
  }

  struct Scratch {
    Matrix wpow, phi, vals;
  };

  void eval(Index r0, Index r1, const Vector& wealth, Vector& out, Scratch& s) const {
    const Index B = r1 - r0;
    const Index K = next_->betas.rows();
    s.wpow.resize(B, max_wexp_ + 1);
    s.wpow.col(0).setOnes();
    if (max_wexp_ >= 1)
      s.wpow.col(1) = (wealth.segment(r0, B).array() - wshift_) / wscale_;
    for (int e = 2; e <= max_wexp_; ++e)
      s.wpow.col(e) = s.wpow.col(e - 1).cwiseProduct(s.wpow.col(1));

    s.phi.resize(B, K);
    for (Index k = 0; k < K; ++k)
      s.phi.col(k) = z_monos_.col(pat_of_k_[static_cast<std::size_t>(k)])
                         .segment(r0, B)
                         .cwiseProduct(s.wpow.col(wexp_of_k_[static_cast<std::size_t>(k)]));

    s.vals.noalias() = s.phi * next_->betas;
    for (Index i = 0; i < B; ++i) {
      const double v = s.vals.row(i).maxCoeff();
      out[r0 + i] = std::isfinite(v) ? std::max(v, floor_) : floor_;
    }
  }

 private:
  const StepValue* next_;
  double floor_;
  Index zdim_ = 0;
  int max_wexp_ = 0;
  std::vector<int> pat_of_k_, wexp_of_k_;
  Matrix z_monos_;
  double wshift_ = 0.0, wscale_ = 1.0;
};

constexpr Index kEvalChunk = 4096;

}  // namespace

StepValue backward_step(Index n, const ForwardPaths& fw, const StepValue* next,
                        const ControlGrid& grid, const ProblemSpec& spec, SolveDiagnostics* diag,
                        const Deadline& deadline) {
  const Index M = fw.market.n_paths;
  const Index N = spec.horizon;
  const Index d = spec.n_assets();
  const Index J = grid.size();
  const Index zdim = spec.market.dim();
  if (n < 0 || n >= N) throw std::invalid_argument("backward_step: step out of range");
  if (next == nullptr && n != N - 1)
    throw std::invalid_argument("backward_step: only the terminal step may omit `next`");
  const double floor = spec.wealth_floor();
  const double gamma = spec.utility.gamma;

  Matrix sample(M, zdim + 1);
  sample.leftCols(zdim) = fw.market.states[static_cast<std::size_t>(n)];
  sample.col(zdim) = fw.wealth.col(n);
  FeatureMap map = FeatureMap::standardized(zdim + 1, spec.state_degree, sample);
  const Matrix X = map.eval_rows(sample);
  const Index K = X.cols();

  const Matrix Xt = X.transpose();
  Eigen::LDLT<Matrix> ldlt(Xt * X);
  const Vector pivots = ldlt.vectorD();
  const double pivot_max = pivots.maxCoeff();
  const bool shared_fallback = ldlt.info() != Eigen::Success || pivot_max <= 0.0 ||
                               pivots.minCoeff() / pivot_max < 1e-12;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X);

  const double u_floor = crra_utility(floor, gamma);
  std::optional<NextValueEvaluator> ev;
  if (next) ev.emplace(*next, fw.market.states[static_cast<std::size_t>(n + 1)], u_floor);

  StepValue out;
  out.map = map;
  out.betas.resize(K, J);

  std::atomic<Index> floor_hits{0};
  std::atomic<int> fallbacks{0};
  std::atomic<bool> expired{false};

  auto worker = [&](Index j0, Index j1) {
    Vector wnew(M), y(M), qprev(d), prices(d), rnext(d), alpha(d);
    NextValueEvaluator::Scratch scratch;
    Index local_floor = 0;
    int local_fallback = 0;
    for (Index j = j0; j < j1 && !expired.load(std::memory_order_relaxed); ++j) {
      if (deadline && std::chrono::steady_clock::now() > *deadline) {
        expired.store(true, std::memory_order_relaxed);
        break;
      }
      alpha = grid.node(j);
      for (Index m = 0; m < M; ++m) {
        prices = fw.market.prices[static_cast<std::size_t>(n)].row(m);
        rnext = fw.market.returns[static_cast<std::size_t>(n + 1)].row(m);
        if (n == 0)
          qprev.setZero();
        else
          qprev = fw.controls[static_cast<std::size_t>(n - 1)].row(m).transpose().array() *
                  fw.wealth(m, n - 1) /
                  fw.market.prices[static_cast<std::size_t>(n - 1)].row(m).transpose().array();
        const StepResult res = step_wealth(fw.wealth(m, n), alpha, prices, rnext,
                                           spec.rf_per_period, spec.costs, qprev, floor);
        wnew[m] = res.wealth;
        if (res.floored) ++local_floor;
      }
      if (!next) {
        for (Index m = 0; m < M; ++m) y[m] = crra_utility(wnew[m], gamma);
      } else {
        for (Index r0 = 0; r0 < M; r0 += kEvalChunk)
          ev->eval(r0, std::min(M, r0 + kEvalChunk), wnew, y, scratch);
      }
      Vector beta;
      bool used_fallback = shared_fallback;
      if (!shared_fallback) {
        beta = ldlt.solve(Xt * y);
        if (!beta.allFinite()) {
          used_fallback = true;
        }
      }
      if (used_fallback) beta = cod.solve(y);
      if (used_fallback) ++local_fallback;
      out.betas.col(j) = beta;
    }
    floor_hits += local_floor;
    fallbacks += local_fallback;
  };

  const int threads = resolve_threads(spec.n_threads, J);
  if (threads <= 1) {
    worker(0, J);
  } else {
    std::vector<std::thread> pool;
    const Index per = (J + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const Index j0 = std::min<Index>(J, t * per);
      const Index j1 = std::min<Index>(J, j0 + per);
      if (j0 < j1) pool.emplace_back(worker, j0, j1);
    }
    for (auto& th : pool) th.join();
  }
  if (expired.load()) throw BudgetExceeded("backward_step: wall-clock budget exceeded");

  out.rank_fallbacks = fallbacks.load();
  if (diag) {
    diag->floor_hits_backward += floor_hits.load();
    diag->rank_fallbacks += out.rank_fallbacks;
  }
  return out;
}

ControlExtractor::ControlExtractor(const ControlGrid& grid, const MaximizerSpec& spec,
                                   double ridge_scale)
    : grid_(&grid), spec_(spec), ridge_scale_(ridge_scale) {
  spec_.validate();
  const Index d = grid.dim();
  local_map_ = FeatureMap(d, 2);
  if (spec_.mode == MaximizerMode::global_adaptive) {
    global_map_ = FeatureMap(d, spec_.global_degree);
    global_features_ = global_map_.eval_rows(grid.nodes());
  }
  patch_ready_.assign(static_cast<std::size_t>(grid.size()), 0);
  patch_deficient_.assign(static_cast<std::size_t>(grid.size()), 0);
  patches_.resize(static_cast<std::size_t>(grid.size()));
  patch_features_.resize(static_cast<std::size_t>(grid.size()));
}

Index ControlExtractor::argmax_node(const Vector& cv) const {
  Index best = 0;
  for (Index j = 1; j < cv.size(); ++j)
    if (cv[j] > cv[best]) best = j;  // ties keep the lexicographically smallest node
  return best;
}

const LocalPatch& ControlExtractor::patch(Index j) {
  auto& ready = patch_ready_[static_cast<std::size_t>(j)];
  if (!ready) {
    // Boundary patches can be too thin for the quadratic surrogate: with only
    // two coordinate levels along an axis the square term aliases the linear
    // one, and an exactly-determined fit interpolates regression noise
    // instead of averaging it.  Widen until the design has full column rank
    // plus a few rows of least squares slack, or the patch spans the grid.
    const Index want = local_map_.dim_out();
    const Index slack = 2 * grid_->dim();
    LocalPatch p = local_patch(*grid_, j);
    Matrix feats = local_map_.eval_rows(p.nodes);
    auto healthy = [&] {
      if (static_cast<Index>(p.node_indices.size()) < want + slack) return false;
      return Eigen::ColPivHouseholderQR<Matrix>(feats).rank() >= want;
    };
    for (int radius = 2;
         !healthy() && static_cast<Index>(p.node_indices.size()) < grid_->size(); ++radius) {
      p = local_patch(*grid_, j, radius);
      feats = local_map_.eval_rows(p.nodes);
    }
    patch_deficient_[static_cast<std::size_t>(j)] =
        Eigen::ColPivHouseholderQR<Matrix>(feats).rank() < want ? 1 : 0;
    patches_[static_cast<std::size_t>(j)] = std::move(p);
    patch_features_[static_cast<std::size_t>(j)] = std::move(feats);
    ready = 1;
  }
  return patches_[static_cast<std::size_t>(j)];
}

const Matrix& ControlExtractor::patch_features(Index j) {
  patch(j);
  return patch_features_[static_cast<std::size_t>(j)];
}

ExtractResult ControlExtractor::extract(const Vector& cv) {
  if (cv.size() != grid_->size())
    throw std::invalid_argument("extract_control: value count does not match the grid");
  ExtractResult res;
  res.node = argmax_node(cv);
  res.alpha = grid_->node(res.node);
  if (spec_.mode == MaximizerMode::grid_only) return res;

  const LocalPatch& box = patch(res.node);

  LinearFit fit;
  const FeatureMap* map = nullptr;
  if (spec_.mode == MaximizerMode::local_adaptive) {
    const Matrix& Xp = patch_features(res.node);
    Vector y(Xp.rows());
    for (Index r = 0; r < y.size(); ++r)
      y[r] = cv[box.node_indices[static_cast<std::size_t>(r)]];
    y.array() -= y.mean();  // centered values, same argmax, better-scaled fit
    fit = fit_ridge(Xp, y, ridge_scale_ * static_cast<double>(Xp.rows()));
    res.underdetermined = patch_deficient_[static_cast<std::size_t>(res.node)] != 0;
    map = &local_map_;
  } else {
    fit = fit_ols(global_features_, cv);
    res.underdetermined = fit.diag.rank_deficient;
    map = &global_map_;
  }

  Vector best = res.alpha;
  double vbest = fit.at_features((*map)(best));
  res.surrogate_evals = 1;
  for (int p = 1; p <= spec_.refine_depth; ++p) {
    const Matrix cands = refine_grid(best, grid_->mesh(), p, box);
    Vector winner = best;
    double vwin = vbest;
    for (Index r = 0; r < cands.rows(); ++r) {
      Vector c = cands.row(r);
      if ((c - best).cwiseAbs().maxCoeff() == 0.0) continue;  // center already scored
      const double v = fit.at_features((*map)(c));
      ++res.surrogate_evals;
      if (v > vwin || (v == vwin && lex_less(c, winner))) {
        vwin = v;
        winner = c;
      }
    }
    best = winner;
    vbest = vwin;
  }
  res.alpha = best;
  return res;
}

ExtractResult extract_control(const Vector& cv_values, const ControlGrid& grid,
                              const MaximizerSpec& spec, double ridge_scale) {
  ControlExtractor ex(grid, spec, ridge_scale);
  return ex.extract(cv_values);
}

SolveResult solve(const ProblemSpec& spec, const Deadline& deadline) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto secs_since = [](std::chrono::steady_clock::time_point a) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
  };

  SolveResult out;
  out.diagnostics.step_seconds.assign(static_cast<std::size_t>(spec.horizon), 0.0);

  const ControlGrid grid = build_simplex_grid(spec.n_assets(), spec.mesh);
  const ForwardPaths fw = forward_simulate(spec);
  out.diagnostics.forward_seconds = secs_since(t0);
  out.diagnostics.floor_hits_forward = fw.floor_hits;
  if (deadline && std::chrono::steady_clock::now() > *deadline)
    throw BudgetExceeded("solve: wall-clock budget exceeded after forward pass");

  out.policy.grid = grid;
  out.policy.maximizer = spec.maximizer;
  out.policy.ridge_scale = spec.ridge_scale;
  out.policy.steps.resize(static_cast<std::size_t>(spec.horizon));
  for (Index n = spec.horizon - 1; n >= 0; --n) {
    const auto ts = std::chrono::steady_clock::now();
    const StepValue* next =
        n + 1 < spec.horizon ? &out.policy.steps[static_cast<std::size_t>(n + 1)] : nullptr;
    out.policy.steps[static_cast<std::size_t>(n)] =
        backward_step(n, fw, next, grid, spec, &out.diagnostics, deadline);
    out.diagnostics.step_seconds[static_cast<std::size_t>(n)] = secs_since(ts);
  }

  out.policy.spec_digest = spec_digest(spec);
  out.diagnostics.total_seconds = secs_since(t0);
  return out;
}

}  // namespace lsmc
