#include "lsmc/evaluation.hpp"

#include <cmath>

#include "lsmc/rng.hpp"
#include "lsmc/solver.hpp"

namespace lsmc {

void UtilitySpec::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("utility: gamma must be finite and positive");
}

double crra_utility(double w, double gamma) {
  if (!(w > 0.0)) throw std::domain_error("crra_utility: wealth must be positive");
  if (gamma == 1.0) return std::log(w);
  return std::pow(w, 1.0 - gamma) / (1.0 - gamma);
}

double crra_inverse(double u, double gamma) {
  if (gamma == 1.0) return std::exp(u);
  const double x = u * (1.0 - gamma);
  if (!(x > 0.0)) throw std::domain_error("crra_inverse: value outside the utility range");
  return std::pow(x, 1.0 / (1.0 - gamma));
}

double cer_bp(const Vector& terminal_wealth, double gamma, Index n_periods, double w0) {
  if (terminal_wealth.size() < 1) throw std::invalid_argument("cer_bp: no samples");
  if (n_periods < 1) throw std::invalid_argument("cer_bp: n_periods must be >= 1");
  if (!(w0 > 0.0)) throw std::invalid_argument("cer_bp: w0 must be positive");
  double mean_u = 0.0;
  for (Index m = 0; m < terminal_wealth.size(); ++m)
    mean_u += crra_utility(terminal_wealth[m], gamma);
  mean_u /= static_cast<double>(terminal_wealth.size());
  const double ce = crra_inverse(mean_u, gamma);
  return 1e4 * (std::pow(ce / w0, 1.0 / static_cast<double>(n_periods)) - 1.0);
}

namespace {

struct ControlProvider {
  virtual ~ControlProvider() = default;
  virtual void start_path(Index m) { (void)m; }
  virtual Vector control(Index n, const Vector& z, double w) = 0;
};

struct PolicyProvider final : ControlProvider {
  const Policy* policy;
  ControlExtractor extractor;

  PolicyProvider(const Policy& p)
      : policy(&p), extractor(p.grid, p.maximizer, p.ridge_scale) {}

  Vector control(Index n, const Vector& z, double w) override {
    return extractor.extract(policy->continuation_values(n, z, w)).alpha;
  }
};

struct RandomProvider final : ControlProvider {
  std::uint64_t seed;
  Index d;
  std::mt19937_64 eng;

  RandomProvider(std::uint64_t seed_in, Index d_in) : seed(seed_in), d(d_in) {}

  void start_path(Index m) override {
    eng = rng::substream(seed, rng::Stream::controls, static_cast<std::uint64_t>(m));
  }
  Vector control(Index, const Vector&, double) override {
    return draw_admissible_control(d, eng);
  }
};

struct FixedProvider final : ControlProvider {
  Vector alpha;
  explicit FixedProvider(Vector a) : alpha(std::move(a)) {}
  Vector control(Index, const Vector&, double) override { return alpha; }
};

EvalReport replay_core(const ProblemSpec& spec, std::uint64_t eval_seed, Index n_eval_paths,
                       ControlProvider& provider, bool mean_alpha0) {
  spec.validate();
  if (eval_seed == spec.seed)
    throw std::invalid_argument("replay: eval seed must differ from the solve seed");
  if (n_eval_paths < 2) throw std::invalid_argument("replay: need at least two paths");

  const Index N = spec.horizon, d = spec.n_assets();
  const double floor = spec.wealth_floor();
  const PathSet sim = simulate_paths(spec.market, spec.s0, spec.asset_indices, n_eval_paths, N,
                                     eval_seed, spec.z0);

  EvalReport report;
  report.n_eval_paths = n_eval_paths;
  report.n_periods = N;
  report.eval_seed = eval_seed;

  Vector terminal(n_eval_paths);
  Vector alpha0_sum = Vector::Zero(d);
  Vector prices(d), rnext(d), qprev(d);
  for (Index m = 0; m < n_eval_paths; ++m) {
    provider.start_path(m);
    double w = spec.w0;
    qprev.setZero();
    prices = sim.prices[0].row(m);
    for (Index n = 0; n < N; ++n) {
      const Vector alpha = provider.control(n, sim.states[static_cast<std::size_t>(n)].row(m), w);
      if (n == 0) alpha0_sum += alpha;
      rnext = sim.returns[static_cast<std::size_t>(n + 1)].row(m);
      const StepResult res =
          step_wealth(w, alpha, prices, rnext, spec.rf_per_period, spec.costs, qprev, floor);
      w = res.wealth;
      if (res.floored) ++report.floor_activations;
      qprev = res.positions;
      prices = res.post_prices.cwiseProduct((1.0 + rnext.array()).matrix());
    }
    terminal[m] = w;
  }

  report.cer_bp = cer_bp(terminal, spec.utility.gamma, N, spec.w0);
  report.mean_terminal_wealth = terminal.mean();
  report.stdev_terminal_wealth =
      std::sqrt((terminal.array() - terminal.mean()).square().sum() /
                static_cast<double>(n_eval_paths - 1));
  if (mean_alpha0) report.initial_allocation = alpha0_sum / static_cast<double>(n_eval_paths);
  return report;
}

}  // namespace

EvalReport replay_policy(const Policy& policy, const ProblemSpec& spec, std::uint64_t eval_seed,
                         Index n_eval_paths) {
  if (policy.n_steps() != spec.horizon)
    throw std::invalid_argument("replay_policy: policy horizon does not match the problem");
  if (policy.grid.dim() != spec.n_assets())
    throw std::invalid_argument("replay_policy: policy grid dimension does not match the problem");
  PolicyProvider provider(policy);
  EvalReport report = replay_core(spec, eval_seed, n_eval_paths, provider, false);

  const Vector z0 = spec.z0 ? *spec.z0 : spec.market.stationary_mean();
  report.initial_allocation = policy.control_at(0, z0, spec.w0);
  return report;
}

EvalReport replay_random(const ProblemSpec& spec, std::uint64_t eval_seed, Index n_eval_paths) {
  RandomProvider provider(eval_seed, spec.n_assets());
  return replay_core(spec, eval_seed, n_eval_paths, provider, true);
}

EvalReport replay_fixed(const ProblemSpec& spec, const Vector& alpha, std::uint64_t eval_seed,
                        Index n_eval_paths) {
  if (alpha.size() != spec.n_assets())
    throw std::invalid_argument("replay_fixed: allocation size mismatch");
  if (!in_admissible_set(alpha))
    throw std::invalid_argument("replay_fixed: allocation outside the admissible set");
  FixedProvider provider(alpha);
  EvalReport report = replay_core(spec, eval_seed, n_eval_paths, provider, false);
  report.initial_allocation = alpha;
  return report;
}

}  // namespace lsmc
