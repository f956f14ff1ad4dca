#include "lsmc/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lsmc/csv.hpp"
#include "lsmc/serialization.hpp"
#include "lsmc/toml.hpp"

namespace lsmc {

namespace {

const std::set<std::string> kKnownKeys = {
    "market.kind", "market.path", "market.assets", "market.s0", "market.synthetic_dim",
    "market.synthetic_predictors", "market.synthetic_seed",
    "problem.horizon", "problem.horizons", "problem.gamma", "problem.gammas", "problem.w0",
    "problem.rf_annual", "problem.periods_per_year",
    "grid.delta", "grid.deltas", "grid.refine_depth",
    "solver.n_paths", "solver.seed", "solver.mode", "solver.modes", "solver.state_degree",
    "solver.global_degree", "solver.ridge_scale", "solver.n_threads",
    "costs.enabled", "costs.tc_rate", "costs.k", "costs.spread", "costs.perm_impact_frac",
    "costs.timing",
    "eval.seed", "eval.n_paths",
    "bench.dims",
    "output.dir",
};

std::string dir_of(const std::string& path) {
  const std::size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  return base_dir + "/" + path;
}

// scalar key or array key, at least one entry
template <typename T, typename Scalar, typename Array>
std::vector<T> axis(const TomlTable& t, const std::string& scalar_key,
                    const std::string& array_key, T fallback, Scalar get_scalar, Array get_array) {
  if (t.has(array_key)) {
    std::vector<T> out;
    for (const auto& v : get_array(array_key)) out.push_back(static_cast<T>(v));
    if (out.empty()) throw ConfigError("config: '" + array_key + "' must not be empty");
    return out;
  }
  return {get_scalar(scalar_key, fallback)};
}

void check_mesh(double delta) {
  const double s = -std::log2(delta);
  if (!(delta > 0.0) || !(delta < 1.0) || std::abs(s - std::lround(s)) > 1e-9)
    throw ConfigError("config: grid delta " + std::to_string(delta) +
                      " is not 2^-s for integer s >= 1");
}

}  // namespace

ProblemSpec RunConfig::make_problem(double delta, double gamma, Index horizon,
                                    const std::string& mode) const {
  ProblemSpec spec;
  spec.market = market;
  spec.asset_indices = asset_indices;
  spec.s0 = s0;
  spec.horizon = horizon;
  spec.w0 = w0;
  spec.rf_per_period = rf_per_period();
  spec.utility.gamma = gamma;
  spec.costs = costs;
  spec.mesh = delta;
  spec.maximizer.mode = maximizer_mode_from_string(mode);
  spec.maximizer.global_degree = global_degree;
  spec.maximizer.refine_depth = refine_depth;
  spec.state_degree = state_degree;
  spec.ridge_scale = ridge_scale;
  spec.n_paths = n_paths;
  spec.seed = seed;
  spec.n_threads = n_threads;
  return spec;
}

ProblemSpec RunConfig::make_default_problem() const {
  return make_problem(deltas.front(), gammas.front(), horizons.front(), modes.front());
}

RunConfig load_config(const std::string& path) {
  const TomlTable t = TomlTable::parse_file(path);
  for (const auto& key : t.keys())
    if (!kKnownKeys.count(key)) throw ConfigError("config: unknown key '" + key + "'");

  RunConfig cfg;
  const std::string base = dir_of(path);

  cfg.market_kind = t.get_string("market.kind", "synthetic");
  cfg.synthetic_seed = static_cast<std::uint64_t>(t.get_int("market.synthetic_seed", 7));

  std::vector<std::string> asset_names = t.get_string_array("market.assets");
  if (cfg.market_kind == "csv") {
    const PriceTable prices = read_price_csv(resolve(base, t.require_string("market.path")));
    cfg.market = calibrate_var(log_returns(prices), prices.tickers);
    if (asset_names.empty()) asset_names = prices.tickers;
    // initial prices default to the latest close of each traded column
    if (!t.has("market.s0")) {
      cfg.s0.resize(static_cast<Index>(asset_names.size()));
      for (std::size_t i = 0; i < asset_names.size(); ++i) {
        const auto it = std::find(prices.tickers.begin(), prices.tickers.end(), asset_names[i]);
        if (it != prices.tickers.end())
          cfg.s0[static_cast<Index>(i)] =
              prices.prices(prices.prices.rows() - 1, it - prices.tickers.begin());
      }
    }
  } else if (cfg.market_kind == "model_json") {
    cfg.market = load_json(resolve(base, t.require_string("market.path"))).get<VarModel>();
    if (asset_names.empty()) asset_names = cfg.market.names;
  } else if (cfg.market_kind == "synthetic") {
    const Index dim = static_cast<Index>(t.get_int("market.synthetic_dim", 3));
    const Index preds = static_cast<Index>(t.get_int("market.synthetic_predictors", 1));
    cfg.market = make_synthetic_var(dim, cfg.synthetic_seed, preds);
    if (asset_names.empty())
      asset_names.assign(cfg.market.names.begin(), cfg.market.names.begin() + (dim - preds));
  } else {
    throw ConfigError("config: market.kind must be csv, model_json, or synthetic");
  }

  if (asset_names.empty()) throw ConfigError("config: no tradable assets configured");
  std::set<std::string> seen;
  for (const auto& name : asset_names) {
    if (!seen.insert(name).second)
      throw ConfigError("config: asset '" + name + "' listed twice");
    const auto it = std::find(cfg.market.names.begin(), cfg.market.names.end(), name);
    if (it == cfg.market.names.end())
      throw ConfigError("config: asset '" + name + "' is not a series of the market model");
    cfg.asset_indices.push_back(it - cfg.market.names.begin());
  }

  if (t.has("market.s0")) {
    const auto raw = t.get_double_array("market.s0");
    if (raw.size() != asset_names.size())
      throw ConfigError("config: market.s0 must list one price per traded asset");
    cfg.s0.resize(static_cast<Index>(raw.size()));
    for (std::size_t i = 0; i < raw.size(); ++i) cfg.s0[static_cast<Index>(i)] = raw[i];
  } else if (cfg.s0.size() == 0) {
    cfg.s0 = Vector::Constant(static_cast<Index>(asset_names.size()), 100.0);
  }
  if ((cfg.s0.array() <= 0.0).any()) throw ConfigError("config: market.s0 must be positive");

  cfg.horizons = axis<Index>(
      t, "problem.horizon", "problem.horizons", Index{6},
      [&](const std::string& k, Index f) { return static_cast<Index>(t.get_int(k, f)); },
      [&](const std::string& k) { return t.get_int_array(k); });
  cfg.gammas = axis<double>(
      t, "problem.gamma", "problem.gammas", 10.0,
      [&](const std::string& k, double f) { return t.get_double(k, f); },
      [&](const std::string& k) { return t.get_double_array(k); });
  cfg.deltas = axis<double>(
      t, "grid.delta", "grid.deltas", 0.125,
      [&](const std::string& k, double f) { return t.get_double(k, f); },
      [&](const std::string& k) { return t.get_double_array(k); });
  if (t.has("solver.modes")) {
    cfg.modes = t.get_string_array("solver.modes");
    if (cfg.modes.empty()) throw ConfigError("config: 'solver.modes' must not be empty");
  } else {
    cfg.modes = {t.get_string("solver.mode", "local_adaptive")};
  }

  cfg.w0 = t.get_double("problem.w0", 1.0);
  cfg.rf_annual = t.get_double("problem.rf_annual", 0.045);
  cfg.periods_per_year = static_cast<int>(t.get_int("problem.periods_per_year", 12));
  cfg.refine_depth = static_cast<int>(t.get_int("grid.refine_depth", 5));
  cfg.n_paths = static_cast<Index>(t.get_int("solver.n_paths", 10000));
  cfg.seed = static_cast<std::uint64_t>(t.get_int("solver.seed", 42));
  cfg.state_degree = static_cast<int>(t.get_int("solver.state_degree", 2));
  cfg.global_degree = static_cast<int>(t.get_int("solver.global_degree", 4));
  cfg.ridge_scale = t.get_double("solver.ridge_scale", 1e-6);
  cfg.n_threads = static_cast<int>(t.get_int("solver.n_threads", 1));

  cfg.costs.enabled = t.get_bool("costs.enabled", true);
  cfg.costs.tc_rate = t.get_double("costs.tc_rate", 0.003);
  cfg.costs.k = t.get_double("costs.k", 8e-6);
  cfg.costs.spread = t.get_double("costs.spread", 0.0);
  cfg.costs.perm_impact_frac = t.get_double("costs.perm_impact_frac", 2.0 / 3.0);
  const std::string timing = t.get_string("costs.timing", "pre_return");
  if (timing == "pre_return") cfg.costs.timing = CostModel::Timing::pre_return;
  else if (timing == "post_return") cfg.costs.timing = CostModel::Timing::post_return;
  else throw ConfigError("config: costs.timing must be pre_return or post_return");

  cfg.eval_seed = static_cast<std::uint64_t>(t.get_int("eval.seed", 777));
  cfg.n_eval_paths = static_cast<Index>(t.get_int("eval.n_paths", 10000));
  for (const auto d : t.get_int_array("bench.dims")) cfg.bench_dims.push_back(static_cast<Index>(d));
  if (cfg.bench_dims.empty()) cfg.bench_dims = {2, 3, 4};
  cfg.out_dir = t.get_string("output.dir", "out");

  if (cfg.periods_per_year < 1) throw ConfigError("config: problem.periods_per_year must be >= 1");
  for (const double delta : cfg.deltas) check_mesh(delta);
  for (const double gamma : cfg.gammas)
    if (!(gamma > 0.0)) throw ConfigError("config: gammas must be positive");
  for (const Index h : cfg.horizons)
    if (h < 1) throw ConfigError("config: horizons must be >= 1");
  for (const auto& mode : cfg.modes) {
    try {
      maximizer_mode_from_string(mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  for (const Index d : cfg.bench_dims)
    if (d < 1 || d > 8) throw ConfigError("config: bench.dims entries must be in [1, 8]");
  if (cfg.eval_seed == cfg.seed)
    throw ConfigError("config: eval.seed must differ from solver.seed");

  // full dry validation of the default cell before any output is written
  try {
    cfg.make_default_problem().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

}  // namespace lsmc
