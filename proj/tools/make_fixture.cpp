// Regenerates the committed data/ fixtures: the pinned synthetic market, a
// sample price CSV simulated from it, and the example run config.
#include <cstdio>
#include <fstream>
#include <iostream>

#include "lsmc/market_model.hpp"
#include "lsmc/serialization.hpp"

using namespace lsmc;

namespace {

constexpr std::uint64_t kFixtureSeed = 1001;

void write_sample_csv(const std::string& path, const VarModel& model) {
  const Index dim = model.dim();
  std::vector<Index> all;
  for (Index i = 0; i < dim; ++i) all.push_back(i);
  Vector s0 = Vector::Constant(dim, 100.0);
  const Index months = 180;
  const PathSet sim = simulate_paths(model, s0, all, 1, months, kFixtureSeed + 1);

  std::ofstream out(path);
  out << "date";
  for (const auto& name : model.names) out << "," << name;
  out << "\n";
  int year = 2010, month = 1;
  char buf[32];
  for (Index n = 0; n <= months; ++n) {
    std::snprintf(buf, sizeof(buf), "%04d-%02d-28", year, month);
    out << buf;
    for (Index i = 0; i < dim; ++i) {
      std::snprintf(buf, sizeof(buf), "%.4f", sim.prices[static_cast<std::size_t>(n)](0, i));
      out << "," << buf;
    }
    out << "\n";
    if (++month > 12) {
      month = 1;
      ++year;
    }
  }
}

constexpr const char* kExampleConfig = R"(# Example run config: two traded assets plus one untraded return factor.

[market]
kind = "model_json"
path = "synthetic_market.json"
assets = ["asset_0", "asset_1"]
s0 = [100.0, 100.0]

[problem]
horizons = [6]            # solve/evaluate use the first entry, bench-mesh sweeps the list
gammas = [10.0]
w0 = 1.0
rf_annual = 0.045
periods_per_year = 12

[grid]
deltas = [0.125]          # control mesh, must be 2^-s
refine_depth = 5

[solver]
n_paths = 10000
seed = 42
modes = ["local_adaptive"]   # grid_only | local_adaptive | global_adaptive
state_degree = 2
ridge_scale = 1e-6
n_threads = 1

[costs]
enabled = true
tc_rate = 0.003
k = 8e-6
spread = 0.0
perm_impact_frac = 0.667
timing = "pre_return"

[eval]
seed = 777
n_paths = 10000

[bench]
dims = [2, 3, 4]          # asset counts for the runtime sweep

[output]
dir = "out"
)";

}  // namespace

int main(int argc, char** argv) {
  const std::string out_dir = argc > 1 ? argv[1] : "data";
  const VarModel model = make_synthetic_var(3, kFixtureSeed, 1);

  save_json(out_dir + "/synthetic_market.json", json(model));
  write_sample_csv(out_dir + "/sample_prices.csv", model);
  std::ofstream cfg(out_dir + "/example_config.toml");
  cfg << kExampleConfig;

  std::cout << "fixture model: dim " << model.dim() << "\n"
            << "intercept " << model.intercept.transpose() << "\n"
            << "stationary mean " << model.stationary_mean().transpose() << "\n"
            << "coeff\n" << model.coeff << "\n"
            << "resid sd " << model.resid_cov.diagonal().cwiseSqrt().transpose() << "\n";
  return 0;
}
