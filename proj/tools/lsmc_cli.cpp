#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "lsmc/config.hpp"
#include "lsmc/csv.hpp"
#include "lsmc/evaluation.hpp"
#include "lsmc/serialization.hpp"
#include "lsmc/sweeps.hpp"

namespace {

using namespace lsmc;

struct CommonOpts {
  std::string config_path;
  std::string out_override;
  std::int64_t seed_override = -1;
  double budget_secs = 0.0;
  bool parallel = false;
};

RunConfig load_with_overrides(const CommonOpts& opts) {
  RunConfig cfg = load_config(opts.config_path);
  if (opts.seed_override >= 0) {
    cfg.seed = static_cast<std::uint64_t>(opts.seed_override);
    if (cfg.eval_seed == cfg.seed)
      throw ConfigError("--seed collides with eval.seed; pick a different value");
  }
  if (!opts.out_override.empty()) cfg.out_dir = opts.out_override;
  std::filesystem::create_directories(cfg.out_dir);
  return cfg;
}

std::vector<std::string> report_header(const RunConfig& cfg) {
  std::vector<std::string> header = {"label",       "cer_bp",       "mean_terminal_wealth",
                                     "stdev_terminal_wealth", "n_eval_paths", "n_periods",
                                     "eval_seed",   "floor_activations", "weight_cash"};
  for (const Index a : cfg.asset_indices)
    header.push_back("weight_" + cfg.market.names[static_cast<std::size_t>(a)]);
  return header;
}

std::vector<std::string> report_row(const std::string& label, const EvalReport& r) {
  std::vector<std::string> row = {label,
                                  format_cell(r.cer_bp),
                                  format_cell(r.mean_terminal_wealth),
                                  format_cell(r.stdev_terminal_wealth),
                                  std::to_string(r.n_eval_paths),
                                  std::to_string(r.n_periods),
                                  std::to_string(r.eval_seed),
                                  std::to_string(r.floor_activations),
                                  format_cell(1.0 - r.initial_allocation.sum())};
  for (Index i = 0; i < r.initial_allocation.size(); ++i)
    row.push_back(format_cell(r.initial_allocation[i]));
  return row;
}

int cmd_calibrate(const std::string& csv_path, const std::string& out_path) {
  const PriceTable table = read_price_csv(csv_path);
  const VarModel model = calibrate_var(log_returns(table), table.tickers);
  save_json(out_path, json(model));
  std::cout << "calibrated " << model.dim() << " series from " << table.dates.size()
            << " rows -> " << out_path << "\n";
  return 0;
}

int cmd_solve(const CommonOpts& opts) {
  const RunConfig cfg = load_with_overrides(opts);
  const ProblemSpec spec = cfg.make_default_problem();
  const Deadline deadline =
      opts.budget_secs > 0.0
          ? Deadline(std::chrono::steady_clock::now() +
                     std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                         std::chrono::duration<double>(opts.budget_secs)))
          : Deadline{};
  const SolveResult result = solve(spec, deadline);

  const std::string policy_path = cfg.out_dir + "/policy.json";
  save_json(policy_path, json(result.policy));
  save_json(cfg.out_dir + "/solve_diagnostics.json", json(result.diagnostics));
  std::cout << "policy " << result.policy.spec_digest << " (" << result.policy.grid.size()
            << " grid nodes, " << spec.horizon << " steps) -> " << policy_path << "\n"
            << "solve took " << result.diagnostics.total_seconds << "s, rank fallbacks "
            << result.diagnostics.rank_fallbacks << ", floored paths "
            << result.diagnostics.floor_hits_forward << "\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& opts, std::string policy_path, bool baselines) {
  const RunConfig cfg = load_with_overrides(opts);
  const ProblemSpec spec = cfg.make_default_problem();
  if (policy_path.empty()) policy_path = cfg.out_dir + "/policy.json";
  Policy policy = load_json(policy_path).get<Policy>();

  const std::string expect = spec_digest(spec);
  if (policy.spec_digest != expect)
    throw ConfigError("policy " + policy_path + " was solved for spec digest " +
                      policy.spec_digest + ", but this config resolves to " + expect);

  const EvalReport report = replay_policy(policy, spec, cfg.eval_seed, cfg.n_eval_paths);
  save_json(cfg.out_dir + "/report.json", json(report));

  std::vector<std::vector<std::string>> rows = {report_row("policy", report)};
  if (baselines) {
    rows.push_back(report_row("uniform_random", replay_random(spec, cfg.eval_seed, cfg.n_eval_paths)));
    rows.push_back(report_row(
        "all_cash", replay_fixed(spec, Vector::Zero(spec.n_assets()), cfg.eval_seed,
                                 cfg.n_eval_paths)));
  }
  write_csv(cfg.out_dir + "/report.csv", report_header(cfg), rows);
  std::cout << "cer_bp " << report.cer_bp << " over " << report.n_eval_paths << " paths -> "
            << cfg.out_dir << "/report.{json,csv}\n";
  return 0;
}

int cmd_bench_regression(const CommonOpts& opts) {
  const RunConfig cfg = load_with_overrides(opts);
  const auto rows = bench_regression(cfg, opts.budget_secs, opts.parallel);
  const std::string path = cfg.out_dir + "/bench_regression.csv";
  write_bench_regression_csv(path, rows);
  std::cout << rows.size() << " cells -> " << path << "\n";
  return 0;
}

int cmd_bench_mesh(const CommonOpts& opts) {
  const RunConfig cfg = load_with_overrides(opts);
  const MeshBenchResult result = bench_mesh(cfg, opts.budget_secs, opts.parallel);
  write_mesh_cer_csv(cfg.out_dir + "/mesh_cer.csv", result);
  write_mesh_runtime_csv(cfg.out_dir + "/mesh_runtime.csv", result);
  std::cout << result.cer_rows.size() << " cer cells, " << result.runtime_rows.size()
            << " runtime cells -> " << cfg.out_dir << "/mesh_{cer,runtime}.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"least squares Monte Carlo multiperiod portfolio solver"};
  app.require_subcommand(1);

  std::string csv_path, model_out = "model.json", policy_path;
  bool baselines = false;
  CommonOpts opts;

  auto* calibrate = app.add_subcommand("calibrate", "fit a VAR(1) to a close-price CSV");
  calibrate->add_option("--csv", csv_path, "price history CSV")->required();
  calibrate->add_option("--out", model_out, "output model JSON path");

  auto add_common = [&](CLI::App* cmd, bool with_budget) {
    cmd->add_option("--config", opts.config_path, "run config TOML")->required();
    cmd->add_option("--seed", opts.seed_override, "override solver seed");
    cmd->add_option("--out", opts.out_override, "override output directory");
    if (with_budget) {
      cmd->add_option("--budget-secs", opts.budget_secs, "wall-clock budget per cell (0 = none)");
      cmd->add_flag("--parallel", opts.parallel, "run sweep cells in parallel (skews timings)");
    } else {
      cmd->add_option("--budget-secs", opts.budget_secs, "wall-clock budget (0 = none)");
    }
  };

  auto* solve_cmd = app.add_subcommand("solve", "solve the configured problem and write the policy");
  add_common(solve_cmd, false);

  auto* eval_cmd = app.add_subcommand("evaluate", "replay a solved policy out of sample");
  add_common(eval_cmd, false);
  eval_cmd->add_option("--policy", policy_path, "policy JSON (default <out>/policy.json)");
  eval_cmd->add_flag("--baselines", baselines, "also report uniform-random and all-cash baselines");

  auto* breg = app.add_subcommand("bench-regression", "sweep maximizers x mesh sizes");
  add_common(breg, true);

  auto* bmesh = app.add_subcommand("bench-mesh", "sweep mesh x horizon x gamma and runtime x assets");
  add_common(bmesh, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate->parsed()) return cmd_calibrate(csv_path, model_out);
    if (solve_cmd->parsed()) return cmd_solve(opts);
    if (eval_cmd->parsed()) return cmd_evaluate(opts, policy_path, baselines);
    if (breg->parsed()) return cmd_bench_regression(opts);
    if (bmesh->parsed()) return cmd_bench_mesh(opts);
  } catch (const lsmc::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
