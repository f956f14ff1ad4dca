#include "lsmc/sweeps.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <iterator>
#include <thread>

#include "lsmc/csv.hpp"
#include "lsmc/evaluation.hpp"

namespace lsmc {

namespace {

using Clock = std::chrono::steady_clock;

double secs_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Deadline cell_deadline(double budget_secs) {
  if (budget_secs <= 0.0) return {};
  return Clock::now() + std::chrono::duration_cast<Clock::duration>(
                            std::chrono::duration<double>(budget_secs));
}

/// Run `body(i)` for i in [0, count), optionally across threads.
void for_each_cell(Index count, bool parallel, const std::function<void(Index)>& body) {
  if (!parallel || count <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Index> cursor{0};
  const unsigned n = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                     static_cast<unsigned>(count)));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t)
    pool.emplace_back([&] {
      for (Index i = cursor.fetch_add(1); i < count; i = cursor.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

std::string budget_cell(double v, bool ok, const std::string& note) {
  if (ok) return format_cell(v);
  return note == "budget" ? "N\\A" : "NA";
}

}  // namespace

std::vector<BenchRegressionRow> bench_regression(const RunConfig& config, double budget_secs,
                                                 bool parallel_cells) {
  struct Method {
    const char* label;
    MaximizerMode mode;
    int degree;
  };
  static const Method kMethods[] = {
      {"local_adaptive", MaximizerMode::local_adaptive, 2},
      {"global_adaptive_2", MaximizerMode::global_adaptive, 2},
      {"global_adaptive_3", MaximizerMode::global_adaptive, 3},
      {"global_adaptive_4", MaximizerMode::global_adaptive, 4},
  };

  std::vector<BenchRegressionRow> rows(config.deltas.size() * std::size(kMethods));
  for_each_cell(static_cast<Index>(rows.size()), parallel_cells, [&](Index i) {
    const std::size_t di = static_cast<std::size_t>(i) / std::size(kMethods);
    const Method& method = kMethods[static_cast<std::size_t>(i) % std::size(kMethods)];
    BenchRegressionRow& row = rows[static_cast<std::size_t>(i)];
    row.delta = config.deltas[di];
    row.method = method.label;

    ProblemSpec spec = config.make_problem(row.delta, config.gammas.front(),
                                           config.horizons.front(), to_string(method.mode));
    spec.maximizer.global_degree = method.degree;
    const auto t0 = Clock::now();
    try {
      const SolveResult solved = solve(spec, cell_deadline(budget_secs));
      row.solve_seconds = solved.diagnostics.total_seconds;
      const auto te = Clock::now();
      const EvalReport report =
          replay_policy(solved.policy, spec, config.eval_seed, config.n_eval_paths);
      row.eval_seconds = secs_since(te);
      row.cer_bp = report.cer_bp;
      row.total_seconds = secs_since(t0);
      row.ok = true;
    } catch (const BudgetExceeded&) {
      row.note = "budget";
    } catch (const std::exception& e) {
      row.note = e.what();
    }
  });

  for (std::size_t di = 0; di < config.deltas.size(); ++di) {
    double fastest = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < std::size(kMethods); ++m) {
      const auto& row = rows[di * std::size(kMethods) + m];
      if (row.ok) fastest = std::min(fastest, row.total_seconds);
    }
    for (std::size_t m = 0; m < std::size(kMethods); ++m) {
      auto& row = rows[di * std::size(kMethods) + m];
      if (row.ok && std::isfinite(fastest) && fastest > 0.0)
        row.ratio_vs_fastest = row.total_seconds / fastest;
    }
  }
  return rows;
}

void write_bench_regression_csv(const std::string& path,
                                const std::vector<BenchRegressionRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : rows)
    cells.push_back({format_cell(row.delta), row.method, budget_cell(row.cer_bp, row.ok, row.note),
                     budget_cell(row.solve_seconds, row.ok, row.note),
                     budget_cell(row.eval_seconds, row.ok, row.note),
                     budget_cell(row.total_seconds, row.ok, row.note),
                     budget_cell(row.ratio_vs_fastest, row.ok, row.note),
                     row.ok ? "ok" : row.note});
  write_csv(path,
            {"delta", "method", "cer_bp", "solve_seconds", "eval_seconds", "total_seconds",
             "ratio_vs_fastest", "status"},
            cells);
}

MeshBenchResult bench_mesh(const RunConfig& config, double budget_secs, bool parallel_cells) {
  MeshBenchResult result;
  for (const Index a : config.asset_indices)
    result.asset_names.push_back(config.market.names[static_cast<std::size_t>(a)]);

  result.cer_rows.resize(config.deltas.size() * config.horizons.size() * config.gammas.size());
  for_each_cell(static_cast<Index>(result.cer_rows.size()), parallel_cells, [&](Index i) {
    std::size_t rest = static_cast<std::size_t>(i);
    const std::size_t di = rest % config.deltas.size();
    rest /= config.deltas.size();
    const std::size_t gi = rest % config.gammas.size();
    const std::size_t hi = rest / config.gammas.size();

    MeshCerRow& row = result.cer_rows[static_cast<std::size_t>(i)];
    row.delta = config.deltas[di];
    row.gamma = config.gammas[gi];
    row.horizon = config.horizons[hi];

    const ProblemSpec spec =
        config.make_problem(row.delta, row.gamma, row.horizon, config.modes.front());
    const auto t0 = Clock::now();
    try {
      const SolveResult solved = solve(spec, cell_deadline(budget_secs));
      const EvalReport report =
          replay_policy(solved.policy, spec, config.eval_seed, config.n_eval_paths);
      row.cer_bp = report.cer_bp;
      row.alpha0 = report.initial_allocation;
      row.seconds = secs_since(t0);
      row.ok = true;
    } catch (const BudgetExceeded&) {
      row.note = "budget";
    } catch (const std::exception& e) {
      row.note = e.what();
    }
  });

  result.runtime_rows.resize(config.deltas.size() * config.bench_dims.size());
  for_each_cell(static_cast<Index>(result.runtime_rows.size()), parallel_cells, [&](Index i) {
    const std::size_t di = static_cast<std::size_t>(i) % config.deltas.size();
    const std::size_t ni = static_cast<std::size_t>(i) / config.deltas.size();

    MeshRuntimeRow& row = result.runtime_rows[static_cast<std::size_t>(i)];
    row.delta = config.deltas[di];
    row.n_assets = config.bench_dims[ni];

    ProblemSpec spec = config.make_problem(row.delta, config.gammas.front(),
                                           config.horizons.front(), config.modes.front());
    spec.market = make_synthetic_var(row.n_assets, config.synthetic_seed);
    spec.asset_indices.clear();
    for (Index a = 0; a < row.n_assets; ++a) spec.asset_indices.push_back(a);
    spec.s0 = Vector::Constant(row.n_assets, 100.0);
    spec.z0.reset();

    const auto t0 = Clock::now();
    try {
      solve(spec, cell_deadline(budget_secs));
      row.seconds = secs_since(t0);
      row.ok = true;
    } catch (const BudgetExceeded&) {
      row.note = "budget";
    } catch (const std::exception& e) {
      row.note = e.what();
    }
  });
  return result;
}

void write_mesh_cer_csv(const std::string& path, const MeshBenchResult& result) {
  std::vector<std::string> header = {"horizon", "gamma", "delta", "cer_bp", "weight_cash"};
  for (const auto& name : result.asset_names) header.push_back("weight_" + name);
  header.push_back("seconds");
  header.push_back("status");

  std::vector<std::vector<std::string>> cells;
  for (const auto& row : result.cer_rows) {
    std::vector<std::string> line = {std::to_string(row.horizon), format_cell(row.gamma),
                                     format_cell(row.delta),
                                     budget_cell(row.cer_bp, row.ok, row.note)};
    if (row.ok && row.alpha0.size() == static_cast<Index>(result.asset_names.size())) {
      line.push_back(format_cell(1.0 - row.alpha0.sum()));
      for (Index i = 0; i < row.alpha0.size(); ++i) line.push_back(format_cell(row.alpha0[i]));
    } else {
      line.push_back(budget_cell(0.0, false, row.note));
      for (std::size_t i = 0; i < result.asset_names.size(); ++i)
        line.push_back(budget_cell(0.0, false, row.note));
    }
    line.push_back(budget_cell(row.seconds, row.ok, row.note));
    line.push_back(row.ok ? "ok" : row.note);
    cells.push_back(std::move(line));
  }
  write_csv(path, header, cells);
}

void write_mesh_runtime_csv(const std::string& path, const MeshBenchResult& result) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : result.runtime_rows)
    cells.push_back({std::to_string(row.n_assets), format_cell(row.delta),
                     budget_cell(row.seconds, row.ok, row.note), row.ok ? "ok" : row.note});
  write_csv(path, {"n_assets", "delta", "seconds", "status"}, cells);
}

}  // namespace lsmc
