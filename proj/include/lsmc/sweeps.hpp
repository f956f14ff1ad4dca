#pragma once

#include <limits>
#include <string>
#include <vector>

#include "lsmc/config.hpp"

namespace lsmc {

/// One (delta, maximizer) cell of the regression benchmark.
struct BenchRegressionRow {
  double delta = 0.0;
  std::string method;
  bool ok = false;
  std::string note;  // "budget" on deadline, otherwise the error text
  double cer_bp = std::numeric_limits<double>::quiet_NaN();
  double solve_seconds = std::numeric_limits<double>::quiet_NaN();
  double eval_seconds = std::numeric_limits<double>::quiet_NaN();
  double total_seconds = std::numeric_limits<double>::quiet_NaN();
  double ratio_vs_fastest = std::numeric_limits<double>::quiet_NaN();
};

/// Sweep config deltas against the canonical maximizer set (local ridge of
/// degree 2, global least squares of degrees 2..4) on the first
/// horizon/gamma.  budget_secs > 0 bounds each cell's solve wall clock.
std::vector<BenchRegressionRow> bench_regression(const RunConfig& config, double budget_secs,
                                                 bool parallel_cells);

void write_bench_regression_csv(const std::string& path,
                                const std::vector<BenchRegressionRow>& rows);

struct MeshCerRow {
  Index horizon = 0;
  double gamma = 0.0;
  double delta = 0.0;
  bool ok = false;
  std::string note;
  double cer_bp = std::numeric_limits<double>::quiet_NaN();
  Vector alpha0;  // initial risky weights; cash is one minus their sum
  double seconds = std::numeric_limits<double>::quiet_NaN();
};

struct MeshRuntimeRow {
  Index n_assets = 0;
  double delta = 0.0;
  bool ok = false;
  std::string note;
  double seconds = std::numeric_limits<double>::quiet_NaN();
};

struct MeshBenchResult {
  std::vector<MeshCerRow> cer_rows;
  std::vector<MeshRuntimeRow> runtime_rows;
  std::vector<std::string> asset_names;  // column labels for alpha0
};

/// Mesh sweep: CER and initial weights over delta x horizon x gamma on the
/// configured market, plus solve runtimes over delta x asset count on
/// synthetic markets.  Budget-burst cells carry "N\A" cells in the CSVs.
MeshBenchResult bench_mesh(const RunConfig& config, double budget_secs, bool parallel_cells);

void write_mesh_cer_csv(const std::string& path, const MeshBenchResult& result);
void write_mesh_runtime_csv(const std::string& path, const MeshBenchResult& result);

}  // namespace lsmc
