#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "lsmc/sweeps.hpp"

namespace fs = std::filesystem;
using namespace lsmc;

namespace {

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.market_kind = "synthetic";
  cfg.market = make_synthetic_var(2, 31);
  cfg.asset_indices = {0, 1};
  cfg.s0 = Vector::Constant(2, 100.0);
  cfg.horizons = {2};
  cfg.gammas = {10.0};
  cfg.deltas = {0.5};
  cfg.modes = {"local_adaptive"};
  cfg.bench_dims = {1, 2};
  cfg.n_paths = 120;
  cfg.n_eval_paths = 64;
  cfg.costs.enabled = false;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (const char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("regression benchmark sweeps the four canonical maximizers") {
  const RunConfig cfg = tiny_config();
  const auto rows = bench_regression(cfg, 0.0, false);
  REQUIRE(rows.size() == 4);  // one delta x four methods

  double fastest = std::numeric_limits<double>::infinity();
  for (const auto& row : rows) {
    CHECK(row.ok);
    CHECK(row.delta == 0.5);
    CHECK(std::isfinite(row.cer_bp));
    CHECK(row.total_seconds >= row.solve_seconds);
    fastest = std::min(fastest, row.total_seconds);
  }
  CHECK(rows[0].method == "local_adaptive");
  CHECK(rows[3].method == "global_adaptive_4");

  double min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& row : rows) {
    CHECK(row.ratio_vs_fastest >= 1.0);
    min_ratio = std::min(min_ratio, row.ratio_vs_fastest);
  }
  CHECK(min_ratio == doctest::Approx(1.0));

  SUBCASE("csv output carries one line per row") {
    const fs::path dir = fs::temp_directory_path() / "lsmc_test_sweep_csv";
    fs::create_directories(dir);
    const std::string p = (dir / "bench.csv").string();
    write_bench_regression_csv(p, rows);
    const std::string text = slurp(p);
    CHECK(line_count(text) == 5);  // header + 4 rows
    CHECK(text.rfind("delta,method,cer_bp", 0) == 0);
    CHECK(text.find("local_adaptive") != std::string::npos);
    fs::remove_all(dir);
  }
}

TEST_CASE("an impossible budget marks cells instead of failing the sweep") {
  const RunConfig cfg = tiny_config();
  const auto rows = bench_regression(cfg, 1e-9, false);
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK_FALSE(row.ok);
    CHECK(row.note == "budget");
  }

  const fs::path dir = fs::temp_directory_path() / "lsmc_test_sweep_budget";
  fs::create_directories(dir);
  const std::string p = (dir / "bench.csv").string();
  write_bench_regression_csv(p, rows);
  const std::string text = slurp(p);
  CHECK(text.find("N\\A") != std::string::npos);
  CHECK(text.find("budget") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("mesh benchmark covers the sweep grid and runtime dims") {
  RunConfig cfg = tiny_config();
  cfg.deltas = {0.5, 0.25};
  cfg.gammas = {5.0, 10.0};
  const MeshBenchResult res = bench_mesh(cfg, 0.0, false);

  REQUIRE(res.cer_rows.size() == 4);   // 2 deltas x 2 gammas x 1 horizon
  REQUIRE(res.runtime_rows.size() == 4);  // 2 deltas x 2 dims
  CHECK(res.asset_names == std::vector<std::string>{"asset_0", "asset_1"});

  for (const auto& row : res.cer_rows) {
    CHECK(row.ok);
    CHECK(std::isfinite(row.cer_bp));
    REQUIRE(row.alpha0.size() == 2);
    CHECK(in_admissible_set(row.alpha0));
  }
  for (const auto& row : res.runtime_rows) {
    CHECK(row.ok);
    CHECK(row.seconds > 0.0);
    CHECK((row.n_assets == 1 || row.n_assets == 2));
  }

  SUBCASE("csv writers lay out the sweep tables") {
    const fs::path dir = fs::temp_directory_path() / "lsmc_test_mesh_csv";
    fs::create_directories(dir);
    const std::string cer_path = (dir / "cer.csv").string();
    const std::string rt_path = (dir / "runtime.csv").string();
    write_mesh_cer_csv(cer_path, res);
    write_mesh_runtime_csv(rt_path, res);

    const std::string cer = slurp(cer_path);
    CHECK(line_count(cer) == 5);
    CHECK(cer.rfind("horizon,gamma,delta,cer_bp,weight_cash,weight_asset_0,weight_asset_1", 0) ==
          0);
    const std::string rt = slurp(rt_path);
    CHECK(line_count(rt) == 5);
    CHECK(rt.rfind("n_assets,delta,seconds,status", 0) == 0);
    fs::remove_all(dir);
  }
}
