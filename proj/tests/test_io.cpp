#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "lsmc/config.hpp"
#include "lsmc/csv.hpp"
#include "lsmc/serialization.hpp"
#include "lsmc/toml.hpp"

namespace fs = std::filesystem;
using namespace lsmc;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("lsmc_test_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("price csv parses and differences to log returns") {
  TempDir dir("csv");
  const std::string p = dir.file("prices.csv");
  write_text(p,
             "date,AAA,BBB\n"
             "2020-01-31,100.0,50.0\n"
             "2020-02-29,110.0,49.0\n"
             "2020-03-31,105.0,51.5\n");
  const PriceTable table = read_price_csv(p);
  CHECK(table.tickers == std::vector<std::string>{"AAA", "BBB"});
  CHECK(table.dates.front() == "2020-01-31");
  REQUIRE(table.prices.rows() == 3);
  CHECK(table.prices(1, 0) == 110.0);

  const Matrix lr = log_returns(table);
  REQUIRE(lr.rows() == 2);
  CHECK(lr(0, 0) == doctest::Approx(std::log(1.1)));
  CHECK(lr(1, 1) == doctest::Approx(std::log(51.5 / 49.0)));
}

TEST_CASE("price csv rejects malformed inputs with row numbers") {
  TempDir dir("csv_bad");
  auto expect_throw = [&](const std::string& body, const std::string& needle) {
    const std::string p = dir.file("bad.csv");
    write_text(p, body);
    try {
      read_price_csv(p);
      FAIL("expected a parse error for: " << needle);
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  expect_throw("date,A\n2020-01-31,100\n2020-02-29,-5\n", "row 3");
  expect_throw("date,A\n2020-01-31,100\n2020-02-29,abc\n", "bad price for A");
  expect_throw("date,A,B\n2020-01-31,100\n", "row 2");
  expect_throw("date,A\n2020-02-29,100\n2020-01-31,90\n", "ascending");
  expect_throw("date,A\n2020-01-31,100\n", "two data rows");
  expect_throw("close,A\n2020-01-31,100\n2020-02-29,90\n", "header");
  CHECK_THROWS_AS(read_price_csv(dir.file("missing.csv")), std::invalid_argument);
}

TEST_CASE("csv cells round-trip doubles") {
  CHECK(format_cell(1.0) == "1");
  CHECK(format_cell(std::nan("")) == "NA");
  for (const double v : {1.0 / 3.0, 1e-17, -123.456789012345, 8e-6}) {
    CHECK(std::strtod(format_cell(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("write_csv emits header plus rows and checks widths") {
  TempDir dir("csv_out");
  const std::string p = dir.file("out.csv");
  write_csv(p, {"a", "b"}, {{"1", "2"}, {"3", "4"}});
  CHECK(read_text(p) == "a,b\n1,2\n3,4\n");
  CHECK_THROWS_AS(write_csv(p, {"a", "b"}, {{"1"}}), std::invalid_argument);
}

TEST_CASE("toml subset parses scalars, arrays, and sections") {
  const TomlTable t = TomlTable::parse_string(
      "top = 3\n"
      "# a comment\n"
      "[alpha]\n"
      "flag = true          # trailing comment\n"
      "count = 12\n"
      "ratio = 0.25\n"
      "name = \"hello \\\"quoted\\\"\\n\"\n"
      "mix = [1, 2.5, 3]\n"
      "words = [\"a\", \"b\"]\n"
      "[beta]\n"
      "count = -4\n");

  CHECK(t.has("top"));
  CHECK(t.get_int("top", 0) == 3);
  CHECK(t.get_bool("alpha.flag", false));
  CHECK(t.get_int("alpha.count", 0) == 12);
  CHECK(t.get_double("alpha.ratio", 0.0) == 0.25);
  CHECK(t.get_string("alpha.name", "") == "hello \"quoted\"\n");
  CHECK(t.get_int("beta.count", 0) == -4);
  CHECK(t.get_double("absent", 1.5) == 1.5);

  const auto mix = t.get_double_array("alpha.mix");
  REQUIRE(mix.size() == 3);
  CHECK(mix[1] == 2.5);
  CHECK(t.get_string_array("alpha.words") == std::vector<std::string>{"a", "b"});
  CHECK(t.get_int_array("nothing").empty());
  CHECK(t.keys().front() == "top");
  CHECK(t.keys().back() == "beta.count");

  SUBCASE("integral floats coerce to ints, reals do not") {
    const TomlTable c = TomlTable::parse_string("a = 3.0\nb = 3.5\n");
    CHECK(c.get_int("a", 0) == 3);
    CHECK_THROWS_AS(c.get_int("b", 0), ConfigError);
  }
}

TEST_CASE("toml subset rejects what it does not support, naming the line") {
  auto expect_line = [](const std::string& text, const std::string& needle) {
    try {
      TomlTable::parse_string(text, "cfg");
      FAIL("expected ConfigError for: " << needle);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  expect_line("a = 1\na = 2\n", "cfg:2: duplicate key 'a'");
  expect_line("just text\n", "cfg:1");
  expect_line("a = [1, \"x\"]\n", "homogeneous");
  expect_line("a = \"unterminated\n", "unterminated");
  expect_line("a = [1, 2\n", "close on the same line");
  expect_line("[bad name]\n", "malformed table name");
  expect_line("a = 2020-01-01\n", "cannot parse value");

  CHECK_THROWS_AS(TomlTable::parse_string("x = 1\n").require_string("y"), ConfigError);
  CHECK_THROWS_AS(TomlTable::parse_file("/nonexistent/cfg.toml"), ConfigError);
}

TEST_CASE("run config loads a synthetic market with sweep axes") {
  TempDir dir("cfg");
  const std::string p = dir.file("run.toml");
  write_text(p,
             "[market]\n"
             "kind = \"synthetic\"\n"
             "synthetic_dim = 3\n"
             "synthetic_predictors = 1\n"
             "synthetic_seed = 11\n"
             "[problem]\n"
             "horizons = [2, 3]\n"
             "gammas = [5.0, 10.0]\n"
             "[grid]\n"
             "deltas = [0.25, 0.125]\n"
             "[solver]\n"
             "modes = [\"local_adaptive\", \"grid_only\"]\n"
             "n_paths = 500\n"
             "seed = 42\n"
             "[eval]\n"
             "seed = 777\n"
             "n_paths = 600\n"
             "[bench]\n"
             "dims = [2, 3]\n"
             "[output]\n"
             "dir = \"results\"\n");

  const RunConfig cfg = load_config(p);
  CHECK(cfg.market_kind == "synthetic");
  CHECK(cfg.market.dim() == 3);
  CHECK(cfg.asset_indices == std::vector<Index>{0, 1});  // predictors stay untraded
  CHECK(cfg.horizons == std::vector<Index>{2, 3});
  CHECK(cfg.gammas == std::vector<double>{5.0, 10.0});
  CHECK(cfg.deltas == std::vector<double>{0.25, 0.125});
  CHECK(cfg.modes.size() == 2);
  CHECK(cfg.n_paths == 500);
  CHECK(cfg.n_eval_paths == 600);
  CHECK(cfg.out_dir == "results");
  CHECK(cfg.s0.size() == 2);
  CHECK(cfg.s0[0] == 100.0);  // default initial price

  const ProblemSpec spec = cfg.make_default_problem();
  CHECK(spec.horizon == 2);
  CHECK(spec.utility.gamma == 5.0);
  CHECK(spec.mesh == 0.25);
  CHECK(spec.maximizer.mode == MaximizerMode::local_adaptive);
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("run config rejects bad inputs up front") {
  TempDir dir("cfg_bad");
  auto expect_cfg_error = [&](const std::string& body, const std::string& needle) {
    const std::string p = dir.file("run.toml");
    write_text(p, body);
    try {
      load_config(p);
      FAIL("expected ConfigError for: " << needle);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  expect_cfg_error("[market]\nkind = \"synthetic\"\ntypo_key = 1\n", "unknown key");
  expect_cfg_error("[grid]\ndelta = 0.3\n", "not 2^-s");
  expect_cfg_error("[market]\nkind = \"sideways\"\n", "market.kind");
  expect_cfg_error("[solver]\nmodes = [\"newton\"]\n", "maximizer mode");
  expect_cfg_error("[solver]\nseed = 7\n[eval]\nseed = 7\n", "differ");
  expect_cfg_error("[market]\nkind = \"synthetic\"\nassets = [\"nope\"]\n", "not a series");
  expect_cfg_error(
      "[market]\nkind = \"synthetic\"\nassets = [\"asset_0\", \"asset_0\"]\n", "twice");
  expect_cfg_error("[market]\nkind = \"csv\"\n", "market.path");
  expect_cfg_error("[problem]\ngammas = [-1.0]\n", "positive");
}

TEST_CASE("run config calibrates from csv prices next to the config") {
  TempDir dir("cfg_csv");
  std::string csv = "date,AAA,BBB\n";
  double a = 100.0, b = 50.0;
  for (int i = 0; i < 40; ++i) {
    const int year = 2010 + i / 12, month = 1 + i % 12;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-28", year, month);
    a *= (i % 2 == 0) ? 1.02 : 0.995;
    b *= (i % 3 == 0) ? 0.99 : 1.012;
    csv += std::string(buf) + "," + format_cell(a) + "," + format_cell(b) + "\n";
  }
  write_text(dir.file("prices.csv"), csv);
  write_text(dir.file("run.toml"),
             "[market]\nkind = \"csv\"\npath = \"prices.csv\"\n");

  const RunConfig cfg = load_config(dir.file("run.toml"));
  CHECK(cfg.market.names == std::vector<std::string>{"AAA", "BBB"});
  CHECK(cfg.asset_indices == std::vector<Index>{0, 1});
  CHECK(cfg.s0[0] == doctest::Approx(a));  // latest close
  CHECK(cfg.s0[1] == doctest::Approx(b));
  CHECK_NOTHROW(cfg.make_default_problem().validate());
}

TEST_CASE("model json round-trips through disk") {
  TempDir dir("model_json");
  const VarModel model = make_synthetic_var(3, 1001, 1);
  const std::string p = dir.file("model.json");
  save_json(p, json(model));

  const VarModel back = load_json(p).get<VarModel>();
  CHECK((back.intercept - model.intercept).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.coeff - model.coeff).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.resid_cov - model.resid_cov).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.names == model.names);
  // factor is recomputed, not stored
  CHECK((back.resid_factor * back.resid_factor.transpose() - back.resid_cov)
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  SUBCASE("loading through a config file works too") {
    write_text(dir.file("run.toml"),
               "[market]\nkind = \"model_json\"\npath = \"model.json\"\n"
               "assets = [\"asset_0\", \"asset_1\"]\n");
    const RunConfig cfg = load_config(dir.file("run.toml"));
    CHECK(cfg.asset_indices == std::vector<Index>{0, 1});
    CHECK((cfg.market.coeff - model.coeff).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("corrupt shapes are rejected") {
    json j(model);
    j["coeff"] = std::vector<std::vector<double>>{{0.1, 0.0}, {0.0, 0.1}};
    VarModel bad;
    CHECK_THROWS(from_json(j, bad));
  }
}

TEST_CASE("cost, utility, and maximizer specs serialize faithfully") {
  CostModel costs;
  costs.enabled = true;
  costs.tc_rate = 0.004;
  costs.spread = 0.001;
  costs.timing = CostModel::Timing::post_return;
  CostModel costs2 = json(costs).get<CostModel>();
  CHECK(costs2.tc_rate == costs.tc_rate);
  CHECK(costs2.spread == costs.spread);
  CHECK(costs2.timing == CostModel::Timing::post_return);

  UtilitySpec u;
  u.gamma = 3.5;
  CHECK(json(u).get<UtilitySpec>().gamma == 3.5);

  MaximizerSpec ms;
  ms.mode = MaximizerMode::global_adaptive;
  ms.global_degree = 3;
  ms.refine_depth = 7;
  const MaximizerSpec ms2 = json(ms).get<MaximizerSpec>();
  CHECK(ms2.mode == MaximizerMode::global_adaptive);
  CHECK(ms2.global_degree == 3);
  CHECK(ms2.refine_depth == 7);
}

TEST_CASE("problem digest ignores thread count but tracks everything else") {
  ProblemSpec spec;
  spec.market = make_synthetic_var(2, 21);
  spec.asset_indices = {0, 1};
  spec.s0 = Vector::Constant(2, 100.0);

  const std::string base = spec_digest(spec);
  CHECK(base.size() == 16);

  ProblemSpec threaded = spec;
  threaded.n_threads = 8;
  CHECK(spec_digest(threaded) == base);

  ProblemSpec reseeded = spec;
  reseeded.seed = 43;
  CHECK(spec_digest(reseeded) != base);

  ProblemSpec refined = spec;
  refined.maximizer.refine_depth = 6;
  CHECK(spec_digest(refined) != base);

  SUBCASE("round-trip preserves the digest") {
    const ProblemSpec back = json(spec).get<ProblemSpec>();
    CHECK(spec_digest(back) == base);
    CHECK(back.z0.has_value() == spec.z0.has_value());
  }
  SUBCASE("explicit z0 serializes") {
    ProblemSpec withz = spec;
    withz.z0 = Vector::Constant(2, 0.01);
    const ProblemSpec back = json(withz).get<ProblemSpec>();
    REQUIRE(back.z0.has_value());
    CHECK((*back.z0 - *withz.z0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(spec_digest(withz) != base);
  }
}

TEST_CASE("policies round-trip byte for byte") {
  TempDir dir("policy");
  ProblemSpec spec;
  spec.market = make_synthetic_var(2, 21);
  spec.asset_indices = {0, 1};
  spec.s0 = Vector::Constant(2, 100.0);
  spec.horizon = 2;
  spec.mesh = 0.5;
  spec.n_paths = 80;
  spec.costs.enabled = false;
  const SolveResult solved = solve(spec);

  const std::string p = dir.file("policy.json");
  save_json(p, json(solved.policy));
  const Policy back = load_json(p).get<Policy>();

  CHECK(back.spec_digest == solved.policy.spec_digest);
  CHECK(back.grid.size() == solved.policy.grid.size());
  CHECK(back.grid.mesh() == solved.policy.grid.mesh());
  REQUIRE(back.n_steps() == 2);
  for (std::size_t n = 0; n < 2; ++n) {
    CHECK((back.steps[n].betas - solved.policy.steps[n].betas).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.steps[n].map.shift() - solved.policy.steps[n].map.shift())
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  const Vector z0 = spec.market.stationary_mean();
  CHECK((back.control_at(0, z0, 1.0) - solved.policy.control_at(0, z0, 1.0))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  SUBCASE("saving twice is byte-identical") {
    const std::string q = dir.file("policy2.json");
    save_json(q, json(load_json(p).get<Policy>()));
    CHECK(read_text(p) == read_text(q));
  }
  SUBCASE("eval reports serialize") {
    const EvalReport rep = replay_policy(solved.policy, spec, 777, 64);
    const EvalReport back_rep = json(rep).get<EvalReport>();
    CHECK(back_rep.cer_bp == rep.cer_bp);
    CHECK(back_rep.n_eval_paths == rep.n_eval_paths);
    CHECK((back_rep.initial_allocation - rep.initial_allocation).cwiseAbs().maxCoeff() == 0.0);
  }
}
