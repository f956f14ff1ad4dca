#include "lsmc/serialization.hpp"

#include <cstdint>
#include <fstream>

namespace lsmc {

namespace {

json vec_to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vec_from_json(const json& a) {
  Vector v(static_cast<Index>(a.size()));
  Index i = 0;
  for (const auto& x : a) v[i++] = x.get<double>();
  return v;
}

json mat_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix mat_from_json(const json& a) {
  const Index rows = static_cast<Index>(a.size());
  if (rows == 0) return Matrix(0, 0);
  const Index cols = static_cast<Index>(a.at(0).size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = a.at(static_cast<std::size_t>(r));
    if (static_cast<Index>(row.size()) != cols)
      throw std::invalid_argument("json matrix: ragged rows");
    for (Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

}  // namespace

void to_json(json& j, const VarModel& model) {
  j = json{{"dim", model.dim()},
           {"names", model.names},
           {"intercept", vec_to_json(model.intercept)},
           {"coeff", mat_to_json(model.coeff)},
           {"resid_cov", mat_to_json(model.resid_cov)}};
}

void from_json(const json& j, VarModel& model) {
  model.intercept = vec_from_json(j.at("intercept"));
  model.coeff = mat_from_json(j.at("coeff"));
  model.resid_cov = mat_from_json(j.at("resid_cov"));
  model.names = j.value("names", std::vector<std::string>{});
  if (j.contains("dim") && j.at("dim").get<Index>() != model.dim())
    throw std::invalid_argument("var model json: dim field disagrees with arrays");
  model.resid_factor = psd_factor(model.resid_cov);
  model.validate();
}

void to_json(json& j, const CostModel& costs) {
  j = json{{"enabled", costs.enabled},
           {"tc_rate", costs.tc_rate},
           {"k", costs.k},
           {"spread", costs.spread},
           {"perm_impact_frac", costs.perm_impact_frac},
           {"timing", costs.timing == CostModel::Timing::pre_return ? "pre_return" : "post_return"}};
}

void from_json(const json& j, CostModel& costs) {
  costs.enabled = j.value("enabled", true);
  costs.tc_rate = j.value("tc_rate", 0.003);
  costs.k = j.value("k", 8e-6);
  costs.spread = j.value("spread", 0.0);
  costs.perm_impact_frac = j.value("perm_impact_frac", 2.0 / 3.0);
  const std::string timing = j.value("timing", "pre_return");
  if (timing == "pre_return")
    costs.timing = CostModel::Timing::pre_return;
  else if (timing == "post_return")
    costs.timing = CostModel::Timing::post_return;
  else
    throw std::invalid_argument("cost model json: unknown timing " + timing);
  costs.validate();
}

void to_json(json& j, const UtilitySpec& utility) { j = json{{"gamma", utility.gamma}}; }

void from_json(const json& j, UtilitySpec& utility) {
  utility.gamma = j.at("gamma").get<double>();
  utility.validate();
}

void to_json(json& j, const MaximizerSpec& spec) {
  j = json{{"mode", to_string(spec.mode)},
           {"global_degree", spec.global_degree},
           {"refine_depth", spec.refine_depth}};
}

void from_json(const json& j, MaximizerSpec& spec) {
  spec.mode = maximizer_mode_from_string(j.at("mode").get<std::string>());
  spec.global_degree = j.value("global_degree", 4);
  spec.refine_depth = j.value("refine_depth", 5);
  spec.validate();
}

void to_json(json& j, const FeatureMap& map) {
  j = json{{"dim_in", map.dim_in()},
           {"degree", map.degree()},
           {"shift", vec_to_json(map.shift())},
           {"scale", vec_to_json(map.scale())}};
}

void from_json(const json& j, FeatureMap& map) {
  map = FeatureMap(j.at("dim_in").get<Index>(), j.at("degree").get<int>());
  map.set_standardization(vec_from_json(j.at("shift")), vec_from_json(j.at("scale")));
}

void to_json(json& j, const ProblemSpec& spec) {
  j = json{{"market", spec.market},
           {"asset_indices", spec.asset_indices},
           {"s0", vec_to_json(spec.s0)},
           {"horizon", spec.horizon},
           {"w0", spec.w0},
           {"rf_per_period", spec.rf_per_period},
           {"utility", spec.utility},
           {"costs", spec.costs},
           {"mesh", spec.mesh},
           {"maximizer", spec.maximizer},
           {"state_degree", spec.state_degree},
           {"ridge_scale", spec.ridge_scale},
           {"n_paths", spec.n_paths},
           {"seed", spec.seed},
           {"wealth_floor_frac", spec.wealth_floor_frac}};
  if (spec.z0) j["z0"] = vec_to_json(*spec.z0);
}

void from_json(const json& j, ProblemSpec& spec) {
  spec.market = j.at("market").get<VarModel>();
  spec.asset_indices = j.at("asset_indices").get<std::vector<Index>>();
  spec.s0 = vec_from_json(j.at("s0"));
  if (j.contains("z0")) spec.z0 = vec_from_json(j.at("z0"));
  spec.horizon = j.at("horizon").get<Index>();
  spec.w0 = j.at("w0").get<double>();
  spec.rf_per_period = j.at("rf_per_period").get<double>();
  spec.utility = j.at("utility").get<UtilitySpec>();
  spec.costs = j.at("costs").get<CostModel>();
  spec.mesh = j.at("mesh").get<double>();
  spec.maximizer = j.at("maximizer").get<MaximizerSpec>();
  spec.state_degree = j.at("state_degree").get<int>();
  spec.ridge_scale = j.at("ridge_scale").get<double>();
  spec.n_paths = j.at("n_paths").get<Index>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.wealth_floor_frac = j.at("wealth_floor_frac").get<double>();
  spec.validate();
}

void to_json(json& j, const Policy& policy) {
  json steps = json::array();
  for (const auto& sv : policy.steps)
    steps.push_back(json{{"map", sv.map},
                         {"betas", mat_to_json(sv.betas)},
                         {"rank_fallbacks", sv.rank_fallbacks}});
  j = json{{"spec_digest", policy.spec_digest},
           {"grid", json{{"dim", policy.grid.dim()}, {"mesh", policy.grid.mesh()}}},
           {"maximizer", policy.maximizer},
           {"ridge_scale", policy.ridge_scale},
           {"steps", std::move(steps)}};
}

void from_json(const json& j, Policy& policy) {
  policy.spec_digest = j.at("spec_digest").get<std::string>();
  policy.grid =
      build_simplex_grid(j.at("grid").at("dim").get<Index>(), j.at("grid").at("mesh").get<double>());
  policy.maximizer = j.at("maximizer").get<MaximizerSpec>();
  policy.ridge_scale = j.value("ridge_scale", 1e-6);
  policy.steps.clear();
  for (const auto& s : j.at("steps")) {
    StepValue sv;
    sv.map = s.at("map").get<FeatureMap>();
    sv.betas = mat_from_json(s.at("betas"));
    sv.rank_fallbacks = s.value("rank_fallbacks", 0);
    if (sv.betas.rows() != sv.map.dim_out() || sv.betas.cols() != policy.grid.size())
      throw std::invalid_argument("policy json: coefficient block shape mismatch");
    policy.steps.push_back(std::move(sv));
  }
}

void to_json(json& j, const EvalReport& report) {
  j = json{{"cer_bp", report.cer_bp},
           {"mean_terminal_wealth", report.mean_terminal_wealth},
           {"stdev_terminal_wealth", report.stdev_terminal_wealth},
           {"n_eval_paths", report.n_eval_paths},
           {"n_periods", report.n_periods},
           {"eval_seed", report.eval_seed},
           {"floor_activations", report.floor_activations},
           {"initial_allocation", vec_to_json(report.initial_allocation)}};
}

void from_json(const json& j, EvalReport& report) {
  report.cer_bp = j.at("cer_bp").get<double>();
  report.mean_terminal_wealth = j.at("mean_terminal_wealth").get<double>();
  report.stdev_terminal_wealth = j.at("stdev_terminal_wealth").get<double>();
  report.n_eval_paths = j.at("n_eval_paths").get<Index>();
  report.n_periods = j.at("n_periods").get<Index>();
  report.eval_seed = j.at("eval_seed").get<std::uint64_t>();
  report.floor_activations = j.at("floor_activations").get<Index>();
  report.initial_allocation = vec_from_json(j.at("initial_allocation"));
}

void to_json(json& j, const SolveDiagnostics& diag) {
  j = json{{"forward_seconds", diag.forward_seconds},
           {"step_seconds", diag.step_seconds},
           {"total_seconds", diag.total_seconds},
           {"floor_hits_forward", diag.floor_hits_forward},
           {"floor_hits_backward", diag.floor_hits_backward},
           {"rank_fallbacks", diag.rank_fallbacks}};
}

std::string spec_digest(const ProblemSpec& spec) {
  const std::string canon = json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

void save_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace lsmc
