#pragma once

#include <json.hpp>
#include <string>

#include "lsmc/solver.hpp"

namespace lsmc {

using nlohmann::json;

void to_json(json& j, const VarModel& model);
void from_json(const json& j, VarModel& model);  // recomputes the residual factor

void to_json(json& j, const CostModel& costs);
void from_json(const json& j, CostModel& costs);

void to_json(json& j, const UtilitySpec& utility);
void from_json(const json& j, UtilitySpec& utility);

void to_json(json& j, const MaximizerSpec& spec);
void from_json(const json& j, MaximizerSpec& spec);

void to_json(json& j, const FeatureMap& map);
void from_json(const json& j, FeatureMap& map);

void to_json(json& j, const ProblemSpec& spec);
void from_json(const json& j, ProblemSpec& spec);

void to_json(json& j, const Policy& policy);
void from_json(const json& j, Policy& policy);

void to_json(json& j, const EvalReport& report);
void from_json(const json& j, EvalReport& report);

void to_json(json& j, const SolveDiagnostics& diag);

/// 16-hex-digit FNV-1a digest of the canonical problem JSON.  Runtime-only
/// knobs (thread count) are excluded, so re-running with different
/// parallelism cannot change the digest.
std::string spec_digest(const ProblemSpec& spec);

/// Write compact JSON plus trailing newline; the output is byte-stable for
/// identical values.
void save_json(const std::string& path, const json& j);
json load_json(const std::string& path);

}  // namespace lsmc
