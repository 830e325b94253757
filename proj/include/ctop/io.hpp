#pragma once

#include "ctop/scenario.hpp"
#include "ctop/scp.hpp"
#include "ctop/validate.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace ctop {

// A scenario plus solver settings as loaded from disk. `effective` carries the
// fully materialized configuration (defaults filled in, user units) and is
// what gets written back out for provenance.
struct ScenarioBundle {
  Scenario scenario;
  ScpConfig config;
  nlohmann::ordered_json effective;
};

// Parses and validates a scenario file. Unknown keys are rejected; all type
// invariants are re-checked after defaults are applied.
ScenarioBundle load_scenario(const std::string& path);
ScenarioBundle load_scenario_json(const nlohmann::json& j);

// Re-applies user-unit overrides onto the bundle (used by CLI flags).
void override_scp(ScenarioBundle& bundle, const std::string& key, double value);
void override_scp(ScenarioBundle& bundle, const std::string& key, int value);

// Writes trajectory.csv, iterations.jsonl, audit.json, summary.json,
// config_effective.json, topview.csv, isometric.csv into outdir.
void emit_outputs(const SolveResult& result, const AuditReport& report,
                  const ScenarioBundle& bundle, const std::string& outdir);

nlohmann::ordered_json audit_to_json(const AuditReport& report);
nlohmann::ordered_json record_to_json(const IterationRecord& rec);

struct LoadedTrajectory {
  std::vector<Vec12> x;
  std::vector<Vec4> u;
  double T = 0.0;
};
LoadedTrajectory load_trajectory_csv(const std::string& path);

}  // namespace ctop
