#pragma once

#include <string>
#include <vector>

#include "hamchain/bc_baseline.hpp"
#include "hamchain/chain_policy.hpp"
#include "hamchain/dynamics.hpp"
#include "hamchain/expert.hpp"

#include <json.hpp>

namespace hamchain {

// All files round-trip doubles exactly (shortest decimal that parses back to
// the same bits), so save followed by load reproduces every number verbatim.

nlohmann::json assignment_set_to_json(const AssignmentSet& set);
AssignmentSet assignment_set_from_json(const nlohmann::json& j);
void save_assignment_set(const AssignmentSet& set, const std::string& path);
AssignmentSet load_assignment_set(const std::string& path);

// Demonstrations are stored as (x0, control grid); the state trajectory is
// reconstructed by replaying the controls through the integrator on load.
nlohmann::json demonstration_to_json(const Demonstration& demo,
                                     const std::string& system_id, double dt);
Demonstration demonstration_from_json(const SystemModel& model, const nlohmann::json& j,
                                      const TargetSpec* target = nullptr);
void save_demonstrations(const std::vector<Demonstration>& demos,
                         const std::string& system_id, double dt,
                         const std::string& path);
std::vector<Demonstration> load_demonstrations(const SystemModel& model,
                                               const std::string& path,
                                               const TargetSpec* target = nullptr);

nlohmann::json mlp_to_json(const MlpParams& p);
MlpParams mlp_from_json(const nlohmann::json& j);
void save_mlp(const MlpParams& p, const std::string& path);
MlpParams load_mlp(const std::string& path);

// Small shared helpers for the CLI and the harness.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace hamchain
