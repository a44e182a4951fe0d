#pragma once

#include <filesystem>
#include <string>

#include "cofd/simkit.hpp"

namespace cofd {

// JSON scenario files. Every section is optional and falls back to the
// defaults of the corresponding struct; unknown keys are rejected.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

// Canonical form: every key written, fixed key order, two-space indent.
std::string serialize_config(const ScenarioConfig& config);

// Vessel case study: T1 fault, actuator bank, one thruster-level common mode.
ScenarioConfig case_study_config();

}  // namespace cofd
