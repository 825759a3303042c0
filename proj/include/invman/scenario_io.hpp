#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "invman/scenario.hpp"

namespace invman {

nlohmann::ordered_json scenario_to_json(const Scenario& scenario);

/// Throws ScenarioError carrying the JSON path of the offending value.
Scenario scenario_from_json(const nlohmann::ordered_json& j);

Scenario load_scenario(const std::filesystem::path& file);

}  // namespace invman
