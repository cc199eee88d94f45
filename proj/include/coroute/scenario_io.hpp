#pragma once

#include <filesystem>
#include <string>

#include "coroute/scenario.hpp"

namespace coroute {

/// Scenario JSON document (version 1). Keys: version, area_side_m, seed,
/// depot, fuel, team, road {nodes, edges}, tasks.
std::string scenario_to_json(const Scenario& s);
/// Throws version_mismatch for an unknown major version, invalid_argument
/// for malformed documents.
Scenario scenario_from_json(const std::string& text);

void save_scenario(const Scenario& s, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace coroute
