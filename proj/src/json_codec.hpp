#pragma once

// Internal JSON converters shared by the file-format modules.

#include "coroute/events.hpp"
#include "coroute/scenario.hpp"
#include "json.hpp"

namespace coroute::codec {

nlohmann::json to_json(const TeamConfig& t);
TeamConfig team_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TaskPoint& t);
TaskPoint task_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReplanEvent& e);
ReplanEvent event_from_json(const nlohmann::json& j);

}  // namespace coroute::codec
