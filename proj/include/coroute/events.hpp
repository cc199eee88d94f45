#pragma once

#include <optional>
#include <vector>

#include "coroute/env.hpp"

namespace coroute {

enum class TriggerKind { recharge_event, mission_time };

/// A mid-mission change. Fires after the `trigger_value`-th completed
/// recharge service, or at the first service finishing at or after
/// `trigger_value` seconds.
struct ReplanEvent {
  TriggerKind trigger = TriggerKind::recharge_event;
  double trigger_value = 1.0;
  std::vector<TaskPoint> add_tasks;
  std::optional<TeamConfig> set_team;

  bool operator==(const ReplanEvent&) const = default;
};

/// Applies an event to a live state. New tasks are appended unvisited; new
/// agents spawn at the depot with a full tank and clock `switch_time_s`;
/// surplus agents (highest index first) retire once their pending sortie or
/// service queue is finished. The horizon is re-based at the current step.
MissionState apply_event(const MissionState& state, const ReplanEvent& event, double switch_time_s);

}  // namespace coroute
