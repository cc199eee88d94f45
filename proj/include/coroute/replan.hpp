#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coroute/evaluation.hpp"
#include "coroute/events.hpp"
#include "coroute/trace.hpp"

namespace coroute {

/// A plan computed at one point of the mission and executed until the next
/// event fires (or to the end).
struct ReplanSegment {
  int event = -1;       ///< index of the event that started it; -1 = initial plan
  int first_step = 0;   ///< first stitched step the plan covers
  int executed_steps = 0;
  double start_time_s = 0.0;
  RouteSolution plan;   ///< the planner's full trajectory from that point
};

struct EventOutcome {
  int event = 0;
  bool fired = false;
  int before_step = -1;
  double switch_time_s = 0.0;
  bool feasible = false;  ///< replanned residual mission succeeds
  std::string message;
};

struct ReplanResult {
  RouteSolution route;  ///< stitched trace with the applied events recorded
  std::vector<ReplanSegment> segments;
  std::vector<EventOutcome> events;
};

/// Triggers must share one kind and strictly increase; added tasks must be
/// valid points. Throws invalid_argument.
void validate_events(const std::vector<ReplanEvent>& events);

/// Plans, executes the plan until the next trigger (the Nth completed
/// recharge, or the first recharge finishing at or after a mission time),
/// freezes the state there, applies the event, replans the residual mission
/// from that state and splices the new plan on. Mid-mission planning needs a
/// policy planner (drl_*); heuristic planners are accepted only without
/// events. With no events the result is exactly the planner's own plan.
ReplanResult dynamic_replan(const Scenario& initial, const TeamConfig& team, const MethodSpec& planner,
                            const std::vector<ReplanEvent>& events, std::uint64_t seed,
                            const MissionOptions& options = {});

}  // namespace coroute
