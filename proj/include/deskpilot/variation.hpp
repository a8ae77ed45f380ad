#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>

#include "deskpilot/geom.hpp"
#include "deskpilot/rng.hpp"
#include "deskpilot/sim/scenario.hpp"

namespace deskpilot {

// One deployment-time perturbation of a scenario. Fields compose; the base
// scenario is never mutated.
struct ScenarioVariation {
    double light_intensity_delta = 0.0;
    double light_direction_delta_deg = 0.0;
    std::optional<ScenePose> spawn_pose;     // replace the spawn outright
    double spawn_yaw_delta_deg = 0.0;        // then rotate it
    bool heading_inverted = false;           // then flip travel direction
    std::optional<double> speed_limit_kmh;
    std::optional<int> obstacle_count;       // re-randomized cone placement
    std::uint64_t obstacle_seed = 1;
};

inline TrackScenario apply_variation(const TrackScenario& base, const ScenarioVariation& var) {
    TrackScenario scn = base;
    scn.light.intensity = std::max(0.0, scn.light.intensity + var.light_intensity_delta);
    scn.light.direction_deg += var.light_direction_delta_deg;
    if (var.speed_limit_kmh) {
        if (!(*var.speed_limit_kmh > 0.0))
            throw std::invalid_argument("varied speed limit must be positive");
        scn.speed_limit_kmh = *var.speed_limit_kmh;
    }
    if (var.obstacle_count) {
        if (*var.obstacle_count < 0) throw std::invalid_argument("obstacle count must be >= 0");
        Rng rng = Rng::derive(var.obstacle_seed, static_cast<std::uint64_t>(*var.obstacle_count));
        place_cones(scn, *var.obstacle_count, rng);
    }
    if (var.spawn_pose) scn.spawn = *var.spawn_pose;
    if (var.spawn_yaw_delta_deg != 0.0)
        scn.spawn.yaw = wrap_angle(scn.spawn.yaw + deg2rad(var.spawn_yaw_delta_deg));
    if (var.heading_inverted) scn.spawn.yaw = wrap_angle(scn.spawn.yaw + kPi);
    return scn;
}

}  // namespace deskpilot
