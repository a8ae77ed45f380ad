#pragma once

#include <algorithm>
#include <cmath>

#include "deskpilot/control.hpp"
#include "deskpilot/geom.hpp"
#include "deskpilot/sim/scenario.hpp"
#include "deskpilot/sim/vehicle.hpp"

namespace deskpilot {

// Scripted demonstrator: pure pursuit toward a speed-scaled lookahead point
// on the corridor reference path, with a smooth lateral bump around cones.
struct ExpertConfig {
    double lookahead_base_m = 4.0;
    double lookahead_per_ms = 0.45;  // extra meters per m/s of speed
    double avoid_window_m = 12.0;    // arclength half-window of the cone bump
    double aggressiveness = 1.0;     // tau of the longitudinal law
};

struct ExpertCommand {
    double steering = 0.0;
    double throttle = 0.0;
    double brake = 0.0;
};

// Lateral offset (from the corridor center) the reference path takes at
// arclength s: near a cone, swing to the middle of the opposite road half;
// smooth cosine-squared ramp, zero elsewhere.
inline double avoidance_offset(const TrackScenario& scn, double s, const ExpertConfig& cfg = {}) {
    const auto& idx = scn.index();
    double best_ds = cfg.avoid_window_m;
    double offset = 0.0;
    for (const auto& cone : scn.obstacles) {
        const auto q = idx.nearest({cone.x, cone.y});
        if (!q) continue;
        const double ds = std::abs(idx.s_delta(q->s, s));
        if (ds >= best_ds) continue;
        best_ds = ds;
        const double ramp = std::cos(kPi / 2.0 * ds / cfg.avoid_window_m);
        const double target = -(q->lateral > 0.0 ? 1.0 : -1.0) * q->half_width / 2.0 -
                              scn.corridor_offset(q->half_width);
        offset = target * ramp * ramp;
    }
    return offset;
}

// Demonstration policy: works in either travel direction (detected from the
// heading/tangent alignment) and is a pure function of (scenario, state).
inline ExpertCommand expert_policy(const TrackScenario& scn, const VehicleState& state,
                                   const ExpertConfig& cfg = {}, const VehicleParams& vp = {}) {
    const auto& idx = scn.index();
    const auto q = idx.nearest({state.x, state.y}, 12.0);
    if (!q) return {0.0, 0.0, 1.0};  // lost: stop

    const Vec2 heading{std::cos(state.yaw), std::sin(state.yaw)};
    const auto here = idx.at(q->s);
    const double dir = dot(heading, here.tangent) >= 0.0 ? 1.0 : -1.0;

    const double v_ms = state.v / 3.6;
    const double lookahead = cfg.lookahead_base_m + cfg.lookahead_per_ms * v_ms;
    const double s_target = q->s + dir * lookahead;
    const auto tp = idx.at(s_target);
    const double lateral =
        scn.corridor_offset(tp.half_width) + avoidance_offset(scn, idx.wrap_s(s_target), cfg);
    const Vec2 right{-tp.tangent.y, tp.tangent.x};
    const Vec2 target = tp.pos + lateral * right;

    const Vec2 to{target.x - state.x, target.y - state.y};
    const double dist = std::max(norm(to), 1.0);
    const double alpha = wrap_angle(std::atan2(to.y, to.x) - state.yaw);
    const double curvature = 2.0 * std::sin(alpha) / dist;
    const double steer_rad = std::atan(curvature * vp.wheelbase_m);
    const double steering = std::clamp(steer_rad / vp.max_steer_rad, -1.0, 1.0);

    ControlConfig control;
    control.speed_limit_kmh = scn.speed_limit_kmh;
    control.steering_limit = 1.0;
    control.aggressiveness = cfg.aggressiveness;
    const double xi = coupled_control(steering, state.v, control);
    const auto [throttle, brake] = split_command(xi);
    return {steering, throttle, brake};
}

}  // namespace deskpilot
