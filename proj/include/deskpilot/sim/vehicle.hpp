#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "deskpilot/geom.hpp"

namespace deskpilot {

struct VehicleState {
    double x = 0.0;      // m
    double y = 0.0;      // m
    double yaw = 0.0;    // rad, wrapped to (-pi, pi]
    double v = 0.0;      // km/h, >= 0
};

// Invented physical constants for the kinematic stand-in; all configurable.
struct VehicleParams {
    double wheelbase_m = 2.6;
    double max_steer_rad = deg2rad(25.0);
    double max_accel = 4.0;    // m/s^2 at full throttle
    double max_brake = 8.0;    // m/s^2 at full brake
    double drag = 0.18;        // 1/s, linear speed decay
};

// Kinematic bicycle step. Physical steer angle is steering * 25 deg; yaw
// advances by (v / wheelbase) * tan(steer) * dt (positive steering turns
// toward positive lateral, see the world-frame note in scenario.hpp); speed
// integrates throttle/brake/drag accelerations and clamps to [0, limit].
inline VehicleState step_vehicle(const VehicleState& state, double steering, double throttle,
                                 double brake, double dt, const VehicleParams& params,
                                 double speed_limit_kmh) {
    if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("step_vehicle: dt in (0, 0.1]");
    if (!std::isfinite(steering) || !std::isfinite(throttle) || !std::isfinite(brake))
        throw std::invalid_argument("step_vehicle: non-finite command");
    steering = std::clamp(steering, -1.0, 1.0);
    throttle = std::clamp(throttle, 0.0, 1.0);
    brake = std::clamp(brake, 0.0, 1.0);

    const double v_ms = state.v / 3.6;
    const double accel = params.max_accel * throttle - params.max_brake * brake - params.drag * v_ms;
    const double limit_ms = speed_limit_kmh / 3.6;
    const double v_new = std::clamp(v_ms + accel * dt, 0.0, limit_ms);

    const double steer = steering * params.max_steer_rad;
    VehicleState next;
    next.v = v_new * 3.6;
    next.yaw = wrap_angle(state.yaw + v_new / params.wheelbase_m * std::tan(steer) * dt);
    next.x = state.x + v_new * std::cos(next.yaw) * dt;
    next.y = state.y + v_new * std::sin(next.yaw) * dt;
    return next;
}

}  // namespace deskpilot
