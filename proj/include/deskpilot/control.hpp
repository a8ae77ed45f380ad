#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace deskpilot {

// Longitudinal control law parameters. theta and delta share the normalized
// steering unit, making |theta|/delta dimensionless.
struct ControlConfig {
    double speed_limit_kmh = 30.0;      // v_l
    double steering_limit = 1.0;        // delta, same unit as theta
    double aggressiveness = 1.0;        // tau

    void validate() const {
        if (!(speed_limit_kmh > 0.0)) throw std::invalid_argument("ControlConfig: v_l > 0");
        if (!(steering_limit > 0.0)) throw std::invalid_argument("ControlConfig: delta > 0");
        if (!(aggressiveness >= 0.0 && aggressiveness <= 1.0))
            throw std::invalid_argument("ControlConfig: tau in [0,1]");
    }
};

// Coupled longitudinal command
//   xi = tau * [ (v_l - v_a)/v_l - |theta|/delta ]
// clamped to [-1, 1]: full throttle only when slow and straight, braking
// when fast into a turn. Pure function.
inline double coupled_control(double theta, double v_a_kmh, const ControlConfig& cfg) {
    cfg.validate();
    if (!std::isfinite(theta) || !std::isfinite(v_a_kmh))
        throw std::invalid_argument("coupled_control: non-finite input");
    if (v_a_kmh < 0.0) throw std::invalid_argument("coupled_control: v_a >= 0");
    const double turn = std::min(std::abs(theta), cfg.steering_limit) / cfg.steering_limit;
    const double xi =
        cfg.aggressiveness * ((cfg.speed_limit_kmh - v_a_kmh) / cfg.speed_limit_kmh - turn);
    return std::clamp(xi, -1.0, 1.0);
}

// Signed command to actuator pair; at most one side is ever nonzero.
inline std::pair<double, double> split_command(double xi) {
    return {std::max(xi, 0.0), std::max(-xi, 0.0)};
}

}  // namespace deskpilot
