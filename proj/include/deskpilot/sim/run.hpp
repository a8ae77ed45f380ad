#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "deskpilot/control.hpp"
#include "deskpilot/dataset.hpp"
#include "deskpilot/image.hpp"
#include "deskpilot/image_io.hpp"
#include "deskpilot/net.hpp"
#include "deskpilot/sim/camera.hpp"
#include "deskpilot/sim/expert.hpp"
#include "deskpilot/sim/scenario.hpp"
#include "deskpilot/sim/vehicle.hpp"

namespace deskpilot {

// A driver maps observation -> steering in [-1, 1]. The frame pointer is null
// when needs_camera is false, which lets scripted drivers skip rendering.
struct DriverSpec {
    std::function<double(const ImageU8*, const VehicleState&)> steer;
    bool needs_camera = true;
};

using DriverFactory = std::function<DriverSpec(const TrackScenario&)>;

inline DriverSpec model_driver(const NetSpec& spec, const NetParams& params) {
    auto shared = std::make_shared<NetParams>(params);
    DriverSpec d;
    d.needs_camera = true;
    d.steer = [spec, shared](const ImageU8* frame, const VehicleState&) {
        if (frame == nullptr) throw std::logic_error("model driver needs a camera frame");
        return static_cast<double>(predict(spec, *shared, *frame));
    };
    return d;
}

inline DriverSpec expert_driver(const TrackScenario& scn, ExpertConfig cfg = {},
                                VehicleParams vp = {}) {
    auto shared = std::make_shared<TrackScenario>(scn);
    DriverSpec d;
    d.needs_camera = false;
    d.steer = [shared, cfg, vp](const ImageU8*, const VehicleState& state) {
        return expert_policy(*shared, state, cfg, vp).steering;
    };
    return d;
}

struct LapStep {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
    double steering = 0.0;
    double throttle = 0.0;
    double brake = 0.0;
    double speed_kmh = 0.0;
    bool interference = false;
};

struct LapLog {
    std::vector<LapStep> steps;
    int interferences = 0;
    double lap_time = 0.0;  // seconds until completion (or until stop)
    bool completed = false;
};

inline void write_lap_log(const std::filesystem::path& path, const LapLog& log) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write lap log: " + path.string());
    out << "t,x,y,yaw,steering,throttle,brake,speed,interference\n";
    out << std::setprecision(10);
    for (const auto& s : log.steps) {
        out << s.t << ',' << s.x << ',' << s.y << ',' << s.yaw << ',' << s.steering << ','
            << s.throttle << ',' << s.brake << ',' << s.speed_kmh << ','
            << (s.interference ? 1 : 0) << '\n';
    }
}

struct DeployOptions {
    double control_rate_hz = 30.0;
    double max_sim_seconds = 900.0;
    bool stop_on_first_interference = false;
    double vehicle_radius_m = 0.9;
    VehicleParams vehicle;
    CameraRig rig;
};

namespace detail {

inline const Cone* hit_cone(const TrackScenario& scn, double x, double y, double radius) {
    for (const auto& cone : scn.obstacles) {
        const double dx = x - cone.x;
        const double dy = y - cone.y;
        const double reach = cone.radius + radius;
        if (dx * dx + dy * dy <= reach * reach) return &cone;
    }
    return nullptr;
}

// Reset pose after an interference: corridor center at arclength s, facing
// the travel direction; nudged forward past any cone sitting on the spot.
inline VehicleState reset_pose(const TrackScenario& scn, double s, double dir, double radius) {
    const auto& idx = scn.index();
    for (int attempt = 0; attempt < 64; ++attempt) {
        const auto p = idx.at(s + dir * 2.0 * attempt);
        const Vec2 right{-p.tangent.y, p.tangent.x};
        const double off = scn.corridor_offset(p.half_width);
        const double x = p.pos.x + off * right.x;
        const double y = p.pos.y + off * right.y;
        if (hit_cone(scn, x, y, radius) == nullptr) {
            const double yaw = dir > 0.0 ? p.yaw : wrap_angle(p.yaw + kPi);
            return {x, y, yaw, 0.0};
        }
    }
    throw std::runtime_error("no cone-free reset pose found");
}

}  // namespace detail

// Closed-loop lap: camera -> driver -> coupled longitudinal law -> vehicle.
// An interference is leaving the drivable corridor or touching a cone; the
// vehicle is then reset to the corridor center and the lap continues. The lap
// completes when accumulated signed progress covers the loop length.
inline LapLog deploy(const TrackScenario& scn, const DriverSpec& driver,
                     const ControlConfig& control, const DeployOptions& opts = {}) {
    if (!(opts.control_rate_hz > 0.0)) throw std::invalid_argument("control rate must be positive");
    control.validate();
    const auto& idx = scn.index();
    const double length = idx.length();
    const double dt = 1.0 / opts.control_rate_hz;

    VehicleState state{scn.spawn.x, scn.spawn.y, scn.spawn.yaw, 0.0};
    const auto q0 = idx.nearest({state.x, state.y}, 12.0);
    if (!q0) throw std::runtime_error("spawn pose is not on the track");
    const Vec2 heading0{std::cos(state.yaw), std::sin(state.yaw)};
    const double dir = dot(heading0, idx.at(q0->s).tangent) >= 0.0 ? 1.0 : -1.0;

    LapLog log;
    double s_prev = q0->s;
    double progress = 0.0;
    double t = 0.0;
    while (t < opts.max_sim_seconds) {
        ImageU8 frame;
        const ImageU8* fp = nullptr;
        if (driver.needs_camera) {
            frame = render_camera(scn, {state.x, state.y, state.yaw}, FrameSource::center, opts.rig);
            fp = &frame;
        }
        const double steering = std::clamp(driver.steer(fp, state), -1.0, 1.0);
        const double xi = coupled_control(steering, state.v, control);
        const auto [throttle, brake] = split_command(xi);
        state = step_vehicle(state, steering, throttle, brake, dt, opts.vehicle,
                             scn.speed_limit_kmh);
        t += dt;
        log.steps.push_back(
            {t, state.x, state.y, state.yaw, steering, throttle, brake, state.v, false});

        const auto q = idx.nearest({state.x, state.y}, 12.0);
        bool off_corridor = !q;
        if (q) {
            const double center = scn.corridor_offset(q->half_width);
            off_corridor = std::abs(q->lateral - center) > scn.corridor_half(q->half_width);
        }
        const bool cone_hit =
            detail::hit_cone(scn, state.x, state.y, opts.vehicle_radius_m) != nullptr;
        if (off_corridor || cone_hit) {
            log.interferences += 1;
            log.steps.back().interference = true;
            if (opts.stop_on_first_interference) {
                log.lap_time = t;
                return log;
            }
            const double s_reset = q ? q->s : s_prev;
            state = detail::reset_pose(scn, s_reset, dir, opts.vehicle_radius_m);
            s_prev = s_reset;
            continue;
        }
        progress += idx.s_delta(s_prev, q->s);
        s_prev = q->s;
        if (dir * progress >= length) {
            log.completed = true;
            log.lap_time = t;
            return log;
        }
    }
    log.lap_time = t;
    return log;
}

struct CollectOptions {
    int laps = 2;
    bool bidirectional = false;
    double sample_rate_hz = 1.5;
    double control_rate_hz = 30.0;
    double max_sim_seconds_per_lap = 600.0;
    CameraRig rig;
    VehicleParams vehicle;
    ExpertConfig expert;
    double vehicle_radius_m = 0.9;
};

// Drives the scripted demonstrator around the loop and records frames plus
// the commands it issued, producing a manifest-backed dataset under out_dir.
// Lane-keeping and open-road scenarios record all three rig slots; obstacle
// scenarios record the center slot only.
inline Dataset collect(const TrackScenario& scn, const CollectOptions& opts,
                       const std::filesystem::path& out_dir) {
    if (opts.laps < 1) throw std::invalid_argument("collect needs at least one lap");
    if (!(opts.sample_rate_hz > 0.0) || !(opts.control_rate_hz > 0.0))
        throw std::invalid_argument("collect rates must be positive");
    std::filesystem::create_directories(out_dir / "frames");

    const bool side_frames = scn.tag != BehaviorTag::collision && opts.rig.count == 3;
    const auto& idx = scn.index();
    const double length = idx.length();
    const double dt = 1.0 / opts.control_rate_hz;

    Dataset ds;
    ds.behavior_tag = scn.tag;
    ds.root = out_dir;

    long long frame_id = 0;
    double t_global = 0.0;
    double next_sample = 0.0;
    for (int lap = 0; lap < opts.laps; ++lap) {
        const bool reverse = opts.bidirectional && lap % 2 == 1;
        VehicleState state{scn.spawn.x, scn.spawn.y,
                           reverse ? wrap_angle(scn.spawn.yaw + kPi) : scn.spawn.yaw, 0.0};
        const auto q0 = idx.nearest({state.x, state.y}, 12.0);
        if (!q0) throw std::runtime_error("spawn pose is not on the track");
        const double dir = reverse ? -1.0 : 1.0;
        double s_prev = q0->s;
        double progress = 0.0;
        double t_lap = 0.0;
        while (dir * progress < length) {
            if (t_lap > opts.max_sim_seconds_per_lap)
                throw std::runtime_error("demonstrator failed to finish a lap");
            const auto cmd = expert_policy(scn, state, opts.expert, opts.vehicle);
            if (t_global >= next_sample) {
                next_sample += 1.0 / opts.sample_rate_hz;
                DrivingSample sample;
                sample.timestamp = t_global;
                sample.steering = cmd.steering;
                sample.throttle = cmd.throttle;
                sample.brake = cmd.brake;
                sample.speed = state.v;
                const ScenePose pose{state.x, state.y, state.yaw};
                std::ostringstream base;
                base << "frames/" << std::setfill('0') << std::setw(6) << frame_id;
                const auto save = [&](FrameSource slot, const char* suffix) {
                    const auto img = render_camera(scn, pose, slot, opts.rig);
                    const std::string ref = base.str() + suffix;
                    write_ppm(img, (out_dir / ref).string());
                    return ref;
                };
                sample.center = save(FrameSource::center, "_c.ppm");
                if (side_frames) {
                    sample.left = save(FrameSource::left, "_l.ppm");
                    sample.right = save(FrameSource::right, "_r.ppm");
                }
                ds.samples.push_back(std::move(sample));
                ++frame_id;
            }
            state = step_vehicle(state, cmd.steering, cmd.throttle, cmd.brake, dt, opts.vehicle,
                                 scn.speed_limit_kmh);
            t_global += dt;
            t_lap += dt;
            const auto q = idx.nearest({state.x, state.y}, 12.0);
            if (!q) throw std::runtime_error("demonstrator left the track");
            progress += idx.s_delta(s_prev, q->s);
            s_prev = q->s;
        }
    }
    write_manifest(out_dir / "manifest.csv", ds);
    return ds;
}

}  // namespace deskpilot
