#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "deskpilot/driving_sample.hpp"
#include "deskpilot/geom.hpp"
#include "deskpilot/image.hpp"
#include "deskpilot/sim/scenario.hpp"

namespace deskpilot {

// Onboard camera bank: one center camera, or three with left/right offset
// laterally by half the span each way.
struct CameraRig {
    int count = 3;  // 1 (center only) or 3
    double span_m = 0.95;
    double height_m = 1.6;
    double pitch_rad = deg2rad(8.0);
    double fov_h_rad = deg2rad(60.0);
    int width = 320;
    int height = 160;

    double slot_lateral(FrameSource slot) const {
        switch (slot) {
            case FrameSource::left: return -span_m / 2.0;
            case FrameSource::right: return span_m / 2.0;
            default: return 0.0;
        }
    }
};

namespace detail {

// Deterministic per-cell noise so surfaces have texture; returns [-1, 1).
inline double hash_noise(int ix, int iy) {
    std::uint32_t h = static_cast<std::uint32_t>(ix) * 0x8da6b343u ^
                      static_cast<std::uint32_t>(iy) * 0xd8163841u;
    h ^= h >> 13;
    h *= 0x9e3779b1u;
    h ^= h >> 16;
    return static_cast<double>(h & 0xFFFFFFu) / double(0x800000) - 1.0;
}

struct Rgb {
    double r = 0.0, g = 0.0, b = 0.0;
};

inline Rgb scale(Rgb c, double k) { return {c.r * k, c.g * k, c.b * k}; }

// Ground shading at world point p seen from distance d.
inline Rgb shade_ground(const TrackScenario& scn, const TrackIndex& idx, Vec2 p, double d,
                        const std::vector<Quad>& shadows) {
    Rgb c;
    const double noise_amp = std::max(0.0, 1.0 - d / 80.0);
    const double n = hash_noise(static_cast<int>(std::floor(p.x * 2.0)),
                                static_cast<int>(std::floor(p.y * 2.0)));
    const auto q = idx.nearest(p);
    const double lat = q ? std::abs(q->lateral) : 1e9;
    if (q && lat <= q->half_width) {
        const double hw = q->half_width;
        if (q->surface == Surface::bridge) {
            // planks with cross seams; dark rails instead of painted lines
            const bool seam = std::fmod(q->s, 1.2) < 0.22;
            c = seam ? Rgb{118, 94, 66} : Rgb{152, 122, 86};
            if (lat >= hw - 0.35) c = {62, 44, 30};
        } else {
            c = {105, 105, 108};
            if (lat >= hw - 0.45 && lat <= hw - 0.15) c = {233, 233, 230};  // edge lines
            if (scn.lane_keep && lat <= 0.12 && std::fmod(q->s, 4.0) < 2.0)
                c = {233, 233, 230};  // dashed divider
        }
        c.r += 5.0 * n * noise_amp;
        c.g += 5.0 * n * noise_amp;
        c.b += 5.0 * n * noise_amp;
    } else if (q && lat <= q->half_width + 0.7) {
        c = {128, 112, 82};  // dirt shoulder
        c.r += 7.0 * n * noise_amp;
        c.g += 7.0 * n * noise_amp;
        c.b += 7.0 * n * noise_amp;
    } else {
        c = {92, 140, 72};  // grass
        c.r += 9.0 * n * noise_amp;
        c.g += 9.0 * n * noise_amp;
        c.b += 9.0 * n * noise_amp;
    }
    for (const auto& quad : shadows) {
        if (point_in_quad(p, quad)) {
            c = scale(c, 0.65);
            break;
        }
    }
    // distant ground fades into the horizon haze
    if (d > 120.0) {
        const double f = std::min(1.0, (d - 120.0) / 180.0);
        c.r += (205.0 - c.r) * f;
        c.g += (215.0 - c.g) * f;
        c.b += (226.0 - c.b) * f;
    }
    return c;
}

}  // namespace detail

// Software raster of the scene onto one camera slot: per-pixel ground-plane
// ray cast for road/terrain, then cones and props as depth-sorted vertical
// billboards, then a single multiplicative light pass with one final
// round+clamp. Pure function of (scenario, pose, slot, rig).
inline ImageU8 render_camera(const TrackScenario& scn, const ScenePose& pose, FrameSource slot,
                             const CameraRig& rig = {}) {
    const TrackIndex& idx = scn.index();
    const int W = rig.width, H = rig.height;
    const double fx = (W / 2.0) / std::tan(rig.fov_h_rad / 2.0);
    const double fy = fx;
    const double cx = W / 2.0, cy = H / 2.0;

    const double cpsi = std::cos(pose.yaw), spsi = std::sin(pose.yaw);
    const double ca = std::cos(rig.pitch_rad), sa = std::sin(rig.pitch_rad);
    // camera basis in world coords (z up): forward pitched down, right flat
    const double Fx = cpsi * ca, Fy = spsi * ca, Fz = -sa;
    const double Rx = -spsi, Ry = cpsi, Rz = 0.0;
    const double Ux = cpsi * sa, Uy = spsi * sa, Uz = ca;

    const double lat = rig.slot_lateral(slot);
    const double ox = pose.x + lat * Rx;
    const double oy = pose.y + lat * Ry;
    const double oz = rig.height_m;

    // prop shadow quads, azimuth steered by the scene light direction
    std::vector<Quad> shadows;
    const double az = deg2rad(45.0 + scn.light.direction_deg);
    const Vec2 su{std::cos(az), std::sin(az)};
    const Vec2 sn{-su.y, su.x};
    for (const auto& prop : scn.props) {
        const Vec2 base{prop.x, prop.y};
        const double w = 2.0 * prop.radius + 0.5;
        const double len = 6.0;
        Quad quad{base + (w / 2.0) * sn, base - (w / 2.0) * sn,
                  base + len * su - (w / 2.0) * sn, base + len * su + (w / 2.0) * sn};
        shadows.push_back(order_by_angle(quad));
    }

    std::vector<detail::Rgb> frame(static_cast<std::size_t>(W) * H);
    for (int v = 0; v < H; ++v) {
        const double yn = (v + 0.5 - cy) / fy;
        for (int u = 0; u < W; ++u) {
            const double xn = (u + 0.5 - cx) / fx;
            const double Dx = Fx + xn * Rx - yn * Ux;
            const double Dy = Fy + xn * Ry - yn * Uy;
            const double Dz = Fz + xn * Rz - yn * Uz;
            detail::Rgb c;
            if (Dz >= -1e-9) {
                // sky gradient toward the horizon
                const double f = std::clamp(1.0 - v / cy, 0.0, 1.0);
                c = {205.0 - 57.0 * f, 215.0 - 37.0 * f, 226.0 - 12.0 * f};
            } else {
                const double t = oz / -Dz;
                const Vec2 g{ox + t * Dx, oy + t * Dy};
                const double d = t * std::sqrt(Dx * Dx + Dy * Dy + Dz * Dz);
                c = detail::shade_ground(scn, idx, g, d, shadows);
            }
            frame[static_cast<std::size_t>(v) * W + u] = c;
        }
    }

    // billboards: depth-sorted far to near so closer objects overwrite
    struct Board {
        double zf;
        double u_c, v_top, v_bottom;
        double hw_top, hw_bottom;  // half width in pixels
        bool cone;
    };
    std::vector<Board> boards;
    const auto project = [&](double wx, double wy, double height, bool cone, double radius) {
        const double px = wx - ox, py = wy - oy;
        const double zf = px * Fx + py * Fy + (0.0 - oz) * Fz;  // depth of the base
        if (zf < 0.6 || zf > 260.0) return;
        const double xr = px * Rx + py * Ry;
        const double yu_b = px * Ux + py * Uy + (0.0 - oz) * Uz;
        const double yu_t = px * Ux + py * Uy + (height - oz) * Uz;
        const double zf_t = px * Fx + py * Fy + (height - oz) * Fz;
        Board b;
        b.zf = zf;
        b.u_c = cx + fx * xr / zf;
        b.v_bottom = cy - fy * yu_b / zf;
        b.v_top = cy - fy * yu_t / std::max(0.3, zf_t);
        b.hw_bottom = fx * radius / zf;
        b.hw_top = b.hw_bottom * (cone ? 0.35 : 1.0);
        b.cone = cone;
        boards.push_back(b);
    };
    for (const auto& cone : scn.obstacles) project(cone.x, cone.y, 0.8, true, cone.radius);
    for (const auto& prop : scn.props) project(prop.x, prop.y, 2.6, false, prop.radius);
    std::sort(boards.begin(), boards.end(), [](const Board& a, const Board& b) { return a.zf > b.zf; });

    for (const auto& b : boards) {
        const int v0 = std::max(0, static_cast<int>(std::ceil(b.v_top)));
        const int v1 = std::min(H - 1, static_cast<int>(std::floor(b.v_bottom)));
        const double span_v = std::max(1e-6, b.v_bottom - b.v_top);
        for (int v = v0; v <= v1; ++v) {
            const double f = (v - b.v_top) / span_v;  // 0 top .. 1 bottom
            const double hw = b.hw_top + f * (b.hw_bottom - b.hw_top);
            const int u0 = std::max(0, static_cast<int>(std::ceil(b.u_c - hw)));
            const int u1 = std::min(W - 1, static_cast<int>(std::floor(b.u_c + hw)));
            detail::Rgb c;
            if (b.cone)
                c = (f >= 0.35 && f <= 0.55) ? detail::Rgb{240, 240, 238}
                                             : detail::Rgb{232, 88, 24};
            else
                c = {58, 44, 34};
            c = detail::scale(c, 0.8 + 0.2 * f);
            for (int u = u0; u <= u1; ++u) frame[static_cast<std::size_t>(v) * W + u] = c;
        }
    }

    ImageU8 img(W, H);
    const double k = scn.light.intensity;
    for (int v = 0; v < H; ++v) {
        for (int u = 0; u < W; ++u) {
            const auto& c = frame[static_cast<std::size_t>(v) * W + u];
            img.at(u, v, 0) = clamp_u8(std::lround(c.r * k));
            img.at(u, v, 1) = clamp_u8(std::lround(c.g * k));
            img.at(u, v, 2) = clamp_u8(std::lround(c.b * k));
        }
    }
    return img;
}

}  // namespace deskpilot
