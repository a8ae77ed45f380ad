#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "deskpilot/driving_sample.hpp"
#include "deskpilot/geom.hpp"
#include "deskpilot/rng.hpp"

namespace deskpilot {

// World frame: planar ground coordinates with y pointing to the driver's
// right when heading along +x, i.e. yaw grows clockwise seen from above and
// a positive steering command turns the vehicle toward positive lateral
// offsets. heading(yaw) = (cos yaw, sin yaw); the right-hand lateral
// direction is (-sin yaw, cos yaw). This orientation makes the rendered
// right side of the road land on the right side of the image, which is what
// the side-camera steering corrections assume.

struct ScenePose {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
};

enum class Surface : std::uint8_t { road, bridge };

inline const char* to_string(Surface s) { return s == Surface::bridge ? "bridge" : "road"; }
inline Surface surface_from_string(const std::string& s) {
    if (s == "road") return Surface::road;
    if (s == "bridge") return Surface::bridge;
    throw std::invalid_argument("unknown surface tag: " + s);
}

struct CenterlinePoint {
    double x = 0.0;
    double y = 0.0;
    double half_width = 4.0;
    Surface surface = Surface::road;
};

struct Cone {
    double x = 0.0;
    double y = 0.0;
    double radius = 0.45;
};

// Trackside prop (pole/trunk); casts a ground shadow whose direction follows
// the scene light.
struct Prop {
    double x = 0.0;
    double y = 0.0;
    double radius = 0.25;
};

struct SceneLight {
    double intensity = 1.0;       // multiplies rendered brightness
    double direction_deg = 0.0;   // rotates prop shadow azimuth
};

class TrackIndex;

// A complete driving scenario: closed centerline with per-vertex lane
// geometry, obstacles, props, lighting, and spawn. lane_keep restricts the
// drivable corridor to the right lane (half the road, center at +w/4);
// otherwise the whole road is drivable.
struct TrackScenario {
    std::string id;
    BehaviorTag tag = BehaviorTag::simplistic;
    std::vector<CenterlinePoint> centerline;  // closed; last vertex joins the first
    std::vector<Cone> obstacles;
    std::vector<Prop> props;
    SceneLight light;
    double speed_limit_kmh = 30.0;
    ScenePose spawn;
    bool lane_keep = false;

    // Lateral position of the drivable-corridor center relative to the
    // centerline, and the corridor half-width, given the local road
    // half-width.
    double corridor_offset(double half_width) const { return lane_keep ? half_width / 2.0 : 0.0; }
    double corridor_half(double half_width) const { return lane_keep ? half_width / 2.0 : half_width; }

    const TrackIndex& index() const;
    void invalidate_index() { index_cache_.reset(); }

  private:
    mutable std::shared_ptr<const TrackIndex> index_cache_;
};

// Result of projecting a world point onto the centerline.
struct TrackQuery {
    double s = 0.0;          // arclength of the projection
    double lateral = 0.0;    // signed offset, positive to the right of travel along the polyline
    double dist = 0.0;       // distance to the nearest centerline segment
    double half_width = 0.0;
    Surface surface = Surface::road;
};

// Arclength parametrization plus a uniform spatial grid over the centerline
// segments, so nearest-segment queries cost a handful of candidates instead
// of a scan. Built once per centerline; scenario edits that do not touch the
// centerline keep it valid.
class TrackIndex {
  public:
    explicit TrackIndex(const std::vector<CenterlinePoint>& centerline) {
        if (centerline.size() < 3)
            throw std::invalid_argument("TrackIndex: closed centerline needs >= 3 vertices");
        const std::size_t n = centerline.size();
        double s = 0.0;
        double min_x = centerline[0].x, max_x = min_x;
        double min_y = centerline[0].y, max_y = min_y;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = centerline[i];
            const auto& b = centerline[(i + 1) % n];
            Seg seg;
            seg.a = {a.x, a.y};
            seg.b = {b.x, b.y};
            const Vec2 d = seg.b - seg.a;
            seg.len = norm(d);
            if (seg.len <= 1e-9) throw std::invalid_argument("TrackIndex: zero-length segment");
            seg.t = (1.0 / seg.len) * d;
            seg.s0 = s;
            seg.hw_a = a.half_width;
            seg.hw_b = b.half_width;
            seg.surface = a.surface;
            s += seg.len;
            segs_.push_back(seg);
            min_x = std::min({min_x, a.x});
            max_x = std::max({max_x, a.x});
            min_y = std::min({min_y, a.y});
            max_y = std::max({max_y, a.y});
        }
        length_ = s;

        cell_ = 6.0;
        ox_ = min_x - 2.0 * cell_;
        oy_ = min_y - 2.0 * cell_;
        nx_ = static_cast<int>((max_x - ox_) / cell_) + 3;
        ny_ = static_cast<int>((max_y - oy_) / cell_) + 3;
        cells_.resize(static_cast<std::size_t>(nx_) * ny_);
        for (std::size_t i = 0; i < segs_.size(); ++i) {
            const auto& seg = segs_[i];
            const int x0 = cell_of_x(std::min(seg.a.x, seg.b.x));
            const int x1 = cell_of_x(std::max(seg.a.x, seg.b.x));
            const int y0 = cell_of_y(std::min(seg.a.y, seg.b.y));
            const int y1 = cell_of_y(std::max(seg.a.y, seg.b.y));
            for (int cy = y0; cy <= y1; ++cy)
                for (int cx = x0; cx <= x1; ++cx)
                    cells_[static_cast<std::size_t>(cy) * nx_ + cx].push_back(static_cast<int>(i));
        }
    }

    double length() const { return length_; }

    double wrap_s(double s) const {
        s = std::fmod(s, length_);
        return s < 0.0 ? s + length_ : s;
    }

    // Signed arclength difference from s_from to s_to, in (-L/2, L/2].
    double s_delta(double s_from, double s_to) const {
        double d = wrap_s(s_to) - wrap_s(s_from);
        if (d > length_ / 2.0) d -= length_;
        if (d <= -length_ / 2.0) d += length_;
        return d;
    }

    // Nearest centerline projection within max_dist of p, if any. The grid
    // guarantees a hit for any point within ~one cell of the track, which
    // covers every on-road point; far-away points return nullopt.
    std::optional<TrackQuery> nearest(Vec2 p, double max_dist = 6.0) const {
        const int cx = cell_of_x(p.x);
        const int cy = cell_of_y(p.y);
        double best = max_dist;
        const Seg* best_seg = nullptr;
        double best_proj = 0.0;
        for (int gy = std::max(0, cy - 1); gy <= std::min(ny_ - 1, cy + 1); ++gy) {
            for (int gx = std::max(0, cx - 1); gx <= std::min(nx_ - 1, cx + 1); ++gx) {
                for (int si : cells_[static_cast<std::size_t>(gy) * nx_ + gx]) {
                    const Seg& seg = segs_[si];
                    const Vec2 rel = p - seg.a;
                    const double proj = std::clamp(dot(rel, seg.t), 0.0, seg.len);
                    const Vec2 q = seg.a + proj * seg.t;
                    const double d = norm(p - q);
                    if (d < best) {
                        best = d;
                        best_seg = &seg;
                        best_proj = proj;
                    }
                }
            }
        }
        if (!best_seg) return std::nullopt;
        TrackQuery out;
        out.s = wrap_s(best_seg->s0 + best_proj);
        out.lateral = cross(best_seg->t, p - best_seg->a);
        out.dist = best;
        const double f = best_proj / best_seg->len;
        out.half_width = best_seg->hw_a + f * (best_seg->hw_b - best_seg->hw_a);
        out.surface = best_seg->surface;
        return out;
    }

    struct PathPoint {
        Vec2 pos;
        Vec2 tangent;
        double yaw = 0.0;
        double half_width = 0.0;
        Surface surface = Surface::road;
    };

    PathPoint at(double s) const {
        s = wrap_s(s);
        // binary search for the segment containing s
        std::size_t lo = 0, hi = segs_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi + 1) / 2;
            if (segs_[mid].s0 <= s)
                lo = mid;
            else
                hi = mid - 1;
        }
        const Seg& seg = segs_[lo];
        const double proj = std::clamp(s - seg.s0, 0.0, seg.len);
        PathPoint p;
        p.pos = seg.a + proj * seg.t;
        p.tangent = seg.t;
        p.yaw = std::atan2(seg.t.y, seg.t.x);
        const double f = proj / seg.len;
        p.half_width = seg.hw_a + f * (seg.hw_b - seg.hw_a);
        p.surface = seg.surface;
        return p;
    }

  private:
    struct Seg {
        Vec2 a, b, t;
        double len = 0.0, s0 = 0.0;
        double hw_a = 0.0, hw_b = 0.0;
        Surface surface = Surface::road;
    };

    int cell_of_x(double x) const {
        return std::clamp(static_cast<int>((x - ox_) / cell_), 0, nx_ - 1);
    }
    int cell_of_y(double y) const {
        return std::clamp(static_cast<int>((y - oy_) / cell_), 0, ny_ - 1);
    }

    std::vector<Seg> segs_;
    double length_ = 0.0;
    double cell_ = 6.0, ox_ = 0.0, oy_ = 0.0;
    int nx_ = 0, ny_ = 0;
    std::vector<std::vector<int>> cells_;
};

inline const TrackIndex& TrackScenario::index() const {
    if (!index_cache_) index_cache_ = std::make_shared<const TrackIndex>(centerline);
    return *index_cache_;
}

namespace detail {

inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const auto orient = [](Vec2 p, Vec2 q, Vec2 r) { return cross(q - p, r - p); };
    const double o1 = orient(a, b, c), o2 = orient(a, b, d);
    const double o3 = orient(c, d, a), o4 = orient(c, d, b);
    return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0));
}

}  // namespace detail

// Structural checks: closed non-self-intersecting centerline, positive
// widths, obstacles leaving at least half the road free, sane light/limits.
inline void validate_scenario(const TrackScenario& scn) {
    const std::size_t n = scn.centerline.size();
    if (n < 3) throw std::invalid_argument("scenario: centerline needs >= 3 vertices");
    for (const auto& v : scn.centerline)
        if (!(v.half_width > 0.0)) throw std::invalid_argument("scenario: half_width must be > 0");
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a{scn.centerline[i].x, scn.centerline[i].y};
        const Vec2 b{scn.centerline[(i + 1) % n].x, scn.centerline[(i + 1) % n].y};
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;  // adjacent through the wrap
            const Vec2 c{scn.centerline[j].x, scn.centerline[j].y};
            const Vec2 d{scn.centerline[(j + 1) % n].x, scn.centerline[(j + 1) % n].y};
            if (detail::segments_intersect(a, b, c, d))
                throw std::invalid_argument("scenario: centerline self-intersects near vertex " +
                                            std::to_string(i));
        }
    }
    if (!(scn.speed_limit_kmh > 0.0)) throw std::invalid_argument("scenario: speed limit > 0");
    if (!(scn.light.intensity >= 0.0)) throw std::invalid_argument("scenario: light intensity >= 0");
    const auto& idx = scn.index();
    for (const auto& cone : scn.obstacles) {
        const auto q = idx.nearest({cone.x, cone.y});
        if (!q) throw std::invalid_argument("scenario: cone far off track");
        const double blocked_lo = std::max(-q->half_width, q->lateral - cone.radius);
        const double blocked_hi = std::min(q->half_width, q->lateral + cone.radius);
        const double free_width = 2.0 * q->half_width - std::max(0.0, blocked_hi - blocked_lo);
        if (free_width < q->half_width)
            throw std::invalid_argument("scenario: obstacle blocks more than half the road");
    }
}

// Scatter `count` cones along the track at roughly even arclength spacing
// with seeded jitter, alternating road halves so roughly half the width is
// blocked at each one. Existing obstacles are replaced.
inline void place_cones(TrackScenario& scn, int count, Rng& rng) {
    scn.obstacles.clear();
    if (count <= 0) return;
    const auto& idx = scn.index();
    const double spacing = idx.length() / count;
    int side = rng.bernoulli(0.5) ? 1 : -1;
    for (int i = 0; i < count; ++i) {
        const double s = (i + 0.35 + 0.3 * rng.uniform()) * spacing;
        const auto p = idx.at(s);
        const double lateral = side * p.half_width / 2.0;
        const Vec2 right{-p.tangent.y, p.tangent.x};
        Cone cone;
        cone.x = p.pos.x + lateral * right.x;
        cone.y = p.pos.y + lateral * right.y;
        cone.radius = 0.45;
        scn.obstacles.push_back(cone);
        side = -side;
    }
}

namespace detail {

// Closed harmonic loop r(phi) = r0 + a2 cos(2 phi) + a3 sin(3 phi) sampled
// at `points` vertices; gentle enough to avoid self-intersection.
inline std::vector<CenterlinePoint> harmonic_loop(double r0, double a2, double a3, int points,
                                                  double half_width) {
    std::vector<CenterlinePoint> line;
    for (int i = 0; i < points; ++i) {
        const double phi = 2.0 * kPi * i / points;
        const double r = r0 + a2 * std::cos(2.0 * phi) + a3 * std::sin(3.0 * phi);
        CenterlinePoint p;
        p.x = r * std::cos(phi);
        p.y = r * std::sin(phi);
        p.half_width = half_width;
        line.push_back(p);
    }
    return line;
}

inline void spawn_at(TrackScenario& scn, double s, double lateral) {
    const auto p = scn.index().at(s);
    const Vec2 right{-p.tangent.y, p.tangent.x};
    scn.spawn.x = p.pos.x + lateral * right.x;
    scn.spawn.y = p.pos.y + lateral * right.y;
    scn.spawn.yaw = p.yaw;
}

}  // namespace detail

// Free-driving loop with a plank bridge stretch: wide lane, no obstacles.
inline TrackScenario make_simplistic_scenario() {
    TrackScenario scn;
    scn.id = "simplistic";
    scn.tag = BehaviorTag::simplistic;
    scn.centerline = detail::harmonic_loop(90.0, 6.0, 4.0, 720, 4.0);
    scn.speed_limit_kmh = 30.0;
    // tag a ~50 m stretch as the bridge
    const double total = scn.index().length();
    const double s_begin = 0.15 * total;
    double s = 0.0;
    for (std::size_t i = 0; i < scn.centerline.size(); ++i) {
        if (s >= s_begin && s <= s_begin + 50.0) scn.centerline[i].surface = Surface::bridge;
        const auto& a = scn.centerline[i];
        const auto& b = scn.centerline[(i + 1) % scn.centerline.size()];
        s += std::hypot(b.x - a.x, b.y - a.y);
    }
    scn.invalidate_index();
    detail::spawn_at(scn, 2.0, 0.0);
    validate_scenario(scn);
    return scn;
}

// Lane-keeping loop: sharper curvature, two lanes split by a dashed divider,
// dense trackside props casting shadows. The drivable corridor is the right
// lane.
inline TrackScenario make_rigorous_scenario() {
    TrackScenario scn;
    scn.id = "rigorous";
    scn.tag = BehaviorTag::rigorous;
    scn.centerline = detail::harmonic_loop(70.0, 10.0, 4.0, 720, 4.5);
    scn.lane_keep = true;
    scn.speed_limit_kmh = 30.0;
    const auto& idx = scn.index();
    int side = 1;
    for (double s = 5.0; s < idx.length() - 5.0; s += 15.0) {
        const auto p = idx.at(s);
        const Vec2 right{-p.tangent.y, p.tangent.x};
        const double lateral = side * (p.half_width + 2.5);
        scn.props.push_back({p.pos.x + lateral * right.x, p.pos.y + lateral * right.y, 0.25});
        side = -side;
    }
    detail::spawn_at(scn, 2.0, 4.5 / 2.0);
    validate_scenario(scn);
    return scn;
}

// Obstacle course: gentle loop with 20 seeded cones alternating road halves.
inline TrackScenario make_collision_scenario(std::uint64_t cone_seed = 2024) {
    TrackScenario scn;
    scn.id = "collision";
    scn.tag = BehaviorTag::collision;
    scn.centerline = detail::harmonic_loop(85.0, 8.0, 0.0, 720, 4.0);
    scn.speed_limit_kmh = 30.0;
    Rng rng(cone_seed);
    place_cones(scn, 20, rng);
    detail::spawn_at(scn, 2.0, 0.0);
    validate_scenario(scn);
    return scn;
}

inline TrackScenario make_scenario(const std::string& id) {
    if (id == "simplistic") return make_simplistic_scenario();
    if (id == "rigorous") return make_rigorous_scenario();
    if (id == "collision") return make_collision_scenario();
    throw std::invalid_argument("unknown scenario: " + id);
}

// --- scenario file format -------------------------------------------------
// Line-oriented key-value text; '#' starts a comment. Keys: scenario
// (format version), id, behavior, speed_limit, lane_keep, light_intensity,
// light_direction, spawn x y yaw, vertex x y half_width surface (repeated,
// in order), cone x y radius, prop x y radius.

inline void save_scenario(const std::filesystem::path& path, const TrackScenario& scn) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_scenario: cannot open " + path.string());
    out << std::setprecision(12);
    out << "scenario 1\n";
    out << "id " << scn.id << "\n";
    out << "behavior " << to_string(scn.tag) << "\n";
    out << "speed_limit " << scn.speed_limit_kmh << "\n";
    out << "lane_keep " << (scn.lane_keep ? 1 : 0) << "\n";
    out << "light_intensity " << scn.light.intensity << "\n";
    out << "light_direction " << scn.light.direction_deg << "\n";
    out << "spawn " << scn.spawn.x << ' ' << scn.spawn.y << ' ' << scn.spawn.yaw << "\n";
    for (const auto& v : scn.centerline)
        out << "vertex " << v.x << ' ' << v.y << ' ' << v.half_width << ' ' << to_string(v.surface)
            << "\n";
    for (const auto& c : scn.obstacles) out << "cone " << c.x << ' ' << c.y << ' ' << c.radius << "\n";
    for (const auto& p : scn.props) out << "prop " << p.x << ' ' << p.y << ' ' << p.radius << "\n";
    if (!out) throw std::runtime_error("save_scenario: write failed for " + path.string());
}

inline TrackScenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_scenario: cannot open " + path.string());
    TrackScenario scn;
    bool versioned = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        const auto fail = [&](const std::string& why) {
            throw std::runtime_error("load_scenario: " + path.string() + ":" +
                                     std::to_string(lineno) + ": " + why);
        };
        if (key == "scenario") {
            int version = 0;
            if (!(ls >> version) || version != 1) fail("unsupported scenario version");
            versioned = true;
        } else if (key == "id") {
            if (!(ls >> scn.id)) fail("bad id");
        } else if (key == "behavior") {
            std::string tag;
            if (!(ls >> tag)) fail("bad behavior");
            scn.tag = behavior_from_string(tag);
        } else if (key == "speed_limit") {
            if (!(ls >> scn.speed_limit_kmh)) fail("bad speed_limit");
        } else if (key == "lane_keep") {
            int v = 0;
            if (!(ls >> v)) fail("bad lane_keep");
            scn.lane_keep = v != 0;
        } else if (key == "light_intensity") {
            if (!(ls >> scn.light.intensity)) fail("bad light_intensity");
        } else if (key == "light_direction") {
            if (!(ls >> scn.light.direction_deg)) fail("bad light_direction");
        } else if (key == "spawn") {
            if (!(ls >> scn.spawn.x >> scn.spawn.y >> scn.spawn.yaw)) fail("bad spawn");
        } else if (key == "vertex") {
            CenterlinePoint v;
            std::string surface;
            if (!(ls >> v.x >> v.y >> v.half_width >> surface)) fail("bad vertex");
            v.surface = surface_from_string(surface);
            scn.centerline.push_back(v);
        } else if (key == "cone") {
            Cone c;
            if (!(ls >> c.x >> c.y >> c.radius)) fail("bad cone");
            scn.obstacles.push_back(c);
        } else if (key == "prop") {
            Prop p;
            if (!(ls >> p.x >> p.y >> p.radius)) fail("bad prop");
            scn.props.push_back(p);
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    if (!versioned) throw std::runtime_error("load_scenario: missing version line in " + path.string());
    validate_scenario(scn);
    return scn;
}

}  // namespace deskpilot
