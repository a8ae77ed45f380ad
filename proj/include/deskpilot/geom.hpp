#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace deskpilot {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

using Quad = std::array<Vec2, 4>;

// Sort the four vertices by angle about their centroid so the quad is a
// simple polygon regardless of draw order.
inline Quad order_by_angle(Quad q) {
    Vec2 c{(q[0].x + q[1].x + q[2].x + q[3].x) / 4.0,
           (q[0].y + q[1].y + q[2].y + q[3].y) / 4.0};
    std::sort(q.begin(), q.end(), [&](Vec2 a, Vec2 b) {
        return std::atan2(a.y - c.y, a.x - c.x) < std::atan2(b.y - c.y, b.x - c.x);
    });
    return q;
}

// Even-odd rule point-in-polygon test.
inline bool point_in_polygon(Vec2 p, const Vec2* poly, int n) {
    bool inside = false;
    for (int i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

inline bool point_in_quad(Vec2 p, const Quad& q) { return point_in_polygon(p, q.data(), 4); }

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a <= 0.0) a += 2.0 * kPi;
    return a - kPi;
}

}  // namespace deskpilot
