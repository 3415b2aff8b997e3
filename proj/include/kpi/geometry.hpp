#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace kpi {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(b - a); }

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
inline double orient2d(Vec2 a, Vec2 b, Vec2 c) {
    const long double abx = static_cast<long double>(b.x) - a.x;
    const long double aby = static_cast<long double>(b.y) - a.y;
    const long double acx = static_cast<long double>(c.x) - a.x;
    const long double acy = static_cast<long double>(c.y) - a.y;
    return static_cast<double>(abx * acy - aby * acx);
}

/// Positive when d lies strictly inside the circumcircle of the CCW triangle (a, b, c).
double in_circle(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

/// Signed area of a closed polygon (positive for CCW vertex order).
double signed_area(std::span<const Vec2> polygon);

/// Distance from p to the closed segment [a, b].
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// True when the closed segments [a, b] and [c, d] share any point.
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

/// True when no two non-adjacent edges of the closed polygon touch.
bool is_simple_polygon(std::span<const Vec2> polygon);

enum class PointLocation { Outside, OnBoundary, Inside };

/// Classifies p against a closed polygon; `tol` widens the boundary band.
PointLocation locate_in_polygon(Vec2 p, std::span<const Vec2> polygon, double tol = 0.0);

}  // namespace kpi
