#pragma once

#include "kpi/geometry.hpp"

#include <cstddef>
#include <vector>

namespace kpi {

struct Polyline {
    std::vector<Vec2> points;
    bool closed = true;
};

/// Admissible-triangle bounds for the two-pass corner detector.
struct CornerParams {
    double d_min = 0.0;
    double d_max = 0.0;
    double alpha_max_deg = 160.0;

    /// Scale-relative defaults: d_min = 2x and d_max = 10x the mean edge length.
    static CornerParams defaults_for(const Polyline& b);

    /// Defaults with the arm lengths raised to the scale of a `target_count`
    /// vertex polygon (d_max = perimeter / 4 target, d_min = d_max / 4), so
    /// that noise below that scale does not register as corners.
    static CornerParams for_target(const Polyline& b, std::size_t target_count);
};

struct Corner {
    std::size_t index;
    double sharpness_deg;  // 180 minus the opening angle
};

/// Corners of a closed polyline, sorted by index. Each survivor has the
/// sharpest opening angle among its neighbours within d_max arc length.
std::vector<Corner> detect_corner_details(const Polyline& b, const CornerParams& cp);

std::vector<std::size_t> detect_corners(const Polyline& b, const CornerParams& cp);

/// Simplified closed polygon through detected feature points of `b`.
///
/// Without explicit parameters the detector runs with for_target(b, target_count).
/// Keeps the `target_count` sharpest corners when more are found and falls
/// back to uniform subsampling when fewer than three survive. A polyline
/// already at or below `target_count` vertices is returned as is.
Polyline simplify_border(const Polyline& b, std::size_t target_count);
Polyline simplify_border(const Polyline& b, std::size_t target_count, const CornerParams& cp);

/// Vertex budget for a border given the number of sparse samples:
/// ratio x samples, clamped to [min_count, samples].
std::size_t border_target_count(std::size_t sample_count, double ratio = 0.5, std::size_t min_count = 8);

}  // namespace kpi
