#include "kpi/border.hpp"

#include "kpi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace kpi {

namespace {

void check_closed(const Polyline& b) {
    if (!b.closed) throw GeometryError("border polyline must be closed");
    if (b.points.size() < 3) throw GeometryError("border polyline needs at least 3 vertices");
    const std::size_t n = b.points.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (b.points[i] == b.points[(i + 1) % n]) {
            throw GeometryError("border polyline has repeated consecutive vertex at " + std::to_string(i));
        }
    }
}

double mean_edge_length(const Polyline& b) {
    const std::size_t n = b.points.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += distance(b.points[i], b.points[(i + 1) % n]);
    return total / static_cast<double>(n);
}

}  // namespace

CornerParams CornerParams::defaults_for(const Polyline& b) {
    check_closed(b);
    const double mean = mean_edge_length(b);
    return CornerParams{2.0 * mean, 10.0 * mean, 160.0};
}

CornerParams CornerParams::for_target(const Polyline& b, std::size_t target_count) {
    CornerParams cp = defaults_for(b);
    if (target_count == 0) return cp;
    const double perimeter = mean_edge_length(b) * static_cast<double>(b.points.size());
    const double spacing = perimeter / static_cast<double>(target_count);
    cp.d_min = std::max(cp.d_min, spacing / 16.0);
    cp.d_max = std::max(cp.d_max, spacing / 4.0);
    return cp;
}

std::vector<Corner> detect_corner_details(const Polyline& b, const CornerParams& cp) {
    check_closed(b);
    if (!(cp.d_min > 0.0 && cp.d_min <= cp.d_max) || !(cp.alpha_max_deg > 0.0 && cp.alpha_max_deg < 180.0)) {
        throw GeometryError("invalid corner parameters");
    }
    const auto& pts = b.points;
    const std::size_t n = pts.size();
    const std::size_t reach = n / 2;
    const double dmin2 = cp.d_min * cp.d_min;
    const double dmax2 = cp.d_max * cp.d_max;
    auto at = [&](std::size_t i, std::ptrdiff_t off) {
        const auto ni = static_cast<std::ptrdiff_t>(n);
        return pts[static_cast<std::size_t>(((static_cast<std::ptrdiff_t>(i) + off) % ni + ni) % ni)];
    };
    auto sq = [](Vec2 d) { return dot(d, d); };

    // Directions (degrees) of the arm candidates on one side of p: points with
    // d_min <= |p - q| <= d_max, stopping at the first point beyond d_max.
    auto arm_dirs = [&](std::size_t i, int dir) {
        std::vector<double> out;
        for (std::size_t s = 1; s <= reach; ++s) {
            const Vec2 d = at(i, dir * static_cast<std::ptrdiff_t>(s)) - pts[i];
            const double d2 = sq(d);
            if (d2 > dmax2) break;
            if (d2 >= dmin2) out.push_back(std::atan2(d.y, d.x) * 180.0 / std::numbers::pi);
        }
        return out;
    };
    auto gap = [](double a, double c) {
        const double d = std::abs(a - c);
        return std::min(d, 360.0 - d);
    };

    // First pass: smallest admissible opening angle per vertex. The opening
    // angle of a triangle is the gap between its two arm directions, so the
    // best partner of a back arm is a nearest forward direction on the circle.
    std::vector<double> alpha(n, 180.0);
    std::vector<bool> candidate(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const auto back = arm_dirs(i, -1);
        auto fwd = arm_dirs(i, +1);
        if (back.empty() || fwd.empty()) continue;
        std::sort(fwd.begin(), fwd.end());
        double best = 180.0;
        for (double a : back) {
            const auto it = std::lower_bound(fwd.begin(), fwd.end(), a);
            if (it != fwd.end()) best = std::min(best, gap(a, *it));
            if (it != fwd.begin()) best = std::min(best, gap(a, *std::prev(it)));
            best = std::min({best, gap(a, fwd.front()), gap(a, fwd.back())});
        }
        if (best <= cp.alpha_max_deg) {
            alpha[i] = best;
            candidate[i] = true;
        }
    }

    // Cumulative arc length for neighbourhood tests along the closed curve.
    std::vector<double> arc(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) arc[i + 1] = arc[i] + distance(pts[i], pts[(i + 1) % n]);
    const double perimeter = arc[n];
    auto arc_distance = [&](std::size_t i, std::size_t j) {
        const double d = std::abs(arc[i] - arc[j]);
        return std::min(d, perimeter - d);
    };

    // Second pass: non-maximum suppression on sharpness.
    std::vector<Corner> corners;
    for (std::size_t i = 0; i < n; ++i) {
        if (!candidate[i]) continue;
        bool keep = true;
        for (int dir : {-1, +1}) {
            for (std::size_t s = 1; s <= reach && keep; ++s) {
                const auto ni = static_cast<std::ptrdiff_t>(n);
                const auto j = static_cast<std::size_t>(
                    ((static_cast<std::ptrdiff_t>(i) + dir * static_cast<std::ptrdiff_t>(s)) % ni + ni) % ni);
                if (arc_distance(i, j) > cp.d_max) break;
                if (!candidate[j]) continue;
                if (alpha[j] < alpha[i] || (alpha[j] == alpha[i] && j < i)) keep = false;
            }
        }
        if (keep) corners.push_back({i, 180.0 - alpha[i]});
    }
    return corners;
}

std::vector<std::size_t> detect_corners(const Polyline& b, const CornerParams& cp) {
    const auto corners = detect_corner_details(b, cp);
    std::vector<std::size_t> idx;
    idx.reserve(corners.size());
    for (const auto& c : corners) idx.push_back(c.index);
    return idx;
}

Polyline simplify_border(const Polyline& b, std::size_t target_count) {
    return simplify_border(b, target_count, CornerParams::for_target(b, target_count));
}

Polyline simplify_border(const Polyline& b, std::size_t target_count, const CornerParams& cp) {
    if (target_count < 3) throw GeometryError("border target count must be at least 3");
    check_closed(b);
    if (b.points.size() <= target_count) return b;

    auto corners = detect_corner_details(b, cp);
    std::vector<std::size_t> keep;
    if (corners.size() >= 3) {
        if (corners.size() > target_count) {
            std::stable_sort(corners.begin(), corners.end(),
                             [](const Corner& x, const Corner& y) { return x.sharpness_deg > y.sharpness_deg; });
            corners.resize(target_count);
        }
        for (const auto& c : corners) keep.push_back(c.index);
        std::sort(keep.begin(), keep.end());
    } else {
        const std::size_t n = b.points.size();
        for (std::size_t s = 0; s < target_count; ++s) keep.push_back(s * n / target_count);
    }

    Polyline out{{}, true};
    out.points.reserve(keep.size());
    for (std::size_t i : keep) out.points.push_back(b.points[i]);
    if (!is_simple_polygon(out.points)) {
        throw GeometryError("simplified border self-intersects; loosen corner parameters");
    }
    return out;
}

std::size_t border_target_count(std::size_t sample_count, double ratio, std::size_t min_count) {
    // Rounded down so ratio * sample_count stays an upper bound.
    const auto scaled = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(sample_count)));
    const std::size_t hi = std::max(sample_count, min_count);
    return std::clamp(scaled, min_count, hi);
}

}  // namespace kpi
