#pragma once

// Independent replay of the parameter merge sweep, built on the library's
// mesh types and orientation predicate only.

#include "kpi/meshparam.hpp"

#include <algorithm>
#include <cstddef>
#include <set>
#include <utility>
#include <vector>

namespace replay {

inline std::vector<int> face_signs(const kpi::TriangleMesh& m, const kpi::ParamAssignment& pa) {
    std::vector<int> s;
    for (const auto& f : m.faces)
        s.push_back(kpi::orientation_sign(pa.r[static_cast<std::size_t>(f[0])], pa.r[static_cast<std::size_t>(f[1])],
                                          pa.r[static_cast<std::size_t>(f[2])]));
    return s;
}

// One sweep: ascending distinct values, each compared with the current value
// of its predecessor; a candidate is accepted only if no face of the whole
// mesh changes sign and all station pairs stay distinct. Every accepted
// state is checked against the signs on entry and counted in `commits`.
inline kpi::ParamAssignment merge(kpi::ParamAssignment pa, const kpi::TriangleMesh& m, double c1, double c2,
                                  std::size_t* commits = nullptr) {
    const auto signs0 = face_signs(m, pa);
    for (int axis = 0; axis < 2; ++axis) {
        const double bound = axis == 0 ? c1 : c2;
        auto get = [axis](const kpi::Vec2& r) { return axis == 0 ? r.x : r.y; };
        std::vector<double> vals;
        for (auto& r : pa.r) vals.push_back(get(r));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        double anchor = vals[0];
        for (std::size_t i = 1; i < vals.size(); ++i) {
            const double v = vals[i];
            if (anchor == 0.0 || v == 1.0 || v - anchor >= bound) {
                anchor = v;
                continue;
            }
            kpi::ParamAssignment cand = pa;
            for (auto& r : cand.r)
                if (get(r) == v) (axis == 0 ? r.x : r.y) = anchor;
            bool ok = face_signs(m, cand) == signs0;
            std::set<std::pair<double, double>> cells;
            for (std::size_t s = 0; s < m.station_count && ok; ++s)
                ok = cells.insert({cand.r[s].x, cand.r[s].y}).second;
            if (ok) {
                pa = cand;
                if (commits) ++*commits;
            } else {
                anchor = v;
            }
        }
    }
    return pa;
}

}  // namespace replay
