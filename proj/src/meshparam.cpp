#include "kpi/meshparam.hpp"

#include "kpi/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>

namespace kpi {

bool TriangleMesh::is_constrained(int a, int b) const {
    const auto n = static_cast<int>(boundary.size());
    for (int i = 0; i < n; ++i) {
        const int x = boundary[static_cast<std::size_t>(i)];
        const int y = boundary[static_cast<std::size_t>((i + 1) % n)];
        if ((x == a && y == b) || (x == b && y == a)) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Constrained Delaunay triangulation
// ---------------------------------------------------------------------------

namespace {

/// Face soup with a directed-edge index; supports splits and edge flips.
class FaceSoup {
public:
    explicit FaceSoup(const std::vector<Vec2>& pts) : pts_(pts) {}

    int add(int a, int b, int c) {
        faces_.push_back({a, b, c});
        const int f = static_cast<int>(faces_.size()) - 1;
        link(f);
        return f;
    }

    void replace(int f, int a, int b, int c) {
        unlink(f);
        faces_[static_cast<std::size_t>(f)] = {a, b, c};
        link(f);
    }

    /// Face holding the directed edge a->b, or -1.
    int face_of(int a, int b) const {
        const auto it = half_.find({a, b});
        return it == half_.end() ? -1 : it->second;
    }

    static int third(const std::array<int, 3>& f, int a, int b) {
        for (int v : f) {
            if (v != a && v != b) return v;
        }
        return -1;
    }

    const std::vector<std::array<int, 3>>& faces() const { return faces_; }

    void insert_point(int p) {
        const Vec2 x = pts_[static_cast<std::size_t>(p)];
        for (int f = 0; f < static_cast<int>(faces_.size()); ++f) {
            const auto [a, b, c] = faces_[static_cast<std::size_t>(f)];
            const double o[3] = {orient2d(pts_[a], pts_[b], x), orient2d(pts_[b], pts_[c], x),
                                 orient2d(pts_[c], pts_[a], x)};
            if (o[0] < 0.0 || o[1] < 0.0 || o[2] < 0.0) continue;
            const int zeros = (o[0] == 0.0) + (o[1] == 0.0) + (o[2] == 0.0);
            if (zeros >= 2) throw InputError("duplicate point in triangulation input");
            if (zeros == 0) {
                replace(f, a, b, p);
                add(b, c, p);
                add(c, a, p);
                return;
            }
            const std::array<int, 3> v{a, b, c};
            const int e = o[0] == 0.0 ? 0 : (o[1] == 0.0 ? 1 : 2);
            split_edge(v[static_cast<std::size_t>(e)], v[static_cast<std::size_t>((e + 1) % 3)], p);
            return;
        }
        throw InputError("point lies outside the triangulated region");
    }

    /// Lawson flips until every interior edge is locally Delaunay.
    void make_delaunay() {
        for (std::size_t guard = 0; guard < 100000; ++guard) {
            bool flipped = false;
            for (int f = 0; f < static_cast<int>(faces_.size()); ++f) {
                for (int e = 0; e < 3; ++e) {
                    const auto& fa = faces_[static_cast<std::size_t>(f)];
                    const int a = fa[static_cast<std::size_t>(e)];
                    const int b = fa[static_cast<std::size_t>((e + 1) % 3)];
                    if (try_flip(a, b)) {
                        flipped = true;
                        break;
                    }
                }
            }
            if (!flipped) return;
        }
        throw NumericalError("Delaunay flipping did not converge");
    }

private:
    void link(int f) {
        const auto& t = faces_[static_cast<std::size_t>(f)];
        for (int e = 0; e < 3; ++e) half_[{t[static_cast<std::size_t>(e)], t[static_cast<std::size_t>((e + 1) % 3)]}] = f;
    }

    void unlink(int f) {
        const auto& t = faces_[static_cast<std::size_t>(f)];
        for (int e = 0; e < 3; ++e) {
            const auto it = half_.find({t[static_cast<std::size_t>(e)], t[static_cast<std::size_t>((e + 1) % 3)]});
            // A neighbouring replace may already own this half-edge.
            if (it != half_.end() && it->second == f) half_.erase(it);
        }
    }

    void split_edge(int a, int b, int p) {
        const int f1 = face_of(a, b);
        const int f2 = face_of(b, a);
        const int c = third(faces_[static_cast<std::size_t>(f1)], a, b);
        replace(f1, a, p, c);
        add(p, b, c);
        if (f2 >= 0) {
            const int d = third(faces_[static_cast<std::size_t>(f2)], a, b);
            replace(f2, b, p, d);
            add(p, a, d);
        }
    }

    bool try_flip(int a, int b) {
        const int f1 = face_of(a, b);
        const int f2 = face_of(b, a);
        if (f1 < 0 || f2 < 0) return false;
        const int c = third(faces_[static_cast<std::size_t>(f1)], a, b);
        const int d = third(faces_[static_cast<std::size_t>(f2)], a, b);
        const Vec2 pa = pts_[static_cast<std::size_t>(a)];
        const Vec2 pb = pts_[static_cast<std::size_t>(b)];
        const Vec2 pc = pts_[static_cast<std::size_t>(c)];
        const Vec2 pd = pts_[static_cast<std::size_t>(d)];
        if (in_circle(pa, pb, pc, pd) <= 0.0) return false;
        // The new diagonal c-d must split the quad into two proper triangles.
        if (orient2d(pc, pa, pd) <= 0.0 || orient2d(pd, pb, pc) <= 0.0) return false;
        replace(f1, c, a, d);
        replace(f2, d, b, c);
        return true;
    }

    const std::vector<Vec2>& pts_;
    std::vector<std::array<int, 3>> faces_;
    std::map<std::pair<int, int>, int> half_;
};

/// Ear clipping of a simple counter-clockwise polygon given by vertex ids.
void ear_clip(const std::vector<Vec2>& pts, std::vector<int> poly, FaceSoup& soup) {
    auto inside_or_on = [&](Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
        return orient2d(a, b, p) >= 0.0 && orient2d(b, c, p) >= 0.0 && orient2d(c, a, p) >= 0.0;
    };
    while (poly.size() > 3) {
        const std::size_t n = poly.size();
        bool clipped = false;
        for (std::size_t i = 0; i < n && !clipped; ++i) {
            const int ia = poly[(i + n - 1) % n];
            const int ib = poly[i];
            const int ic = poly[(i + 1) % n];
            const Vec2 a = pts[static_cast<std::size_t>(ia)];
            const Vec2 b = pts[static_cast<std::size_t>(ib)];
            const Vec2 c = pts[static_cast<std::size_t>(ic)];
            if (orient2d(a, b, c) <= 0.0) continue;
            bool ear = true;
            for (std::size_t j = 0; j < n && ear; ++j) {
                const int id = poly[j];
                if (id == ia || id == ib || id == ic) continue;
                if (inside_or_on(pts[static_cast<std::size_t>(id)], a, b, c)) ear = false;
            }
            if (!ear) continue;
            soup.add(ia, ib, ic);
            poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(i));
            clipped = true;
        }
        if (!clipped) throw GeometryError("border polygon could not be triangulated (degenerate or not simple)");
    }
    const Vec2 a = pts[static_cast<std::size_t>(poly[0])];
    const Vec2 b = pts[static_cast<std::size_t>(poly[1])];
    const Vec2 c = pts[static_cast<std::size_t>(poly[2])];
    if (orient2d(a, b, c) <= 0.0) throw GeometryError("border polygon has a degenerate final ear");
    soup.add(poly[0], poly[1], poly[2]);
}

}  // namespace

TriangleMesh constrained_delaunay(std::span<const Vec2> stations, const Polyline& border) {
    if (border.points.size() < 3) throw GeometryError("border needs at least 3 vertices");
    if (!is_simple_polygon(border.points)) throw GeometryError("border polygon is not simple");

    std::vector<Vec2> ring = border.points;
    std::vector<std::size_t> ring_source(ring.size());
    for (std::size_t i = 0; i < ring.size(); ++i) ring_source[i] = i;
    if (signed_area(ring) < 0.0) {
        std::reverse(ring.begin(), ring.end());
        std::reverse(ring_source.begin(), ring_source.end());
    }

    double diag = 0.0;
    {
        double x0 = ring[0].x, x1 = ring[0].x, y0 = ring[0].y, y1 = ring[0].y;
        for (const Vec2& p : ring) {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
        diag = std::hypot(x1 - x0, y1 - y0);
    }
    const double on_border_tol = 1e-12 * diag;

    std::set<std::pair<double, double>> seen;
    for (const Vec2& p : ring) seen.insert({p.x, p.y});
    for (std::size_t s = 0; s < stations.size(); ++s) {
        const Vec2 p = stations[s];
        if (!seen.insert({p.x, p.y}).second) {
            throw InputError("station " + std::to_string(s) + " duplicates another input point");
        }
        const auto loc = locate_in_polygon(p, ring, on_border_tol);
        if (loc != PointLocation::Inside) {
            throw InputError("station " + std::to_string(s) + " lies " +
                             (loc == PointLocation::OnBoundary ? "on" : "outside") + " the border");
        }
    }

    TriangleMesh mesh;
    mesh.station_count = stations.size();
    std::vector<Vec2> pts;
    for (std::size_t s = 0; s < stations.size(); ++s) {
        mesh.vertices.push_back({stations[s], VertexTag::Station, s});
        pts.push_back(stations[s]);
    }
    std::vector<int> poly;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        poly.push_back(static_cast<int>(pts.size()));
        mesh.vertices.push_back({ring[i], VertexTag::Border, ring_source[i]});
        pts.push_back(ring[i]);
    }
    mesh.boundary = poly;

    FaceSoup soup(pts);
    ear_clip(pts, poly, soup);
    for (std::size_t s = 0; s < stations.size(); ++s) soup.insert_point(static_cast<int>(s));
    soup.make_delaunay();

    mesh.faces = soup.faces();
    std::set<std::array<int, 2>> edges;
    for (const auto& f : mesh.faces) {
        for (int e = 0; e < 3; ++e) {
            const int a = f[static_cast<std::size_t>(e)];
            const int b = f[static_cast<std::size_t>((e + 1) % 3)];
            edges.insert({std::min(a, b), std::max(a, b)});
        }
    }
    mesh.edges.assign(edges.begin(), edges.end());
    return mesh;
}

// ---------------------------------------------------------------------------
// Mean value parametrization
// ---------------------------------------------------------------------------

namespace {

/// Indices into mesh.boundary of the square corners, in cyclic order, with the
/// first one mapped to (0, 0).
std::vector<std::size_t> pick_corners(const TriangleMesh& mesh) {
    const auto& loop = mesh.boundary;
    const std::size_t nb = loop.size();
    const std::size_t k = std::min<std::size_t>(4, nb);
    auto pos = [&](std::size_t i) { return mesh.vertices[static_cast<std::size_t>(loop[i])].pos; };

    Vec2 centroid{};
    for (std::size_t i = 0; i < nb; ++i) centroid = centroid + pos(i);
    centroid = (1.0 / static_cast<double>(nb)) * centroid;

    std::vector<std::size_t> chosen;
    std::size_t first = 0;
    for (std::size_t i = 1; i < nb; ++i) {
        if (distance(pos(i), centroid) > distance(pos(first), centroid)) first = i;
    }
    chosen.push_back(first);
    while (chosen.size() < k) {
        std::size_t best = nb;
        double best_d = -1.0;
        for (std::size_t i = 0; i < nb; ++i) {
            if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
            double d = std::numeric_limits<double>::infinity();
            for (std::size_t c : chosen) d = std::min(d, distance(pos(i), pos(c)));
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        chosen.push_back(best);
    }
    std::sort(chosen.begin(), chosen.end());
    std::size_t origin = 0;
    for (std::size_t c = 1; c < chosen.size(); ++c) {
        const Vec2 a = pos(chosen[c]);
        const Vec2 b = pos(chosen[origin]);
        if (a.x + a.y < b.x + b.y) origin = c;
    }
    std::rotate(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(origin), chosen.end());
    return chosen;
}

Vec2 on_side(int side, double t) {
    switch (side) {
        case 0: return {t, 0.0};
        case 1: return {1.0, t};
        case 2: return {1.0 - t, 1.0};
        default: return {0.0, 1.0 - t};
    }
}

}  // namespace

ParamAssignment mean_value_param(const TriangleMesh& mesh) {
    const std::size_t nv = mesh.vertices.size();
    const std::size_t nb = mesh.boundary.size();
    if (nb < 3) throw TopologyError("mesh boundary must be a cycle of at least 3 vertices");

    ParamAssignment pa;
    pa.r.assign(nv, Vec2{});
    std::vector<bool> fixed(nv, false);

    const auto corners = pick_corners(mesh);
    const std::size_t k = corners.size();
    for (std::size_t s = 0; s < k; ++s) {
        const std::size_t from = corners[s];
        const std::size_t to = corners[(s + 1) % k];
        const std::size_t steps = (to + nb - from) % nb == 0 ? nb : (to + nb - from) % nb;
        double total = 0.0;
        for (std::size_t q = 0; q < steps; ++q) {
            const auto a = static_cast<std::size_t>(mesh.boundary[(from + q) % nb]);
            const auto b = static_cast<std::size_t>(mesh.boundary[(from + q + 1) % nb]);
            total += distance(mesh.vertices[a].pos, mesh.vertices[b].pos);
        }
        const Vec2 start = on_side(static_cast<int>(s), 0.0);
        const Vec2 end = on_side(static_cast<int>((s + 1) % 4), 0.0);
        double run = 0.0;
        for (std::size_t q = 0; q < steps; ++q) {
            const auto v = static_cast<std::size_t>(mesh.boundary[(from + q) % nb]);
            if (q > 0) {
                const auto prev = static_cast<std::size_t>(mesh.boundary[(from + q - 1) % nb]);
                run += distance(mesh.vertices[prev].pos, mesh.vertices[v].pos);
            }
            const double t = run / total;
            // Square sides are laid out exactly; the closing arc of a 3-corner
            // boundary has no interior vertices, so it only ever places q = 0.
            pa.r[v] = k == 4 || s + 1 < k ? on_side(static_cast<int>(s), t) : start + t * (end - start);
            fixed[v] = true;
        }
    }

    // Floater weights accumulated per face corner.
    std::vector<int> unknown(nv, -1);
    int n_unknown = 0;
    for (std::size_t v = 0; v < nv; ++v) {
        if (!fixed[v]) unknown[v] = n_unknown++;
    }
    std::vector<std::map<int, double>> weights(nv);
    for (const auto& f : mesh.faces) {
        for (int c = 0; c < 3; ++c) {
            const int i = f[static_cast<std::size_t>(c)];
            const int j = f[static_cast<std::size_t>((c + 1) % 3)];
            const int l = f[static_cast<std::size_t>((c + 2) % 3)];
            if (fixed[static_cast<std::size_t>(i)]) continue;
            const Vec2 xi = mesh.vertices[static_cast<std::size_t>(i)].pos;
            const Vec2 ej = mesh.vertices[static_cast<std::size_t>(j)].pos - xi;
            const Vec2 el = mesh.vertices[static_cast<std::size_t>(l)].pos - xi;
            const double lj = norm(ej);
            const double ll = norm(el);
            const double half_tan = std::abs(cross(ej, el)) / (lj * ll + dot(ej, el));
            weights[static_cast<std::size_t>(i)][j] += half_tan / lj;
            weights[static_cast<std::size_t>(i)][l] += half_tan / ll;
        }
    }

    if (n_unknown == 0) return pa;

    std::vector<Eigen::Triplet<double>> trips;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n_unknown, 2);
    std::vector<std::vector<std::pair<int, double>>> lambdas(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        if (fixed[i]) continue;
        double total = 0.0;
        for (const auto& [j, w] : weights[i]) total += w;
        if (!(total > 0.0)) throw TopologyError("interior vertex " + std::to_string(i) + " has no neighbours");
        const int row = unknown[i];
        trips.emplace_back(row, row, 1.0);
        for (const auto& [j, w] : weights[i]) {
            const double lambda = w / total;
            lambdas[i].emplace_back(j, lambda);
            if (fixed[static_cast<std::size_t>(j)]) {
                rhs(row, 0) += lambda * pa.r[static_cast<std::size_t>(j)].x;
                rhs(row, 1) += lambda * pa.r[static_cast<std::size_t>(j)].y;
            } else {
                trips.emplace_back(row, unknown[static_cast<std::size_t>(j)], -lambda);
            }
        }
    }
    Eigen::SparseMatrix<double> a(n_unknown, n_unknown);
    a.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw TopologyError("mean value system is singular (disconnected mesh?)");
    Eigen::MatrixXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw TopologyError("mean value solve failed");
    const double residual = (a * sol - rhs).cwiseAbs().maxCoeff();
    if (!(residual <= 1e-10)) {
        throw NumericalError("mean value system residual " + std::to_string(residual) + " exceeds 1e-10");
    }
    for (std::size_t i = 0; i < nv; ++i) {
        if (fixed[i]) continue;
        const int row = unknown[i];
        const Vec2 r{sol(row, 0), sol(row, 1)};
        if (!(r.x > 0.0 && r.x < 1.0 && r.y > 0.0 && r.y < 1.0)) {
            throw TopologyError("interior vertex " + std::to_string(i) + " left the unit square");
        }
        pa.r[i] = r;
    }
    return pa;
}

// ---------------------------------------------------------------------------
// Parameter merging
// ---------------------------------------------------------------------------

int orientation_sign(Vec2 ri, Vec2 rj, Vec2 rk) {
    const double det = orient2d(ri, rj, rk);
    return (det > 0.0) - (det < 0.0);
}

namespace {

double coord(const Vec2& r, int axis) { return axis == 0 ? r.x : r.y; }
double& coord(Vec2& r, int axis) { return axis == 0 ? r.x : r.y; }

class Merger {
public:
    Merger(ParamAssignment pa, const TriangleMesh& mesh) : pa_(std::move(pa)), mesh_(mesh) {
        incident_.resize(mesh.vertices.size());
        for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
            for (int v : mesh.faces[f]) incident_[static_cast<std::size_t>(v)].push_back(f);
        }
        for (std::size_t s = 0; s < mesh.station_count; ++s) cells_.insert(key(pa_.r[s]));
    }

    void pass(int axis, double bound, MergeStats& stats) {
        std::map<double, std::vector<std::size_t>> groups;
        for (std::size_t v = 0; v < pa_.r.size(); ++v) groups[coord(pa_.r[v], axis)].push_back(v);
        if (groups.empty()) return;

        auto it = groups.begin();
        double prev = it->first;
        for (++it; it != groups.end(); ++it) {
            const double cur = it->first;
            if (prev == 0.0 || cur == 1.0 || !(cur - prev < bound)) {
                prev = cur;
                continue;
            }
            if (try_move(it->second, axis, prev)) {
                ++stats.committed;
            } else {
                ++stats.withdrawn;
                prev = cur;
            }
        }
    }

    ParamAssignment take() && { return std::move(pa_); }

private:
    static std::pair<double, double> key(Vec2 r) { return {r.x, r.y}; }

    bool try_move(const std::vector<std::size_t>& verts, int axis, double target) {
        std::set<std::size_t> faces;
        for (std::size_t v : verts) faces.insert(incident_[v].begin(), incident_[v].end());
        std::vector<int> before;
        before.reserve(faces.size());
        for (std::size_t f : faces) before.push_back(face_sign(f));

        std::vector<double> saved;
        saved.reserve(verts.size());
        for (std::size_t v : verts) {
            saved.push_back(coord(pa_.r[v], axis));
            coord(pa_.r[v], axis) = target;
        }
        bool ok = true;
        std::size_t idx = 0;
        for (std::size_t f : faces) {
            if (face_sign(f) != before[idx++]) {
                ok = false;
                break;
            }
        }
        std::vector<std::pair<double, double>> moved_cells;
        if (ok) {
            std::set<std::pair<double, double>> trial = cells_;
            for (std::size_t q = 0; q < verts.size() && ok; ++q) {
                if (verts[q] >= mesh_.station_count) continue;
                Vec2 old = pa_.r[verts[q]];
                coord(old, axis) = saved[q];
                trial.erase(key(old));
            }
            for (std::size_t v : verts) {
                if (v >= mesh_.station_count) continue;
                if (!trial.insert(key(pa_.r[v])).second) {
                    ok = false;
                    break;
                }
            }
            if (ok) cells_ = std::move(trial);
        }
        if (!ok) {
            for (std::size_t q = 0; q < verts.size(); ++q) coord(pa_.r[verts[q]], axis) = saved[q];
        }
        return ok;
    }

    int face_sign(std::size_t f) const {
        const auto& t = mesh_.faces[f];
        return orientation_sign(pa_.r[static_cast<std::size_t>(t[0])], pa_.r[static_cast<std::size_t>(t[1])],
                                pa_.r[static_cast<std::size_t>(t[2])]);
    }

    ParamAssignment pa_;
    const TriangleMesh& mesh_;
    std::vector<std::vector<std::size_t>> incident_;
    std::set<std::pair<double, double>> cells_;
};

}  // namespace

ParamAssignment merge_params(const ParamAssignment& pa, const TriangleMesh& mesh, double c1, double c2,
                             MergeStats* stats) {
    if (pa.r.size() != mesh.vertices.size()) throw SizeError("parameter count does not match mesh vertices");
    MergeStats local;
    Merger merger(pa, mesh);
    merger.pass(0, c1, local);
    merger.pass(1, c2, local);
    if (stats != nullptr) *stats = local;
    return std::move(merger).take();
}

std::size_t distinct_count(const ParamAssignment& pa, int axis) {
    std::set<double> values;
    for (const Vec2& r : pa.r) values.insert(coord(r, axis));
    return values.size();
}

double min_param_distance(const ParamAssignment& pa) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pa.r.size(); ++i) {
        for (std::size_t j = i + 1; j < pa.r.size(); ++j) best = std::min(best, distance(pa.r[i], pa.r[j]));
    }
    return best;
}

ParamGrid make_param_grid(const ParamAssignment& pa, const TriangleMesh& mesh) {
    ParamGrid grid;
    std::set<double> us;
    std::set<double> vs;
    for (const Vec2& r : pa.r) {
        us.insert(r.x);
        vs.insert(r.y);
    }
    grid.u_bar.assign(us.begin(), us.end());
    grid.v_bar.assign(vs.begin(), vs.end());
    if (grid.u_bar.front() != 0.0 || grid.u_bar.back() != 1.0 || grid.v_bar.front() != 0.0 ||
        grid.v_bar.back() != 1.0) {
        throw ParametrizationError("parameter sets must span [0, 1] on both axes");
    }
    std::set<std::array<int, 2>> used;
    for (std::size_t s = 0; s < mesh.station_count; ++s) {
        const auto iu = std::lower_bound(grid.u_bar.begin(), grid.u_bar.end(), pa.r[s].x) - grid.u_bar.begin();
        const auto iv = std::lower_bound(grid.v_bar.begin(), grid.v_bar.end(), pa.r[s].y) - grid.v_bar.begin();
        const std::array<int, 2> cell{static_cast<int>(iu), static_cast<int>(iv)};
        if (!used.insert(cell).second) {
            throw ParametrizationError("two stations share grid cell (" + std::to_string(cell[0]) + ", " +
                                       std::to_string(cell[1]) + ")");
        }
        grid.station_cells.push_back(cell);
    }
    return grid;
}

PerturbationResult perturbation_loop(const ParamAssignment& pa, const TriangleMesh& mesh,
                                     const PerturbationOptions& opts) {
    if (opts.max_iters < 1) throw DomainError("perturbation needs max_iters >= 1");
    if (!(opts.growth > 1.0)) throw DomainError("perturbation growth must exceed 1");

    const auto ratio_cap = static_cast<std::size_t>(
        std::max(2.0, std::floor(opts.cap_ratio * static_cast<double>(mesh.station_count))));
    const std::size_t cap_u = opts.cap_u.value_or(ratio_cap);
    const std::size_t cap_v = opts.cap_v.value_or(ratio_cap);

    PerturbationResult out;
    out.params = pa;
    out.initial_u_count = distinct_count(pa, 0);
    out.initial_v_count = distinct_count(pa, 1);
    std::size_t u_count = out.initial_u_count;
    std::size_t v_count = out.initial_v_count;

    double bound = 0.5 * min_param_distance(pa);
    for (int it = 0; it < opts.max_iters; ++it) {
        if (u_count <= cap_u && v_count <= cap_v) break;
        MergeStats stats;
        out.params = merge_params(out.params, mesh, bound, bound, &stats);
        u_count = distinct_count(out.params, 0);
        v_count = distinct_count(out.params, 1);
        out.steps.push_back({bound, u_count, v_count, stats});
        bound *= opts.growth;
    }
    out.grid = make_param_grid(out.params, mesh);
    return out;
}

Vec2 invert_parametrization(const TriangleMesh& mesh, const ParamAssignment& pa, Vec2 uv) {
    std::size_t best_face = 0;
    double best_violation = std::numeric_limits<double>::infinity();
    std::array<double, 3> best_bary{1.0, 0.0, 0.0};
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        const Vec2 a = pa.r[static_cast<std::size_t>(t[0])];
        const Vec2 b = pa.r[static_cast<std::size_t>(t[1])];
        const Vec2 c = pa.r[static_cast<std::size_t>(t[2])];
        const double area = orient2d(a, b, c);
        if (area == 0.0) continue;
        const std::array<double, 3> bary{orient2d(uv, b, c) / area, orient2d(a, uv, c) / area,
                                         orient2d(a, b, uv) / area};
        const double violation = -std::min({bary[0], bary[1], bary[2], 0.0});
        if (violation < best_violation) {
            best_violation = violation;
            best_face = f;
            best_bary = bary;
            if (violation == 0.0) break;
        }
    }
    if (best_violation > 0.0) {
        // Clamp onto the nearest face.
        for (double& w : best_bary) w = std::max(w, 0.0);
        const double s = best_bary[0] + best_bary[1] + best_bary[2];
        for (double& w : best_bary) w /= s;
    }
    const auto& t = mesh.faces[best_face];
    Vec2 out{};
    for (int c = 0; c < 3; ++c) {
        out = out + best_bary[static_cast<std::size_t>(c)] *
                        mesh.vertices[static_cast<std::size_t>(t[static_cast<std::size_t>(c)])].pos;
    }
    return out;
}

}  // namespace kpi
