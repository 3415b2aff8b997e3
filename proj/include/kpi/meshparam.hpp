#pragma once

#include "kpi/border.hpp"
#include "kpi/geometry.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace kpi {

enum class VertexTag { Station, Border };

struct MeshVertex {
    Vec2 pos;
    VertexTag tag;
    std::size_t source;  // station index or border vertex index
};

/// Triangulated region. Station vertices come first (vertex i is station i),
/// followed by the border vertices in counter-clockwise order.
struct TriangleMesh {
    std::vector<MeshVertex> vertices;
    std::vector<std::array<int, 2>> edges;  // undirected, (lo, hi), sorted
    std::vector<std::array<int, 3>> faces;  // counter-clockwise
    std::vector<int> boundary;              // border cycle, counter-clockwise
    std::size_t station_count = 0;

    bool is_constrained(int a, int b) const;
};

/// Per-vertex parameters r_i = (u_i, v_i) in the unit square.
struct ParamAssignment {
    std::vector<Vec2> r;
};

/// Merged parameter sets and the grid cell of every station.
struct ParamGrid {
    std::vector<double> u_bar;
    std::vector<double> v_bar;
    std::vector<std::array<int, 2>> station_cells;
};

/// Constrained Delaunay triangulation of the stations inside the border polygon.
TriangleMesh constrained_delaunay(std::span<const Vec2> stations, const Polyline& border);

/// Floater mean value parametrization into the unit square.
///
/// Four boundary corners are picked by farthest-point selection and the four
/// boundary arcs are laid on the square's sides by chord length.
ParamAssignment mean_value_param(const TriangleMesh& mesh);

/// Sign of det[r_j - r_i; r_k - r_i].
int orientation_sign(Vec2 ri, Vec2 rj, Vec2 rk);

struct MergeStats {
    std::size_t committed = 0;
    std::size_t withdrawn = 0;
};

/// One merge sweep: u pass with bound c1, then v pass with bound c2.
///
/// Adjacent distinct values closer than the bound collapse onto the lower one
/// unless that would change the orientation of an incident face or put two
/// stations in one grid cell. The values 0 and 1 never move and never absorb.
ParamAssignment merge_params(const ParamAssignment& pa, const TriangleMesh& mesh, double c1, double c2,
                             MergeStats* stats = nullptr);

struct PerturbationOptions {
    int max_iters = 10;
    double growth = 2.0;
    double cap_ratio = 0.7;            // per-axis cap = cap_ratio x station count
    std::optional<std::size_t> cap_u;  // explicit caps override the ratio
    std::optional<std::size_t> cap_v;
};

struct PerturbationStep {
    double bound;
    std::size_t u_count;
    std::size_t v_count;
    MergeStats stats;
};

struct PerturbationResult {
    ParamGrid grid;
    ParamAssignment params;
    std::size_t initial_u_count = 0;
    std::size_t initial_v_count = 0;
    std::vector<PerturbationStep> steps;
};

/// Minimum Euclidean distance between any two parameter pairs.
double min_param_distance(const ParamAssignment& pa);

PerturbationResult perturbation_loop(const ParamAssignment& pa, const TriangleMesh& mesh,
                                     const PerturbationOptions& opts = {});

std::size_t distinct_count(const ParamAssignment& pa, int axis);

/// Builds Ū, V̄ and the station cells; throws ParametrizationError when two
/// stations share a cell.
ParamGrid make_param_grid(const ParamAssignment& pa, const TriangleMesh& mesh);

/// Map-space pre-image of a parameter point, via barycentric coordinates in the
/// parametric triangle containing it (nearest triangle when outside).
Vec2 invert_parametrization(const TriangleMesh& mesh, const ParamAssignment& pa, Vec2 uv);

}  // namespace kpi
