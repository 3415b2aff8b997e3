#pragma once

#include "kpi/bspline.hpp"
#include "kpi/config.hpp"
#include "kpi/io.hpp"
#include "kpi/kpi_solver.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kpi {

struct ResidualSummary {
    double max_abs = 0.0;
    double mean_abs = 0.0;
    std::size_t samples = 0;
};

struct RunReport {
    std::size_t station_count = 0;
    std::size_t step_count = 0;
    std::size_t border_vertices_in = 0;
    std::size_t border_vertices = 0;
    std::array<std::size_t, 2> params_before{};
    std::array<std::size_t, 2> params_after{};
    std::size_t perturbation_iterations = 0;
    std::array<std::size_t, 3> grid_dims{};
    std::array<int, 3> control_dims{};
    ResidualSummary residual;
    std::vector<std::string> warnings;
    std::map<std::string, double> stage_seconds;

    /// JSON text; stage timings are included only when asked for, so that
    /// identical runs produce identical reports.
    std::string to_json(bool with_timings) const;
};

struct PipelineResult {
    BSplineVolume volume;
    GridDocument grid;
    RunReport report;
};

/// Runs border simplification, triangulation, parametrization, parameter
/// merging, Kriging and the three-level KPI fit. Errors carry the stage name.
PipelineResult run_pipeline(const PipelineConfig& config, const Dataset& dataset);

/// Writes volume, grid and report documents to the configured paths.
void persist(const PipelineConfig& config, const PipelineResult& result);

/// Max/mean absolute error of the volume at every station cell and step.
ResidualSummary station_residuals(const BSplineVolume& vol, const GridDocument& grid,
                                  const std::vector<std::vector<double>>& readings);

/// Readings reordered to match the grid document's station order.
std::vector<std::vector<double>> readings_for(const GridDocument& grid, const Dataset& dataset);

struct SurfaceSample {
    double u;
    double v;
    double value;
};

/// res_u x res_v uniform samples of M(., ., t), u varying slowest.
std::vector<SurfaceSample> sample_surface(const BSplineVolume& vol, double t, int res_u, int res_v);

struct IsoMarker {
    double v;
    double value;
    bool key;  // station reading rather than a kriged value
};

struct IsoCurve {
    double u;
    double t;
    std::vector<std::array<double, 2>> curve;  // (v, value)
    std::vector<IsoMarker> markers;
};

/// Iso-u polyline at time t. With a grid, markers hold the grid column nearest
/// to u at the time step nearest to t.
IsoCurve extract_iso_u_curve(const BSplineVolume& vol, double u, double t, int res,
                             const GriddedDataset* grid = nullptr);

std::string surface_csv(const std::vector<SurfaceSample>& samples);
std::string iso_csv(const IsoCurve& iso);

/// Stations kept inside a simplified border: original vertices are reinserted
/// until every station lies strictly inside.
Polyline contain_stations(const Polyline& original, const Polyline& simplified, std::span<const Vec2> stations);

}  // namespace kpi
