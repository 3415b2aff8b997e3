#pragma once

#include "kpi/border.hpp"
#include "kpi/bspline.hpp"
#include "kpi/kriging.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace kpi {

/// Validated sparse time series: readings[s][k] is station s at step k.
struct Dataset {
    std::vector<std::string> station_ids;
    std::vector<Vec2> stations;
    std::vector<std::vector<double>> readings;
    Polyline border;

    std::size_t step_count() const { return readings.empty() ? 0 : readings.front().size(); }
};

/// Station CSV `id,x,y`; reading CSV `station_id,step_index,value` with
/// 0-based consecutive steps; border CSV `x,y` in order, implicitly closed.
/// Every file needs its header line.
Dataset parse_dataset(const std::string& stations_csv, const std::string& readings_csv, const std::string& border_csv);

Dataset ingest(const std::filesystem::path& stations_path, const std::filesystem::path& readings_path,
               const std::filesystem::path& border_path);

std::string read_text(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

/// Fixed 17-significant-digit rendering used by every document.
std::string format_number(double v);

std::string serialize_volume(const BSplineVolume& vol);
BSplineVolume parse_volume(const std::string& text);

/// Gridded dataset plus the station identities behind its key cells.
struct GridDocument {
    GriddedDataset grid;
    std::vector<std::string> station_ids;
    std::vector<std::array<int, 2>> station_cells;
};

std::string serialize_grid(const GridDocument& doc);
GridDocument parse_grid(const std::string& text);

}  // namespace kpi
