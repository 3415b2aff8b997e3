#pragma once

#include "kpi/kriging.hpp"

#include <array>
#include <filesystem>
#include <string>

namespace kpi {

/// Pipeline settings, read from a flat `key = value` document.
struct PipelineConfig {
    std::array<int, 3> degrees{3, 3, 3};

    double border_ratio = 0.5;
    int border_min = 8;

    double perturb_growth = 2.0;
    double perturb_cap_ratio = 0.7;
    int perturb_max_iters = 10;

    VariogramKind variogram_kind = VariogramKind::Spherical;
    int variogram_bins = 12;
    double variogram_max_lag = 0.0;  // 0: half the domain diagonal
    KrigingSpace kriging_space = KrigingSpace::Param;

    double control_ratio = 0.6;
    double key_tolerance = 1e-10;
    double cond_threshold = 1e12;
    double residual_tolerance = 1e-9;

    std::filesystem::path stations;
    std::filesystem::path readings;
    std::filesystem::path border;
    std::filesystem::path volume_out = "volume.json";
    std::filesystem::path grid_out = "grid.json";
    std::filesystem::path report_out = "report.json";
    bool report_timings = false;

    /// Throws ConfigError when a field is outside its documented range.
    void validate() const;
};

/// Parses the flat config text; relative paths resolve against `base_dir`.
/// Unknown or repeated keys are rejected.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace kpi
