// kpi: batch front end for the dynamic-surface fitting pipeline.
//
//   kpi fit      --config run.cfg
//   kpi validate --config run.cfg
//   kpi sample   --config run.cfg --t 0.25,0.5 --res-u 80 --res-v 80 --out snap
//   kpi iso      --config run.cfg --u 0.4 --t 0.5 --res 200 --out iso.csv
//   kpi report   --config run.cfg [--out report.json]
//
// Exit status: 0 success, 2 validation error, 3 numerical/feasibility error.

#include "kpi/config.hpp"
#include "kpi/errors.hpp"
#include "kpi/io.hpp"
#include "kpi/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

void log(const std::string& msg) { std::cerr << "kpi: " << msg << '\n'; }

struct Paths {
    std::string stations, readings, border, volume, grid;
};

kpi::PipelineConfig load(const std::string& config_path, const Paths& overrides) {
    kpi::PipelineConfig cfg = kpi::load_config(config_path);
    if (!overrides.stations.empty()) cfg.stations = overrides.stations;
    if (!overrides.readings.empty()) cfg.readings = overrides.readings;
    if (!overrides.border.empty()) cfg.border = overrides.border;
    if (!overrides.volume.empty()) cfg.volume_out = overrides.volume;
    if (!overrides.grid.empty()) cfg.grid_out = overrides.grid;
    if (cfg.stations.empty() || cfg.readings.empty() || cfg.border.empty()) {
        throw kpi::ConfigError("stations, readings and border paths are required");
    }
    return cfg;
}

kpi::Dataset ingest(const kpi::PipelineConfig& cfg) { return kpi::ingest(cfg.stations, cfg.readings, cfg.border); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Key-point B-spline reconstruction of sparse time series"};
    app.require_subcommand(1);

    std::string config_path;
    Paths paths;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat key=value config file")->required();
        cmd->add_option("--stations", paths.stations, "override the stations CSV");
        cmd->add_option("--readings", paths.readings, "override the readings CSV");
        cmd->add_option("--border", paths.border, "override the border CSV");
        cmd->add_option("--volume", paths.volume, "override the volume document path");
        cmd->add_option("--grid", paths.grid, "override the grid document path");
    };

    auto* fit = app.add_subcommand("fit", "run the full pipeline and persist volume, grid and report");
    add_common(fit);
    auto* validate = app.add_subcommand("validate", "ingest and check the inputs only");
    add_common(validate);

    std::vector<double> sample_times;
    int res_u = 100, res_v = 100;
    std::string out_path;
    auto* sample = app.add_subcommand("sample", "emit surface grids M(u, v, t) as CSV");
    add_common(sample);
    sample->add_option("--t", sample_times, "time parameters in [0, 1]")->required()->delimiter(',');
    sample->add_option("--res-u", res_u, "samples along u");
    sample->add_option("--res-v", res_v, "samples along v");
    sample->add_option("--out", out_path, "output prefix; one <prefix>_<n>.csv per time")->required();

    double iso_u = 0.5, iso_t = 0.0;
    int iso_res = 200;
    auto* iso = app.add_subcommand("iso", "emit an iso-u curve with grid markers as CSV");
    add_common(iso);
    iso->add_option("--u", iso_u, "u parameter")->required();
    iso->add_option("--t", iso_t, "time parameter")->required();
    iso->add_option("--res", iso_res, "samples along v");
    iso->add_option("--out", out_path, "output CSV")->required();

    auto* report = app.add_subcommand("report", "recompute station residuals from the persisted volume");
    add_common(report);
    report->add_option("--out", out_path, "report JSON (default: the configured report path)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        const kpi::PipelineConfig cfg = load(config_path, paths);
        if (*validate) {
            const auto ds = ingest(cfg);
            log("ok: " + std::to_string(ds.stations.size()) + " stations, " + std::to_string(ds.step_count()) +
                " steps, " + std::to_string(ds.border.points.size()) + " border vertices");
            return 0;
        }
        if (*fit) {
            const auto ds = ingest(cfg);
            const auto result = kpi::run_pipeline(cfg, ds);
            kpi::persist(cfg, result);
            for (const auto& w : result.report.warnings) log("warning: " + w);
            const auto d = result.volume.dims();
            log("controls " + std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]) +
                ", max station residual " + kpi::format_number(result.report.residual.max_abs));
            return 0;
        }
        const kpi::BSplineVolume vol = kpi::parse_volume(kpi::read_text(cfg.volume_out));
        if (*sample) {
            for (std::size_t n = 0; n < sample_times.size(); ++n) {
                const auto grid = kpi::sample_surface(vol, sample_times[n], res_u, res_v);
                kpi::write_atomic(out_path + "_" + std::to_string(n) + ".csv", kpi::surface_csv(grid));
            }
            log("wrote " + std::to_string(sample_times.size()) + " surface grids");
            return 0;
        }
        const kpi::GridDocument grid = kpi::parse_grid(kpi::read_text(cfg.grid_out));
        if (*iso) {
            const auto curve = kpi::extract_iso_u_curve(vol, iso_u, iso_t, iso_res, &grid.grid);
            kpi::write_atomic(out_path, kpi::iso_csv(curve));
            return 0;
        }
        if (*report) {
            const auto ds = ingest(cfg);
            kpi::RunReport rep;
            rep.station_count = grid.station_ids.size();
            rep.step_count = grid.grid.nt();
            rep.grid_dims = {grid.grid.nu(), grid.grid.nv(), grid.grid.nt()};
            rep.control_dims = vol.dims();
            rep.residual = kpi::station_residuals(vol, grid, kpi::readings_for(grid, ds));
            const std::string target = out_path.empty() ? cfg.report_out.string() : out_path;
            kpi::write_atomic(target, rep.to_json(false));
            log("max station residual " + kpi::format_number(rep.residual.max_abs));
            return 0;
        }
    } catch (const kpi::NumericalError& e) {
        log(std::string("numerical error: ") + e.what());
        return kExitNumerical;
    } catch (const kpi::FeasibilityError& e) {
        log(std::string("feasibility error: ") + e.what());
        return kExitNumerical;
    } catch (const kpi::TopologyError& e) {
        log(std::string("topology error: ") + e.what());
        return kExitNumerical;
    } catch (const kpi::RefinementError& e) {
        log(std::string("refinement error: ") + e.what());
        return kExitNumerical;
    } catch (const kpi::ParametrizationError& e) {
        log(std::string("parametrization error: ") + e.what());
        return kExitNumerical;
    } catch (const kpi::Error& e) {
        log(std::string("validation error: ") + e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        log(std::string("error: ") + e.what());
        return 1;
    }
    return 0;
}
