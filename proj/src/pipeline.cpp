#include "kpi/pipeline.hpp"

#include "kpi/border.hpp"
#include "kpi/errors.hpp"
#include "kpi/meshparam.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>

namespace kpi {

namespace {

template <class E>
[[noreturn]] void rethrow_with(const std::string& stage, const E& e) {
    throw E(stage + ": " + e.what());
}

/// Runs one stage, prefixing any library error with the stage name.
template <class F>
auto stage(const std::string& name, RunReport& report, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
        report.stage_seconds[name] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    try {
        auto out = body();
        finish();
        return out;
    } catch (const DomainError& e) { rethrow_with(name, e);
    } catch (const SizeError& e) { rethrow_with(name, e);
    } catch (const InputError& e) { rethrow_with(name, e);
    } catch (const ConfigError& e) { rethrow_with(name, e);
    } catch (const IngestionError& e) { rethrow_with(name, e);
    } catch (const GeometryError& e) { rethrow_with(name, e);
    } catch (const RefinementError& e) { rethrow_with(name, e);
    } catch (const TopologyError& e) { rethrow_with(name, e);
    } catch (const FeasibilityError& e) { rethrow_with(name, e);
    } catch (const ParametrizationError& e) { rethrow_with(name, e);
    } catch (const NumericalError& e) { rethrow_with(name, e);
    }
}

double bbox_diagonal(std::span<const Vec2> pts) {
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
    for (const Vec2& p : pts) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    return std::hypot(x1 - x0, y1 - y0);
}

}  // namespace

Polyline contain_stations(const Polyline& original, const Polyline& simplified, std::span<const Vec2> stations) {
    const auto& pts = original.points;
    const std::size_t n = pts.size();
    std::vector<std::size_t> kept;
    std::size_t cursor = 0;
    for (const Vec2& v : simplified.points) {
        while (cursor < n && !(pts[cursor] == v)) ++cursor;
        if (cursor == n) throw GeometryError("simplified border vertex is not an original border vertex");
        kept.push_back(cursor++);
    }
    const double tol = 1e-9 * bbox_diagonal(pts);

    auto polygon = [&] {
        std::vector<Vec2> out;
        for (std::size_t i : kept) out.push_back(pts[i]);
        return out;
    };
    // Farthest original vertex from the chord of simplified edge s, or n if the
    // edge is an original edge.
    auto farthest_on_chain = [&](std::size_t s, double* dev) {
        const std::size_t a = kept[s];
        const std::size_t b = kept[(s + 1) % kept.size()];
        std::size_t best = n;
        double best_d = -1.0;
        for (std::size_t i = (a + 1) % n; i != b; i = (i + 1) % n) {
            const double d = point_segment_distance(pts[i], pts[a], pts[b]);
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        if (dev != nullptr) *dev = best_d;
        return best;
    };
    auto insert = [&](std::size_t idx) {
        kept.insert(std::upper_bound(kept.begin(), kept.end(), idx), idx);
    };

    while (kept.size() < n) {
        const auto poly = polygon();
        if (!is_simple_polygon(poly)) {
            std::size_t best = n;
            double best_d = -1.0;
            for (std::size_t s = 0; s < kept.size(); ++s) {
                double d = 0.0;
                const std::size_t c = farthest_on_chain(s, &d);
                if (c != n && d > best_d) {
                    best_d = d;
                    best = c;
                }
            }
            insert(best);
            continue;
        }
        const Vec2* offender = nullptr;
        for (const Vec2& s : stations) {
            if (locate_in_polygon(s, poly, tol) != PointLocation::Inside) {
                offender = &s;
                break;
            }
        }
        if (offender == nullptr) break;
        std::vector<std::pair<double, std::size_t>> edges;
        for (std::size_t s = 0; s < kept.size(); ++s) {
            edges.emplace_back(point_segment_distance(*offender, poly[s], poly[(s + 1) % poly.size()]), s);
        }
        std::sort(edges.begin(), edges.end());
        for (const auto& [d, s] : edges) {
            const std::size_t c = farthest_on_chain(s, nullptr);
            if (c != n) {
                insert(c);
                break;
            }
        }
    }
    return Polyline{polygon(), true};
}

std::string RunReport::to_json(bool with_timings) const {
    nlohmann::ordered_json j;
    j["station_count"] = station_count;
    j["step_count"] = step_count;
    j["border_vertices_in"] = border_vertices_in;
    j["border_vertices"] = border_vertices;
    j["params_before"] = params_before;
    j["params_after"] = params_after;
    j["perturbation_iterations"] = perturbation_iterations;
    j["grid_dims"] = grid_dims;
    j["control_dims"] = control_dims;
    j["max_residual"] = residual.max_abs;
    j["mean_residual"] = residual.mean_abs;
    j["residual_samples"] = residual.samples;
    j["warnings"] = warnings;
    if (with_timings) j["stage_seconds"] = stage_seconds;
    return j.dump(2) + "\n";
}

ResidualSummary station_residuals(const BSplineVolume& vol, const GridDocument& grid,
                                  const std::vector<std::vector<double>>& readings) {
    if (readings.size() != grid.station_cells.size()) throw SizeError("readings do not match the grid's stations");
    ResidualSummary out;
    double total = 0.0;
    for (std::size_t s = 0; s < readings.size(); ++s) {
        const double u = grid.grid.u_bar[static_cast<std::size_t>(grid.station_cells[s][0])];
        const double v = grid.grid.v_bar[static_cast<std::size_t>(grid.station_cells[s][1])];
        if (readings[s].size() != grid.grid.nt()) throw SizeError("reading series length differs from the grid");
        for (std::size_t k = 0; k < grid.grid.nt(); ++k) {
            const double err = std::abs(eval_volume(vol, u, v, grid.grid.t_bar[k])[0] - readings[s][k]);
            out.max_abs = std::max(out.max_abs, err);
            total += err;
            ++out.samples;
        }
    }
    out.mean_abs = out.samples ? total / static_cast<double>(out.samples) : 0.0;
    return out;
}

std::vector<std::vector<double>> readings_for(const GridDocument& grid, const Dataset& dataset) {
    std::vector<std::vector<double>> out;
    for (const auto& id : grid.station_ids) {
        const auto it = std::find(dataset.station_ids.begin(), dataset.station_ids.end(), id);
        if (it == dataset.station_ids.end()) throw IngestionError("grid station '" + id + "' is absent from the readings");
        out.push_back(dataset.readings[static_cast<std::size_t>(it - dataset.station_ids.begin())]);
    }
    return out;
}

PipelineResult run_pipeline(const PipelineConfig& config, const Dataset& dataset) {
    config.validate();
    RunReport report;
    const std::size_t ns = dataset.stations.size();
    report.station_count = ns;
    report.step_count = dataset.step_count();
    report.border_vertices_in = dataset.border.points.size();

    const Polyline border = stage("border", report, [&] {
        const std::size_t target =
            border_target_count(ns, config.border_ratio, static_cast<std::size_t>(config.border_min));
        Polyline simplified;
        try {
            simplified = simplify_border(dataset.border, target);
        } catch (const GeometryError& e) {
            report.warnings.push_back(std::string("border simplification failed, using the input border: ") + e.what());
            simplified = dataset.border;
        }
        const std::size_t before = simplified.points.size();
        Polyline contained = contain_stations(dataset.border, simplified, dataset.stations);
        if (contained.points.size() > before) {
            report.warnings.push_back("reinserted " + std::to_string(contained.points.size() - before) +
                                      " border vertices to keep stations inside");
        }
        return contained;
    });
    report.border_vertices = border.points.size();

    const TriangleMesh mesh = stage("triangulate", report, [&] { return constrained_delaunay(dataset.stations, border); });
    const ParamAssignment initial = stage("parametrize", report, [&] { return mean_value_param(mesh); });

    const PerturbationResult perturbed = stage("perturb", report, [&] {
        PerturbationOptions opts;
        opts.max_iters = config.perturb_max_iters;
        opts.growth = config.perturb_growth;
        opts.cap_ratio = config.perturb_cap_ratio;
        return perturbation_loop(initial, mesh, opts);
    });
    report.params_before = {perturbed.initial_u_count, perturbed.initial_v_count};
    report.params_after = {perturbed.grid.u_bar.size(), perturbed.grid.v_bar.size()};
    report.perturbation_iterations = perturbed.steps.size();

    GridDocument grid_doc;
    grid_doc.station_ids = dataset.station_ids;
    grid_doc.station_cells = perturbed.grid.station_cells;
    grid_doc.grid = stage("kriging", report, [&] {
        KrigingOptions opts;
        opts.kind = config.variogram_kind;
        opts.n_bins = config.variogram_bins;
        if (config.variogram_max_lag > 0.0) opts.max_lag = config.variogram_max_lag;
        opts.space = config.kriging_space;
        const std::vector<Vec2> station_params(perturbed.params.r.begin(),
                                               perturbed.params.r.begin() + static_cast<std::ptrdiff_t>(ns));
        std::vector<GridStepInfo> info;
        auto grid = build_grid(perturbed.grid, station_params, dataset.readings,
                               uniform_time_params(dataset.step_count()), opts, GeoContext{&mesh, &perturbed.params},
                               &info);
        std::size_t unfitted = 0;
        std::size_t degenerate = 0;
        for (const auto& step : info) {
            unfitted += step.fitted ? 0 : 1;
            degenerate += step.fitted && step.fit.degenerate ? 1 : 0;
        }
        if (unfitted) report.warnings.push_back(std::to_string(unfitted) + " time steps used the default variogram");
        if (degenerate) report.warnings.push_back(std::to_string(degenerate) + " time steps fell back to a nugget-only variogram");
        return grid;
    });
    report.grid_dims = {grid_doc.grid.nu(), grid_doc.grid.nv(), grid_doc.grid.nt()};

    const BSplineVolume volume = stage("fit", report, [&] {
        VolumeFitOptions opts;
        opts.degrees = config.degrees;
        opts.control_ratio = config.control_ratio;
        opts.fit.key_tolerance = config.key_tolerance;
        opts.fit.cond_threshold = config.cond_threshold;
        VolumeFitReport fit_report;
        auto vol = fit_volume(grid_doc.grid, opts, &fit_report);
        const char* axis[3] = {"u", "v", "t"};
        for (int l = 0; l < 3; ++l) {
            const auto& lv = fit_report.levels[static_cast<std::size_t>(l)];
            if (lv.ill_conditioned) {
                report.warnings.push_back(std::string("level ") + axis[l] + ": " + std::to_string(lv.ill_conditioned) +
                                          " ill-conditioned solves");
            }
            if (lv.underdetermined) {
                report.warnings.push_back(std::string("level ") + axis[l] + ": " + std::to_string(lv.underdetermined) +
                                          " underdetermined solves (flattest controls chosen)");
            }
        }
        return vol;
    });
    report.control_dims = volume.dims();

    // Residuals come from the serialized volume, exactly as a reload would see it.
    report.residual = stage("residuals", report, [&] {
        const BSplineVolume reloaded = parse_volume(serialize_volume(volume));
        return station_residuals(reloaded, grid_doc, dataset.readings);
    });
    if (report.residual.max_abs > config.residual_tolerance) {
        report.warnings.push_back("max station residual exceeds residual_tolerance");
    }
    return PipelineResult{volume, std::move(grid_doc), std::move(report)};
}

void persist(const PipelineConfig& config, const PipelineResult& result) {
    for (const auto* p : {&config.volume_out, &config.grid_out, &config.report_out}) {
        if (p->has_parent_path()) std::filesystem::create_directories(p->parent_path());
    }
    write_atomic(config.volume_out, serialize_volume(result.volume));
    write_atomic(config.grid_out, serialize_grid(result.grid));
    write_atomic(config.report_out, result.report.to_json(config.report_timings));
}

std::vector<SurfaceSample> sample_surface(const BSplineVolume& vol, double t, int res_u, int res_v) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("sample time outside [0, 1]");
    if (res_u < 2 || res_v < 2) throw SizeError("surface sampling needs at least 2 samples per axis");
    std::vector<SurfaceSample> out;
    out.reserve(static_cast<std::size_t>(res_u) * static_cast<std::size_t>(res_v));
    for (int i = 0; i < res_u; ++i) {
        const double u = i == res_u - 1 ? 1.0 : static_cast<double>(i) / (res_u - 1);
        for (int j = 0; j < res_v; ++j) {
            const double v = j == res_v - 1 ? 1.0 : static_cast<double>(j) / (res_v - 1);
            out.push_back({u, v, eval_volume(vol, u, v, t)[0]});
        }
    }
    return out;
}

IsoCurve extract_iso_u_curve(const BSplineVolume& vol, double u, double t, int res, const GriddedDataset* grid) {
    if (!(u >= 0.0 && u <= 1.0) || !(t >= 0.0 && t <= 1.0)) throw DomainError("iso-curve parameters outside [0, 1]");
    if (res < 2) throw SizeError("iso-curve needs at least 2 samples");
    IsoCurve out{u, t, {}, {}};
    for (int s = 0; s < res; ++s) {
        const double v = s == res - 1 ? 1.0 : static_cast<double>(s) / (res - 1);
        out.curve.push_back({v, eval_volume(vol, u, v, t)[0]});
    }
    if (grid != nullptr) {
        auto nearest = [](const std::vector<double>& xs, double x) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < xs.size(); ++i) {
                if (std::abs(xs[i] - x) < std::abs(xs[best] - x)) best = i;
            }
            return best;
        };
        const std::size_t i = nearest(grid->u_bar, u);
        const std::size_t k = nearest(grid->t_bar, t);
        for (std::size_t j = 0; j < grid->nv(); ++j) {
            out.markers.push_back({grid->v_bar[j], grid->value(i, j, k), grid->is_key(i, j)});
        }
    }
    return out;
}

std::string surface_csv(const std::vector<SurfaceSample>& samples) {
    std::string out = "u,v,value\n";
    for (const auto& s : samples) {
        out += format_number(s.u) + "," + format_number(s.v) + "," + format_number(s.value) + "\n";
    }
    return out;
}

std::string iso_csv(const IsoCurve& iso) {
    std::string out = "kind,v,value\n";
    for (const auto& [v, value] : iso.curve) out += "curve," + format_number(v) + "," + format_number(value) + "\n";
    for (const auto& m : iso.markers) {
        out += std::string(m.key ? "key," : "kriged,") + format_number(m.v) + "," + format_number(m.value) + "\n";
    }
    return out;
}

}  // namespace kpi
