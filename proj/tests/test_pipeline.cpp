#include "kpi/config.hpp"
#include "kpi/errors.hpp"
#include "kpi/io.hpp"
#include "kpi/pipeline.hpp"

#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace kpi;
namespace fs = std::filesystem;

namespace {

const char* kStations = "id,x,y\nA,0.2,0.2\nB,0.6,0.3\n";
const char* kReadings = "station_id,step_index,value\nA,0,1.5\nA,1,2.5\nB,0,-1\nB,1,0\n";
const char* kBorder = "x,y\n0,0\n1,0\n1,1\n0,1\n";

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("kpi_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct SmallRun {
    Dataset data;
    PipelineConfig cfg;
    PipelineResult result;
};

const SmallRun& small_run() {
    static const SmallRun run = [] {
        std::mt19937_64 rng(17);
        auto border = synth::regular_polygon(16);
        auto stations = synth::scatter_inside(border, 40, rng, 0.03);
        SmallRun r{synth::make_dataset(border, stations, 4), {}, {BSplineVolume({KnotVector::uniform(1, 2), KnotVector::uniform(1, 2), KnotVector::uniform(1, 2)}, 1, std::vector<double>(8, 0.0)), {}, {}}};
        r.result = run_pipeline(r.cfg, r.data);
        return r;
    }();
    return run;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
    auto cfg = parse_config("# comment\ndegree_u = 2\nvariogram_kind = gaussian\nstations = data/s.csv\n", "/base");
    EXPECT_EQ(cfg.degrees, (std::array<int, 3>{2, 3, 3}));
    EXPECT_EQ(cfg.variogram_kind, VariogramKind::Gaussian);
    EXPECT_EQ(cfg.stations, fs::path("/base/data/s.csv"));
    EXPECT_DOUBLE_EQ(cfg.border_ratio, 0.5);
    EXPECT_EQ(cfg.perturb_max_iters, 10);
}

TEST(Config, Rejections) {
    EXPECT_THROW(parse_config("degree_u = 0\n"), ConfigError);
    EXPECT_THROW(parse_config("bogus = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("degree_u = 2\ndegree_u = 3\n"), ConfigError);
    EXPECT_THROW(parse_config("perturb_growth = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("kriging_space = sphere\n"), ConfigError);
    EXPECT_THROW(parse_config("degree_v = two\n"), ConfigError);
    EXPECT_THROW(parse_config("just text\n"), ConfigError);
}

TEST(Ingest, AcceptsValid) {
    auto d = parse_dataset(kStations, kReadings, kBorder);
    EXPECT_EQ(d.station_ids, (std::vector<std::string>{"A", "B"}));
    EXPECT_EQ(d.step_count(), 2u);
    EXPECT_EQ(d.readings[1][0], -1.0);
    EXPECT_EQ(d.border.points.size(), 4u);
}

TEST(Ingest, MinimalTriangle) {
    auto d = parse_dataset("id,x,y\nS,0.3,0.3\n", "station_id,step_index,value\nS,0,4\n", "x,y\n0,0\n1,0\n0,1\n");
    EXPECT_EQ(d.stations.size(), 1u);
}

TEST(Ingest, Errors) {
    try {
        parse_dataset(kStations, "station_id,step_index,value\nA,0,1\nZ9,0,3\nB,0,2\n", kBorder);
        FAIL();
    } catch (const IngestionError& e) {
        EXPECT_NE(std::string(e.what()).find("Z9"), std::string::npos);
    }
    try {
        parse_dataset(kStations, "station_id,step_index,value\nA,0,1\nB,0,x\n", kBorder);
        FAIL();
    } catch (const IngestionError& e) {
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_dataset(kStations, "station_id,step_index,value\nA,0,1\nA,1,1\nB,0,2\n", kBorder),
                 IngestionError);
    EXPECT_THROW(parse_dataset("id,x,y\nA,2,2\n", "station_id,step_index,value\nA,0,1\n", kBorder), IngestionError);
    EXPECT_THROW(parse_dataset("id,x,y\nA,1,0.5\n", "station_id,step_index,value\nA,0,1\n", kBorder), IngestionError);
    EXPECT_THROW(parse_dataset("x,y,id\nA,0.5,0.5\n", "station_id,step_index,value\nA,0,1\n", kBorder),
                 IngestionError);
    EXPECT_THROW(parse_dataset("id,x,y\nA,0.5,0.5\nA,0.6,0.6\n", "station_id,step_index,value\nA,0,1\n", kBorder),
                 IngestionError);
}

TEST(Ingest, FilesAndAtomicWrite) {
    auto dir = scratch("ingest");
    write_atomic(dir / "s.csv", kStations);
    write_atomic(dir / "r.csv", kReadings);
    write_atomic(dir / "b.csv", kBorder);
    auto d = ingest(dir / "s.csv", dir / "r.csv", dir / "b.csv");
    EXPECT_EQ(d.stations.size(), 2u);
    EXPECT_FALSE(fs::exists(dir / "s.csv.tmp"));
    EXPECT_THROW(ingest(dir / "missing.csv", dir / "r.csv", dir / "b.csv"), IngestionError);
}

TEST(Io, NumberRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::stod(format_number(v)), v);
    EXPECT_THROW(format_number(std::nan("")), NumericalError);
}

TEST(Io, VolumeRoundTrip) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    std::array<KnotVector, 3> kvs{synth::random_kv(3, 6, rng), synth::random_kv(2, 5, rng), synth::random_kv(3, 4, rng)};
    std::vector<double> c(6 * 5 * 4);
    for (auto& x : c) x = u(rng);
    BSplineVolume vol(kvs, 1, c);
    const auto text = serialize_volume(vol);
    EXPECT_EQ(parse_volume(text), vol);
    EXPECT_EQ(serialize_volume(parse_volume(text)), text);
    EXPECT_THROW(parse_volume("{\"format_version\": 1}"), InputError);
    EXPECT_THROW(parse_volume("not json"), InputError);
}

TEST(Pipeline, SmallRunInterpolates) {
    const auto& run = small_run();
    const auto& rep = run.result.report;
    EXPECT_EQ(rep.station_count, 40u);
    EXPECT_EQ(rep.step_count, 4u);
    EXPECT_LE(rep.residual.max_abs, 1e-9);
    EXPECT_EQ(rep.residual.samples, 160u);
    EXPECT_LE(rep.params_after[0], rep.params_before[0]);
    EXPECT_LE(rep.params_after[1], rep.params_before[1]);
    EXPECT_EQ(rep.grid_dims[0], run.result.grid.grid.nu());
    EXPECT_EQ(rep.control_dims, run.result.volume.dims());
    const auto again = station_residuals(run.result.volume, run.result.grid, readings_for(run.result.grid, run.data));
    EXPECT_LE(again.max_abs, 1e-9);
}

TEST(Pipeline, GridRoundTrip) {
    const auto& g = small_run().result.grid;
    auto back = parse_grid(serialize_grid(g));
    EXPECT_EQ(back.grid.values, g.grid.values);
    EXPECT_EQ(back.grid.u_bar, g.grid.u_bar);
    EXPECT_EQ(back.grid.key_mask, g.grid.key_mask);
    EXPECT_EQ(back.station_ids, g.station_ids);
    EXPECT_EQ(back.station_cells, g.station_cells);
}

TEST(Pipeline, SampleSurface) {
    const auto& run = small_run();
    const auto& vol = run.result.volume;
    auto s = sample_surface(vol, 0.5, 7, 5);
    ASSERT_EQ(s.size(), 35u);
    EXPECT_EQ(s[0].u, 0.0);
    EXPECT_EQ(s[5].u, 1.0 / 6.0);
    EXPECT_EQ(s[34].v, 1.0);
    EXPECT_THROW(sample_surface(vol, 1.5, 3, 3), DomainError);

    std::array<KnotVector, 3> kvs{KnotVector::uniform(2, 4), KnotVector::uniform(2, 4), KnotVector::uniform(1, 3)};
    BSplineVolume flat(kvs, 1, std::vector<double>(48, 3.25));
    for (const auto& p : sample_surface(flat, 0.3, 4, 4)) EXPECT_NEAR(p.value, 3.25, 1e-14);
    const auto csv = surface_csv(sample_surface(flat, 0.3, 2, 2));
    EXPECT_EQ(csv.substr(0, 12), "u,v,value\n0,");

    // At a data time step the surface passes through the readings at station parameters.
    const auto& g = run.result.grid;
    const auto readings = readings_for(g, run.data);
    for (std::size_t s2 = 0; s2 < g.station_cells.size(); ++s2) {
        const auto c = g.station_cells[s2];
        const double u = g.grid.u_bar[static_cast<std::size_t>(c[0])], v = g.grid.v_bar[static_cast<std::size_t>(c[1])];
        EXPECT_NEAR(eval_volume(vol, u, v, g.grid.t_bar[2])(0), readings[s2][2], 1e-9);
    }
}

TEST(Pipeline, IsoCurve) {
    const auto& run = small_run();
    const auto& g = run.result.grid;
    const auto readings = readings_for(g, run.data);
    const auto c = g.station_cells[0];
    const double u = g.grid.u_bar[static_cast<std::size_t>(c[0])];
    auto iso = extract_iso_u_curve(run.result.volume, u, g.grid.t_bar[1], 50, &g.grid);
    EXPECT_EQ(iso.curve.size(), 50u);
    EXPECT_EQ(iso.markers.size(), g.grid.nv());
    const auto& m = iso.markers[static_cast<std::size_t>(c[1])];
    EXPECT_TRUE(m.key);
    EXPECT_EQ(m.value, readings[0][1]);
    EXPECT_NEAR(eval_volume(run.result.volume, u, m.v, g.grid.t_bar[1])(0), readings[0][1], 1e-9);
    const auto csv = iso_csv(iso);
    EXPECT_NE(csv.find("key,"), std::string::npos);
    EXPECT_NE(csv.find("kriged,"), std::string::npos);

    std::array<KnotVector, 3> kvs{KnotVector::uniform(2, 4), KnotVector::uniform(2, 4), KnotVector::uniform(1, 3)};
    BSplineVolume flat(kvs, 1, std::vector<double>(48, -0.5));
    for (const auto& p : extract_iso_u_curve(flat, 0.4, 0.9, 9).curve) EXPECT_NEAR(p[1], -0.5, 1e-14);
}

TEST(Pipeline, PersistAndReload) {
    const auto& run = small_run();
    auto dir = scratch("persist");
    PipelineConfig cfg;
    cfg.volume_out = dir / "v.json";
    cfg.grid_out = dir / "g.json";
    cfg.report_out = dir / "r.json";
    persist(cfg, run.result);
    auto vol = parse_volume(read_text(cfg.volume_out));
    auto grid = parse_grid(read_text(cfg.grid_out));
    EXPECT_EQ(vol, run.result.volume);
    const auto res = station_residuals(vol, grid, readings_for(grid, run.data));
    EXPECT_EQ(res.max_abs, run.result.report.residual.max_abs);
    EXPECT_EQ(res.mean_abs, run.result.report.residual.mean_abs);
    EXPECT_EQ(read_text(cfg.report_out), run.result.report.to_json(false));
}

TEST(Pipeline, BadConfigRunsNothing) {
    PipelineConfig cfg;
    cfg.degrees = {0, 3, 3};
    EXPECT_THROW(run_pipeline(cfg, small_run().data), ConfigError);
}

TEST(Pipeline, ContainStations) {
    // A notch in the original border that the simplified polygon cuts off.
    Polyline original{{{0, 0}, {1, 0}, {1, 1}, {0.55, 1}, {0.5, 1.4}, {0.45, 1}, {0, 1}}, true};
    Polyline simplified{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, true};
    std::vector<Vec2> st{{0.5, 1.2}, {0.5, 0.5}};
    auto fixed = contain_stations(original, simplified, st);
    for (auto s : st) EXPECT_EQ(locate_in_polygon(s, fixed.points), PointLocation::Inside);
    for (auto p : fixed.points) EXPECT_NE(std::find(original.points.begin(), original.points.end(), p), original.points.end());
}
