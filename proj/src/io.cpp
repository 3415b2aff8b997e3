#include "kpi/io.hpp"

#include "kpi/errors.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace kpi {

namespace {

using json = nlohmann::json;

struct CsvRow {
    int line;
    std::vector<std::string> cells;
};

std::vector<CsvRow> parse_csv(const std::string& text, const std::string& what, const std::string& header) {
    std::istringstream in(text);
    std::string line;
    std::vector<CsvRow> rows;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != header) {
                throw IngestionError(what + " row " + std::to_string(line_no) + ": expected header '" + header + "'");
            }
            saw_header = true;
            continue;
        }
        CsvRow row{line_no, {}};
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            row.cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    if (!saw_header) throw IngestionError(what + ": missing header '" + header + "'");
    return rows;
}

[[noreturn]] void bad_row(const std::string& what, const CsvRow& row, const std::string& msg) {
    throw IngestionError(what + " row " + std::to_string(row.line) + ": " + msg);
}

double cell_double(const std::string& what, const CsvRow& row, std::size_t c) {
    const std::string& s = row.cells[c];
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        bad_row(what, row, "malformed number '" + s + "'");
    }
    return v;
}

long cell_int(const std::string& what, const CsvRow& row, std::size_t c) {
    const std::string& s = row.cells[c];
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad_row(what, row, "malformed integer '" + s + "'");
    return v;
}

void expect_cells(const std::string& what, const CsvRow& row, std::size_t n) {
    if (row.cells.size() != n) {
        bad_row(what, row, "expected " + std::to_string(n) + " fields, got " + std::to_string(row.cells.size()));
    }
}

}  // namespace

Dataset parse_dataset(const std::string& stations_csv, const std::string& readings_csv, const std::string& border_csv) {
    Dataset ds;
    std::map<std::string, std::size_t> index;
    for (const auto& row : parse_csv(stations_csv, "stations", "id,x,y")) {
        expect_cells("stations", row, 3);
        const std::string& id = row.cells[0];
        if (id.empty()) bad_row("stations", row, "empty station id");
        if (!index.emplace(id, ds.stations.size()).second) bad_row("stations", row, "duplicate station id '" + id + "'");
        ds.station_ids.push_back(id);
        ds.stations.push_back({cell_double("stations", row, 1), cell_double("stations", row, 2)});
    }
    if (ds.stations.empty()) throw IngestionError("stations: no stations listed");

    std::vector<std::map<long, double>> series(ds.stations.size());
    long max_step = -1;
    for (const auto& row : parse_csv(readings_csv, "readings", "station_id,step_index,value")) {
        expect_cells("readings", row, 3);
        const auto it = index.find(row.cells[0]);
        if (it == index.end()) bad_row("readings", row, "unknown station id '" + row.cells[0] + "'");
        const long step = cell_int("readings", row, 1);
        if (step < 0) bad_row("readings", row, "negative step index");
        const double value = cell_double("readings", row, 2);
        if (!series[it->second].emplace(step, value).second) {
            bad_row("readings", row, "duplicate reading for station '" + row.cells[0] + "' step " + std::to_string(step));
        }
        max_step = std::max(max_step, step);
    }
    if (max_step < 0) throw IngestionError("readings: no readings listed");
    ds.readings.resize(ds.stations.size());
    for (std::size_t s = 0; s < ds.stations.size(); ++s) {
        for (long k = 0; k <= max_step; ++k) {
            const auto it = series[s].find(k);
            if (it == series[s].end()) {
                throw IngestionError("readings: station '" + ds.station_ids[s] + "' has no reading for step " +
                                     std::to_string(k));
            }
            ds.readings[s].push_back(it->second);
        }
    }

    ds.border.closed = true;
    for (const auto& row : parse_csv(border_csv, "border", "x,y")) {
        expect_cells("border", row, 2);
        const Vec2 p{cell_double("border", row, 0), cell_double("border", row, 1)};
        if (!ds.border.points.empty() && ds.border.points.back() == p) bad_row("border", row, "repeated vertex");
        ds.border.points.push_back(p);
    }
    if (ds.border.points.size() >= 2 && ds.border.points.front() == ds.border.points.back()) ds.border.points.pop_back();
    if (ds.border.points.size() < 3) throw IngestionError("border: need at least 3 vertices");
    if (!is_simple_polygon(ds.border.points)) throw IngestionError("border: polygon is not simple");
    for (std::size_t s = 0; s < ds.stations.size(); ++s) {
        const auto loc = locate_in_polygon(ds.stations[s], ds.border.points);
        if (loc != PointLocation::Inside) {
            throw IngestionError("stations: station '" + ds.station_ids[s] + "' lies " +
                                 (loc == PointLocation::OnBoundary ? "on" : "outside") + " the border");
        }
    }
    return ds;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Dataset ingest(const std::filesystem::path& stations_path, const std::filesystem::path& readings_path,
               const std::filesystem::path& border_path) {
    return parse_dataset(read_text(stations_path), read_text(readings_path), read_text(border_path));
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out << contents;
        if (!out) throw InputError("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string format_number(double v) {
    if (!std::isfinite(v)) throw NumericalError("cannot serialize a non-finite number");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void write_array(std::string& out, std::span<const double> xs) {
    out += '[';
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += format_number(xs[i]);
    }
    out += ']';
}

std::vector<double> doubles(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) throw InputError(std::string("document lacks array '") + key + "'");
    return j.at(key).get<std::vector<double>>();
}

}  // namespace

std::string serialize_volume(const BSplineVolume& vol) {
    const auto d = vol.dims();
    std::string out = "{\n";
    out += "  \"format_version\": 1,\n";
    out += "  \"degrees\": [" + std::to_string(vol.kv(0).degree()) + "," + std::to_string(vol.kv(1).degree()) + "," +
           std::to_string(vol.kv(2).degree()) + "],\n";
    out += "  \"dims\": [" + std::to_string(d[0]) + "," + std::to_string(d[1]) + "," + std::to_string(d[2]) + "],\n";
    out += "  \"value_dim\": " + std::to_string(vol.dim()) + ",\n";
    const char* names[3] = {"knots_u", "knots_v", "knots_t"};
    for (int a = 0; a < 3; ++a) {
        out += std::string("  \"") + names[a] + "\": ";
        write_array(out, vol.kv(a).knots());
        out += ",\n";
    }
    out += "  \"control_points\": ";
    write_array(out, vol.controls());
    out += "\n}\n";
    return out;
}

BSplineVolume parse_volume(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("volume document is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != 1) throw InputError("unsupported volume format_version");
        const auto degrees = j.at("degrees").get<std::array<int, 3>>();
        const auto dims = j.at("dims").get<std::array<int, 3>>();
        const int value_dim = j.value("value_dim", 1);
        std::array<KnotVector, 3> kvs{KnotVector(degrees[0], doubles(j, "knots_u")),
                                      KnotVector(degrees[1], doubles(j, "knots_v")),
                                      KnotVector(degrees[2], doubles(j, "knots_t"))};
        BSplineVolume vol(std::move(kvs), value_dim, doubles(j, "control_points"));
        if (vol.dims() != dims) throw InputError("volume dims disagree with its knot vectors");
        return vol;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed volume document: ") + e.what());
    }
}

std::string serialize_grid(const GridDocument& doc) {
    const auto& g = doc.grid;
    std::string out = "{\n  \"format_version\": 1,\n";
    out += "  \"u_bar\": ";
    write_array(out, g.u_bar);
    out += ",\n  \"v_bar\": ";
    write_array(out, g.v_bar);
    out += ",\n  \"t_bar\": ";
    write_array(out, g.t_bar);
    out += ",\n  \"values\": ";
    write_array(out, g.values);
    out += ",\n  \"key_mask\": [";
    for (std::size_t i = 0; i < g.key_mask.size(); ++i) out += (i ? "," : "") + std::to_string(int(g.key_mask[i]));
    out += "],\n  \"stations\": [";
    for (std::size_t s = 0; s < doc.station_ids.size(); ++s) {
        out += (s ? "," : "");
        out += json{{"id", doc.station_ids[s]}, {"cell", doc.station_cells[s]}}.dump();
    }
    out += "]\n}\n";
    return out;
}

GridDocument parse_grid(const std::string& text) {
    GridDocument doc;
    try {
        const json j = json::parse(text);
        if (j.at("format_version").get<int>() != 1) throw InputError("unsupported grid format_version");
        auto& g = doc.grid;
        g.u_bar = doubles(j, "u_bar");
        g.v_bar = doubles(j, "v_bar");
        g.t_bar = doubles(j, "t_bar");
        g.values = doubles(j, "values");
        g.key_mask = j.at("key_mask").get<std::vector<std::uint8_t>>();
        for (const auto& s : j.at("stations")) {
            doc.station_ids.push_back(s.at("id").get<std::string>());
            doc.station_cells.push_back(s.at("cell").get<std::array<int, 2>>());
        }
        if (g.values.size() != g.nu() * g.nv() * g.nt() || g.key_mask.size() != g.nu() * g.nv()) {
            throw InputError("grid document sizes are inconsistent");
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed grid document: ") + e.what());
    }
    return doc;
}

}  // namespace kpi
