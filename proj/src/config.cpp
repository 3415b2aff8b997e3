#include "kpi/config.hpp"

#include "kpi/errors.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace kpi {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

void PipelineConfig::validate() const {
    for (int d : degrees) require(d >= 1 && d <= 7, "degrees must lie in [1, 7]");
    require(border_ratio > 0.0 && border_ratio <= 1.0, "border_ratio must lie in (0, 1]");
    require(border_min >= 3, "border_min must be at least 3");
    require(perturb_growth > 1.0, "perturb_growth must exceed 1");
    require(perturb_cap_ratio > 0.0 && perturb_cap_ratio <= 10.0, "perturb_cap_ratio must lie in (0, 10]");
    require(perturb_max_iters >= 1 && perturb_max_iters <= 1000, "perturb_max_iters must lie in [1, 1000]");
    require(variogram_bins >= 1 && variogram_bins <= 1000, "variogram_bins must lie in [1, 1000]");
    require(variogram_max_lag >= 0.0, "variogram_max_lag must be non-negative");
    require(control_ratio > 0.0 && control_ratio <= 1.0, "control_ratio must lie in (0, 1]");
    require(key_tolerance > 0.0, "key_tolerance must be positive");
    require(cond_threshold > 1.0, "cond_threshold must exceed 1");
    require(residual_tolerance > 0.0, "residual_tolerance must be positive");
}

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    PipelineConfig cfg;
    auto path = [&](const std::string& v) {
        std::filesystem::path p(v);
        return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
        {"degree_u", [&](auto& k, auto& v) { cfg.degrees[0] = to_int(k, v); }},
        {"degree_v", [&](auto& k, auto& v) { cfg.degrees[1] = to_int(k, v); }},
        {"degree_t", [&](auto& k, auto& v) { cfg.degrees[2] = to_int(k, v); }},
        {"border_ratio", [&](auto& k, auto& v) { cfg.border_ratio = to_double(k, v); }},
        {"border_min", [&](auto& k, auto& v) { cfg.border_min = to_int(k, v); }},
        {"perturb_growth", [&](auto& k, auto& v) { cfg.perturb_growth = to_double(k, v); }},
        {"perturb_cap_ratio", [&](auto& k, auto& v) { cfg.perturb_cap_ratio = to_double(k, v); }},
        {"perturb_max_iters", [&](auto& k, auto& v) { cfg.perturb_max_iters = to_int(k, v); }},
        {"variogram_kind", [&](auto&, auto& v) { cfg.variogram_kind = parse_variogram_kind(v); }},
        {"variogram_bins", [&](auto& k, auto& v) { cfg.variogram_bins = to_int(k, v); }},
        {"variogram_max_lag", [&](auto& k, auto& v) { cfg.variogram_max_lag = to_double(k, v); }},
        {"kriging_space",
         [&](auto&, auto& v) {
             if (v == "param") {
                 cfg.kriging_space = KrigingSpace::Param;
             } else if (v == "geo") {
                 cfg.kriging_space = KrigingSpace::Geo;
             } else {
                 throw ConfigError("kriging_space must be 'param' or 'geo', got '" + v + "'");
             }
         }},
        {"control_ratio", [&](auto& k, auto& v) { cfg.control_ratio = to_double(k, v); }},
        {"key_tolerance", [&](auto& k, auto& v) { cfg.key_tolerance = to_double(k, v); }},
        {"cond_threshold", [&](auto& k, auto& v) { cfg.cond_threshold = to_double(k, v); }},
        {"residual_tolerance", [&](auto& k, auto& v) { cfg.residual_tolerance = to_double(k, v); }},
        {"stations", [&](auto&, auto& v) { cfg.stations = path(v); }},
        {"readings", [&](auto&, auto& v) { cfg.readings = path(v); }},
        {"border", [&](auto&, auto& v) { cfg.border = path(v); }},
        {"volume_out", [&](auto&, auto& v) { cfg.volume_out = path(v); }},
        {"grid_out", [&](auto&, auto& v) { cfg.grid_out = path(v); }},
        {"report_out", [&](auto&, auto& v) { cfg.report_out = path(v); }},
        {"report_timings", [&](auto& k, auto& v) { cfg.report_timings = to_bool(k, v); }},
    };

    std::istringstream in(text);
    std::string line;
    std::set<std::string> seen;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError("config line " + std::to_string(line_no) + ": repeated key '" + key + "'");
        it->second(key, value);
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

}  // namespace kpi
