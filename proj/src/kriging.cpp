#include "kpi/kriging.hpp"

#include "kpi/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace kpi {

VariogramKind parse_variogram_kind(const std::string& name) {
    if (name == "spherical") return VariogramKind::Spherical;
    if (name == "exponential") return VariogramKind::Exponential;
    if (name == "gaussian") return VariogramKind::Gaussian;
    throw ConfigError("unknown variogram kind '" + name + "'");
}

std::string to_string(VariogramKind kind) {
    switch (kind) {
        case VariogramKind::Spherical: return "spherical";
        case VariogramKind::Exponential: return "exponential";
        case VariogramKind::Gaussian: return "gaussian";
    }
    return "spherical";
}

double variogram_shape(VariogramKind kind, double h, double range) {
    const double x = h / range;
    switch (kind) {
        case VariogramKind::Spherical: return x >= 1.0 ? 1.0 : 1.5 * x - 0.5 * x * x * x;
        case VariogramKind::Exponential: return 1.0 - std::exp(-3.0 * x);
        case VariogramKind::Gaussian: return 1.0 - std::exp(-3.0 * x * x);
    }
    return 1.0;
}

double VariogramModel::operator()(double h) const {
    if (h == 0.0) return 0.0;
    return nugget + (sill - nugget) * variogram_shape(kind, h, range);
}

void VariogramModel::validate() const {
    if (!(nugget >= 0.0)) throw DomainError("variogram nugget must be non-negative");
    if (!(sill > 0.0)) throw DomainError("variogram sill must be positive");
    if (!(range > 0.0)) throw DomainError("variogram range must be positive");
    if (nugget > sill) throw DomainError("variogram nugget exceeds sill");
}

std::vector<VariogramBin> empirical_semivariogram(std::span<const Vec2> positions, std::span<const double> values,
                                                  int n_bins, double max_lag) {
    if (positions.size() != values.size()) throw SizeError("positions and values differ in length");
    if (positions.size() < 2) throw SizeError("semivariogram needs at least 2 points");
    if (n_bins < 1) throw SizeError("semivariogram needs at least one bin");
    if (!(max_lag > 0.0)) throw DomainError("semivariogram max_lag must be positive");

    const double width = max_lag / n_bins;
    std::vector<double> lag_sum(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<double> sq_sum(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<std::size_t> count(static_cast<std::size_t>(n_bins), 0);
    bool any_separated = false;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (std::size_t j = i + 1; j < positions.size(); ++j) {
            const double d = distance(positions[i], positions[j]);
            if (d == 0.0) continue;
            any_separated = true;
            if (d > max_lag) continue;
            const auto b = std::min(static_cast<std::size_t>(d / width), static_cast<std::size_t>(n_bins - 1));
            const double diff = values[i] - values[j];
            lag_sum[b] += d;
            sq_sum[b] += diff * diff;
            ++count[b];
        }
    }
    if (!any_separated) throw GeometryError("all semivariogram sample points coincide");

    std::vector<VariogramBin> out;
    for (std::size_t b = 0; b < count.size(); ++b) {
        if (count[b] == 0) continue;
        const auto n = static_cast<double>(count[b]);
        out.push_back({lag_sum[b] / n, sq_sum[b] / (2.0 * n), count[b]});
    }
    return out;
}

namespace {

struct LinearFit {
    double nugget;
    double partial;
    double sse;
};

/// Non-negative weighted least squares for gamma = nugget + partial * shape.
LinearFit fit_linear(std::span<const VariogramBin> bins, std::span<const double> shape) {
    double sw = 0, sg = 0, sgg = 0, sy = 0, sgy = 0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
        const auto w = static_cast<double>(bins[b].count);
        sw += w;
        sg += w * shape[b];
        sgg += w * shape[b] * shape[b];
        sy += w * bins[b].gamma;
        sgy += w * shape[b] * bins[b].gamma;
    }
    auto sse = [&](double c0, double c1) {
        double s = 0.0;
        for (std::size_t b = 0; b < bins.size(); ++b) {
            const double r = c0 + c1 * shape[b] - bins[b].gamma;
            s += static_cast<double>(bins[b].count) * r * r;
        }
        return s;
    };

    std::vector<std::pair<double, double>> candidates;
    const double det = sw * sgg - sg * sg;
    if (std::abs(det) > 1e-14 * sw * sgg) {
        const double c0 = (sy * sgg - sg * sgy) / det;
        const double c1 = (sw * sgy - sg * sy) / det;
        if (c0 >= 0.0 && c1 >= 0.0) candidates.emplace_back(c0, c1);
    }
    if (sgg > 0.0) candidates.emplace_back(0.0, std::max(0.0, sgy / sgg));
    candidates.emplace_back(std::max(0.0, sy / sw), 0.0);

    LinearFit best{0.0, 0.0, std::numeric_limits<double>::infinity()};
    for (const auto& [c0, c1] : candidates) {
        const double s = sse(c0, c1);
        if (s < best.sse) best = {c0, c1, s};
    }
    return best;
}

}  // namespace

VariogramFit fit_variogram(std::span<const VariogramBin> empirical, VariogramKind kind) {
    if (empirical.size() < 3) throw SizeError("variogram fit needs at least 3 non-empty bins");

    double lag_min = std::numeric_limits<double>::infinity();
    double lag_max = 0.0;
    double gamma_max = 0.0;
    for (const auto& b : empirical) {
        lag_min = std::min(lag_min, b.lag);
        lag_max = std::max(lag_max, b.lag);
        gamma_max = std::max(gamma_max, b.gamma);
    }

    std::vector<double> shape(empirical.size());
    auto evaluate = [&](double range) {
        for (std::size_t b = 0; b < empirical.size(); ++b) shape[b] = variogram_shape(kind, empirical[b].lag, range);
        return fit_linear(empirical, shape);
    };

    // Coarse log-spaced scan over the range, then golden-section refinement.
    const double lo = std::log(0.25 * lag_min);
    const double hi = std::log(3.0 * lag_max);
    constexpr int kScan = 120;
    double best_log = lo;
    LinearFit best = evaluate(std::exp(lo));
    for (int s = 1; s <= kScan; ++s) {
        const double x = lo + (hi - lo) * s / kScan;
        const LinearFit f = evaluate(std::exp(x));
        if (f.sse < best.sse) {
            best = f;
            best_log = x;
        }
    }
    const double step = (hi - lo) / kScan;
    double a = std::max(lo, best_log - step);
    double b = std::min(hi, best_log + step);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60; ++it) {
        const double x1 = b - phi * (b - a);
        const double x2 = a + phi * (b - a);
        if (evaluate(std::exp(x1)).sse < evaluate(std::exp(x2)).sse) {
            b = x2;
        } else {
            a = x1;
        }
    }
    const double refined_log = 0.5 * (a + b);
    const LinearFit refined = evaluate(std::exp(refined_log));
    if (refined.sse <= best.sse) {
        best = refined;
        best_log = refined_log;
    }

    VariogramFit out;
    out.residual = best.sse;
    if (best.partial <= 1e-12 * std::max(1.0, gamma_max)) {
        const double level = best.nugget > 0.0 ? best.nugget : 1.0;
        out.model = VariogramModel{kind, level, level, lag_max};
        out.degenerate = true;
        return out;
    }
    out.model = VariogramModel{kind, best.nugget, best.nugget + best.partial, std::exp(best_log)};
    return out;
}

OrdinaryKriging::OrdinaryKriging(std::span<const Vec2> positions, std::span<const double> values,
                                 const VariogramModel& model)
    : model_(model) {
    if (positions.size() != values.size()) throw SizeError("positions and values differ in length");
    if (positions.empty()) throw SizeError("Kriging needs at least one sample");
    model_.validate();

    std::map<std::pair<double, double>, std::size_t> slot;
    std::vector<double> sums;
    std::vector<double> counts;
    for (std::size_t s = 0; s < positions.size(); ++s) {
        const auto key = std::make_pair(positions[s].x, positions[s].y);
        const auto [it, inserted] = slot.emplace(key, positions_.size());
        if (inserted) {
            positions_.push_back(positions[s]);
            sums.push_back(0.0);
            counts.push_back(0.0);
        }
        sums[it->second] += values[s];
        counts[it->second] += 1.0;
    }
    const auto n = static_cast<Eigen::Index>(positions_.size());
    values_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        values_[i] = sums[static_cast<std::size_t>(i)] / counts[static_cast<std::size_t>(i)];
    }

    Eigen::MatrixXd system(n + 1, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            system(i, j) = model_(distance(positions_[static_cast<std::size_t>(i)], positions_[static_cast<std::size_t>(j)]));
        }
        system(i, n) = 1.0;
        system(n, i) = 1.0;
    }
    system(n, n) = 0.0;
    lu_.compute(system);
    if (!(lu_.rcond() > 1e-15)) throw NumericalError("Kriging system is singular");
}

Eigen::VectorXd OrdinaryKriging::solve(Vec2 query) const {
    const auto n = static_cast<Eigen::Index>(positions_.size());
    Eigen::VectorXd rhs(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) rhs[i] = model_(distance(positions_[static_cast<std::size_t>(i)], query));
    rhs[n] = 1.0;
    return lu_.solve(rhs);
}

Eigen::VectorXd OrdinaryKriging::weights(Vec2 query) const {
    return solve(query).head(static_cast<Eigen::Index>(positions_.size()));
}

double OrdinaryKriging::predict(Vec2 query) const { return weights(query).dot(values_); }

double krige(std::span<const Vec2> positions, std::span<const double> values, const VariogramModel& model,
             Vec2 query) {
    return OrdinaryKriging(positions, values, model).predict(query);
}

std::vector<double> uniform_time_params(std::size_t count) {
    if (count == 0) throw SizeError("need at least one time step");
    std::vector<double> t(count, 0.0);
    if (count == 1) return t;
    for (std::size_t k = 0; k < count; ++k) t[k] = static_cast<double>(k) / static_cast<double>(count - 1);
    t.back() = 1.0;
    return t;
}

GriddedDataset build_grid(const ParamGrid& pg, std::span<const Vec2> station_params,
                          const std::vector<std::vector<double>>& readings, std::span<const double> t_bar,
                          const KrigingOptions& opts, const GeoContext& geo, std::vector<GridStepInfo>* info) {
    const std::size_t ns = station_params.size();
    if (readings.size() != ns || pg.station_cells.size() != ns) {
        throw SizeError("station parameters, readings and cells differ in count");
    }
    if (ns == 0) throw SizeError("grid construction needs at least one station");
    for (std::size_t s = 0; s < ns; ++s) {
        if (readings[s].size() != t_bar.size()) {
            throw IngestionError("station " + std::to_string(s) + " is missing readings");
        }
    }
    const bool geo_mode = opts.space == KrigingSpace::Geo;
    if (geo_mode && (geo.mesh == nullptr || geo.params == nullptr)) {
        throw DomainError("geographic Kriging needs the mesh and its parametrization");
    }

    GriddedDataset out;
    out.u_bar = pg.u_bar;
    out.v_bar = pg.v_bar;
    out.t_bar.assign(t_bar.begin(), t_bar.end());
    out.values.assign(out.nu() * out.nv() * out.nt(), 0.0);
    out.key_mask.assign(out.nu() * out.nv(), 0);
    std::vector<std::size_t> station_at(out.nu() * out.nv(), ns);
    for (std::size_t s = 0; s < ns; ++s) {
        const auto i = static_cast<std::size_t>(pg.station_cells[s][0]);
        const auto j = static_cast<std::size_t>(pg.station_cells[s][1]);
        out.key_mask[i * out.nv() + j] = 1;
        station_at[i * out.nv() + j] = s;
    }

    std::vector<Vec2> positions(ns);
    double max_lag = std::sqrt(2.0) / 2.0;
    if (geo_mode) {
        double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
        for (std::size_t s = 0; s < ns; ++s) {
            positions[s] = geo.mesh->vertices[s].pos;
            x0 = std::min(x0, positions[s].x);
            x1 = std::max(x1, positions[s].x);
            y0 = std::min(y0, positions[s].y);
            y1 = std::max(y1, positions[s].y);
        }
        max_lag = 0.5 * std::hypot(x1 - x0, y1 - y0);
    } else {
        positions.assign(station_params.begin(), station_params.end());
    }
    if (opts.max_lag) max_lag = *opts.max_lag;
    if (!(max_lag > 0.0)) max_lag = 1.0;

    // Query location of every non-key cell.
    std::vector<Vec2> queries(out.nu() * out.nv());
    for (std::size_t i = 0; i < out.nu(); ++i) {
        for (std::size_t j = 0; j < out.nv(); ++j) {
            const Vec2 uv{out.u_bar[i], out.v_bar[j]};
            if (out.key_mask[i * out.nv() + j]) continue;
            queries[i * out.nv() + j] = geo_mode ? invert_parametrization(*geo.mesh, *geo.params, uv) : uv;
        }
    }

    if (info != nullptr) info->assign(out.nt(), GridStepInfo{});
    std::vector<double> z(ns);
    for (std::size_t k = 0; k < out.nt(); ++k) {
        for (std::size_t s = 0; s < ns; ++s) z[s] = readings[s][k];

        VariogramModel model{opts.kind, 0.0, 1.0, max_lag};
        GridStepInfo step;
        if (ns >= 2) {
            bool coincident = false;
            std::vector<VariogramBin> bins;
            try {
                bins = empirical_semivariogram(positions, z, opts.n_bins, max_lag);
            } catch (const GeometryError&) {
                coincident = true;
            }
            if (!coincident && bins.size() >= 3) {
                step.fit = fit_variogram(bins, opts.kind);
                step.fitted = true;
                model = step.fit.model;
            }
        }
        if (info != nullptr) (*info)[k] = step;

        const OrdinaryKriging predictor(positions, z, model);
        for (std::size_t i = 0; i < out.nu(); ++i) {
            for (std::size_t j = 0; j < out.nv(); ++j) {
                const std::size_t cell = i * out.nv() + j;
                double value = 0.0;
                if (out.key_mask[cell]) {
                    value = readings[station_at[cell]][k];
                } else {
                    value = predictor.predict(queries[cell]);
                    if (!std::isfinite(value)) throw NumericalError("Kriging produced a non-finite value");
                }
                out.values[out.index(i, j, k)] = value;
            }
        }
    }
    return out;
}

}  // namespace kpi
