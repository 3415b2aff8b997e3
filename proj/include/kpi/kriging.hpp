#pragma once

#include "kpi/geometry.hpp"
#include "kpi/meshparam.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kpi {

enum class VariogramKind { Spherical, Exponential, Gaussian };

VariogramKind parse_variogram_kind(const std::string& name);
std::string to_string(VariogramKind kind);

/// Isotropic semivariogram with total sill `sill` (nugget included), so the
/// structured part contributes sill - nugget. gamma(0) is exactly 0.
struct VariogramModel {
    VariogramKind kind = VariogramKind::Spherical;
    double nugget = 0.0;
    double sill = 1.0;
    double range = 1.0;

    double operator()(double h) const;
    void validate() const;
};

/// Unit-sill shape of the structured part at lag h > 0.
double variogram_shape(VariogramKind kind, double h, double range);

struct VariogramBin {
    double lag;  // mean pair distance in the bin
    double gamma;
    std::size_t count;
};

/// Binned semivariance over all pairs with separation in (0, max_lag].
std::vector<VariogramBin> empirical_semivariogram(std::span<const Vec2> positions, std::span<const double> values,
                                                  int n_bins, double max_lag);

struct VariogramFit {
    VariogramModel model;
    double residual = 0.0;   // weighted sum of squared errors
    bool degenerate = false; // zero structured sill: nugget-only fallback
};

/// Pair-count weighted least squares over (nugget, sill, range); needs >= 3 bins.
VariogramFit fit_variogram(std::span<const VariogramBin> empirical, VariogramKind kind);

/// Ordinary Kriging predictor with the augmented system factored once.
/// Samples at identical positions are averaged before solving.
class OrdinaryKriging {
public:
    OrdinaryKriging(std::span<const Vec2> positions, std::span<const double> values, const VariogramModel& model);

    double predict(Vec2 query) const;

    /// Weights over the deduplicated samples, in first-occurrence order.
    Eigen::VectorXd weights(Vec2 query) const;

    std::size_t sample_count() const { return positions_.size(); }

private:
    Eigen::VectorXd solve(Vec2 query) const;

    std::vector<Vec2> positions_;
    Eigen::VectorXd values_;
    VariogramModel model_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

double krige(std::span<const Vec2> positions, std::span<const double> values, const VariogramModel& model,
             Vec2 query);

/// Values Q_{i,j,k} on Ū x V̄ x T̄ (scalar samples), stored row-major over
/// (i, j, k); key_mask is row-major over (i, j).
struct GriddedDataset {
    std::vector<double> u_bar;
    std::vector<double> v_bar;
    std::vector<double> t_bar;
    std::vector<double> values;
    std::vector<std::uint8_t> key_mask;

    std::size_t nu() const { return u_bar.size(); }
    std::size_t nv() const { return v_bar.size(); }
    std::size_t nt() const { return t_bar.size(); }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * nv() + j) * nt() + k; }
    double value(std::size_t i, std::size_t j, std::size_t k) const { return values[index(i, j, k)]; }
    bool is_key(std::size_t i, std::size_t j) const { return key_mask[i * nv() + j] != 0; }
};

enum class KrigingSpace { Param, Geo };

struct KrigingOptions {
    VariogramKind kind = VariogramKind::Spherical;
    int n_bins = 12;
    std::optional<double> max_lag;  // default: half the domain diagonal
    KrigingSpace space = KrigingSpace::Param;
};

/// Map-space context needed when kriging in geographic coordinates.
struct GeoContext {
    const TriangleMesh* mesh = nullptr;
    const ParamAssignment* params = nullptr;
};

struct GridStepInfo {
    VariogramFit fit;
    bool fitted = false;  // false: too few bins, default model used
};

/// Uniform time parameters k / (count - 1).
std::vector<double> uniform_time_params(std::size_t count);

/// Gridded dataset: station cells copy readings[s][k] verbatim, every other
/// cell is kriged from that time step's readings.
GriddedDataset build_grid(const ParamGrid& pg, std::span<const Vec2> station_params,
                          const std::vector<std::vector<double>>& readings, std::span<const double> t_bar,
                          const KrigingOptions& opts = {}, const GeoContext& geo = {},
                          std::vector<GridStepInfo>* info = nullptr);

}  // namespace kpi
