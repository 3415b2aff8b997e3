#pragma once

#include "kpi/bspline.hpp"
#include "kpi/kriging.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace kpi {

/// Data for one curve fit: a point per parameter, some of them key points
/// that the curve must pass through exactly.
struct FitRow {
    std::vector<double> params;
    Eigen::MatrixXd points;  // one row per parameter
    std::vector<bool> key_flags;

    void validate() const;
    std::vector<double> key_params() const;
};

struct FitOptions {
    int control_count = 0;  // 0: one control per parameter
    double key_tolerance = 1e-10;
    double cond_threshold = 1e12;
    double min_span_width = 1e-9;
};

struct KPICurve {
    BSplineCurve curve;
    std::vector<double> key_params;
    double residual_key = 0.0;   // max |C(u_key) - Q_key|
    double residual_lsq = 0.0;   // sum of squared non-key errors
    double condition_estimate = 1.0;
    bool ill_conditioned = false;
    bool underdetermined = false;  // minimizer not unique; the flattest control polygon is returned
};

/// Inserts span midpoints until no knot span holds two key parameters.
KnotVector refine_knots_for_keys(const KnotVector& kv, std::span<const double> key_params,
                                 double min_span_width = 1e-9);

/// Equality-constrained least-squares fit with the given knots: minimise the
/// squared error at non-key points subject to exact interpolation of the keys.
KPICurve solve_kpi_curve(const FitRow& row, const KnotVector& kv, const FitOptions& opts = {});

/// Chooses knots (approximation placement, then key refinement) and solves.
KPICurve fit_kpi_curve(const FitRow& row, int degree, const FitOptions& opts = {});

/// Control indices whose basis functions touch a key parameter: the span
/// window span-p..span of every key. Sorted, duplicate-free.
std::vector<int> propagate_keys(const KnotVector& kv, int degree, std::span<const double> key_params);

/// Union of knot multisets sharing the same clamped ends.
KnotVector knot_union(std::span<const KnotVector> kvs);

struct VolumeFitOptions {
    std::array<int, 3> degrees{3, 3, 3};
    double control_ratio = 0.6;  // initial controls per axis relative to grid size
    FitOptions fit;
};

struct LevelReport {
    std::size_t rows = 0;
    int control_count = 0;
    double max_key_residual = 0.0;
    std::size_t ill_conditioned = 0;
    std::size_t underdetermined = 0;
};

struct VolumeFitReport {
    std::array<LevelReport, 3> levels;
};

/// Three-level lofting (u, then v, then t) of a gridded dataset into a
/// trivariate spline that interpolates every key cell.
BSplineVolume fit_volume(const GriddedDataset& grid, const VolumeFitOptions& opts = {},
                         VolumeFitReport* report = nullptr);

}  // namespace kpi
