#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace kpi {

/// Clamped knot sequence on [0, 1].
///
/// For n+1 control points of degree p the sequence holds n+p+2 knots whose first
/// and last p+1 entries are 0 and 1. Interior multiplicities never exceed p.
class KnotVector {
public:
    /// Throws DomainError when the sequence is not a valid clamped knot vector.
    KnotVector(int degree, std::vector<double> knots);

    /// Clamped knot vector with equally spaced interior knots.
    static KnotVector uniform(int degree, int control_count);

    int degree() const { return degree_; }
    std::span<const double> knots() const { return knots_; }
    double operator[](std::size_t i) const { return knots_[i]; }
    std::size_t size() const { return knots_.size(); }
    int control_count() const { return static_cast<int>(knots_.size()) - degree_ - 1; }

    /// Multiplicity of the knot value `u` (exact comparison).
    int multiplicity(double u) const;

    /// Copy with `u` inserted once; throws RefinementError if the multiplicity would exceed the degree.
    KnotVector with_knot(double u) const;

    friend bool operator==(const KnotVector&, const KnotVector&) = default;

private:
    int degree_;
    std::vector<double> knots_;
};

/// Curve with one control point per row of `controls`; columns are value components.
struct BSplineCurve {
    KnotVector kv;
    Eigen::MatrixXd controls;

    BSplineCurve(KnotVector knots, Eigen::MatrixXd control_points);

    int dim() const { return static_cast<int>(controls.cols()); }
};

/// Trivariate tensor-product spline M(u, v, t).
///
/// Controls are stored row-major over (i, j, k) with the value components
/// innermost, so P_{i,j,k} occupies `dim` consecutive doubles.
class BSplineVolume {
public:
    BSplineVolume(std::array<KnotVector, 3> knots, int dim, std::vector<double> controls);

    const KnotVector& kv(int axis) const { return kv_[static_cast<std::size_t>(axis)]; }
    const std::array<KnotVector, 3>& knot_vectors() const { return kv_; }
    int dim() const { return dim_; }
    std::array<int, 3> dims() const;
    std::span<const double> controls() const { return controls_; }

    std::size_t offset(int i, int j, int k) const;
    std::span<const double> control(int i, int j, int k) const;

    friend bool operator==(const BSplineVolume&, const BSplineVolume&) = default;

private:
    std::array<KnotVector, 3> kv_;
    int dim_;
    std::vector<double> controls_;
};

/// Index i with knots[i] <= u < knots[i+1]; u = 1 maps to the last non-degenerate span.
int find_span(const KnotVector& kv, double u);

/// The degree+1 basis values N_{span-p..span, p}(u), written into `out`.
void basis_funs(const KnotVector& kv, int span, double u, std::span<double> out);

/// The degree+1 possibly non-zero basis values at u, for the span returned by find_span.
std::vector<double> basis_funs(const KnotVector& kv, double u);

Eigen::VectorXd eval_curve(const BSplineCurve& curve, double u);

Eigen::VectorXd eval_volume(const BSplineVolume& vol, double u, double v, double t);

/// Averaging knot placement for interpolation through `params`
/// (strictly increasing, from 0 to 1). Yields one control per parameter.
KnotVector averaging_knots(std::span<const double> params, int degree);

/// Knot placement for least-squares approximation of `params` with
/// `control_count` controls (control_count <= params.size()). Falls back to
/// averaging_knots when the counts match.
KnotVector approximation_knots(std::span<const double> params, int degree, int control_count);

/// Boehm single-knot insertion; the returned curve is the same function.
BSplineCurve insert_knot(const BSplineCurve& curve, double u_hat);

}  // namespace kpi
