#include "kpi/bspline.hpp"

#include "kpi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kpi {

namespace {

void check_unit(double u, const char* what) {
    if (!(u >= 0.0 && u <= 1.0)) {
        throw DomainError(std::string(what) + " parameter " + std::to_string(u) + " outside [0, 1]");
    }
}

}  // namespace

KnotVector::KnotVector(int degree, std::vector<double> knots) : degree_(degree), knots_(std::move(knots)) {
    if (degree_ < 0) throw DomainError("knot vector degree must be non-negative");
    const auto p1 = static_cast<std::size_t>(degree_ + 1);
    if (knots_.size() < 2 * p1) {
        throw DomainError("knot vector of degree " + std::to_string(degree_) + " needs at least " +
                          std::to_string(2 * p1) + " knots");
    }
    for (std::size_t i = 0; i < p1; ++i) {
        if (knots_[i] != 0.0 || knots_[knots_.size() - 1 - i] != 1.0) {
            throw DomainError("knot vector is not clamped to [0, 1]");
        }
    }
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (!(knots_[i - 1] <= knots_[i])) throw DomainError("knot vector is not non-decreasing");
    }
    std::size_t run = 1;
    for (std::size_t i = p1; i + p1 < knots_.size(); ++i) {
        run = (knots_[i] == knots_[i - 1]) ? run + 1 : 1;
        if (knots_[i] != 0.0 && knots_[i] != 1.0 && run > static_cast<std::size_t>(degree_)) {
            throw DomainError("interior knot multiplicity exceeds the degree");
        }
        if (knots_[i] == 0.0 || knots_[i] == 1.0) {
            throw DomainError("end knot multiplicity exceeds degree + 1");
        }
    }
}

KnotVector KnotVector::uniform(int degree, int control_count) {
    if (control_count < degree + 1) throw SizeError("too few control points for the degree");
    std::vector<double> knots(static_cast<std::size_t>(degree + 1), 0.0);
    const int interior = control_count - degree - 1;
    for (int j = 1; j <= interior; ++j) knots.push_back(static_cast<double>(j) / (interior + 1));
    knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), 1.0);
    return KnotVector(degree, std::move(knots));
}

int KnotVector::multiplicity(double u) const {
    return static_cast<int>(std::count(knots_.begin(), knots_.end(), u));
}

KnotVector KnotVector::with_knot(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw RefinementError("inserted knot must lie strictly inside (0, 1)");
    if (multiplicity(u) + 1 > degree_) {
        throw RefinementError("inserting knot " + std::to_string(u) + " exceeds multiplicity " +
                              std::to_string(degree_));
    }
    std::vector<double> knots = knots_;
    knots.insert(std::upper_bound(knots.begin(), knots.end(), u), u);
    return KnotVector(degree_, std::move(knots));
}

BSplineCurve::BSplineCurve(KnotVector knots, Eigen::MatrixXd control_points)
    : kv(std::move(knots)), controls(std::move(control_points)) {
    if (controls.rows() != kv.control_count()) {
        throw SizeError("curve has " + std::to_string(controls.rows()) + " controls, knot vector expects " +
                        std::to_string(kv.control_count()));
    }
    if (controls.cols() < 1) throw SizeError("curve value dimension must be at least 1");
}

BSplineVolume::BSplineVolume(std::array<KnotVector, 3> knots, int dim, std::vector<double> controls)
    : kv_(std::move(knots)), dim_(dim), controls_(std::move(controls)) {
    if (dim_ < 1) throw SizeError("volume value dimension must be at least 1");
    const auto d = dims();
    const std::size_t expected =
        static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) * static_cast<std::size_t>(d[2]) *
        static_cast<std::size_t>(dim_);
    if (controls_.size() != expected) {
        throw SizeError("volume control grid holds " + std::to_string(controls_.size()) + " values, expected " +
                        std::to_string(expected));
    }
}

std::array<int, 3> BSplineVolume::dims() const {
    return {kv_[0].control_count(), kv_[1].control_count(), kv_[2].control_count()};
}

std::size_t BSplineVolume::offset(int i, int j, int k) const {
    const auto d = dims();
    return ((static_cast<std::size_t>(i) * static_cast<std::size_t>(d[1]) + static_cast<std::size_t>(j)) *
                static_cast<std::size_t>(d[2]) +
            static_cast<std::size_t>(k)) *
           static_cast<std::size_t>(dim_);
}

std::span<const double> BSplineVolume::control(int i, int j, int k) const {
    return std::span<const double>(controls_).subspan(offset(i, j, k), static_cast<std::size_t>(dim_));
}

int find_span(const KnotVector& kv, double u) {
    check_unit(u, "evaluation");
    const int n = kv.control_count() - 1;
    const int p = kv.degree();
    if (u >= kv[static_cast<std::size_t>(n + 1)]) return n;
    const auto knots = kv.knots();
    // First knot strictly greater than u, searched over the active range.
    const auto it = std::upper_bound(knots.begin() + p, knots.begin() + n + 1, u);
    return static_cast<int>(it - knots.begin()) - 1;
}

void basis_funs(const KnotVector& kv, int span, double u, std::span<double> out) {
    const int p = kv.degree();
    std::array<double, 32> left{};
    std::array<double, 32> right{};
    if (p + 1 > static_cast<int>(left.size())) throw DomainError("degree too large for basis evaluation");
    out[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[static_cast<std::size_t>(j)] = u - kv[static_cast<std::size_t>(span + 1 - j)];
        right[static_cast<std::size_t>(j)] = kv[static_cast<std::size_t>(span + j)] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = out[static_cast<std::size_t>(r)] /
                                (right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)]);
            out[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
            saved = left[static_cast<std::size_t>(j - r)] * temp;
        }
        out[static_cast<std::size_t>(j)] = saved;
    }
}

std::vector<double> basis_funs(const KnotVector& kv, double u) {
    std::vector<double> out(static_cast<std::size_t>(kv.degree() + 1));
    basis_funs(kv, find_span(kv, u), u, out);
    return out;
}

Eigen::VectorXd eval_curve(const BSplineCurve& curve, double u) {
    const int p = curve.kv.degree();
    const int span = find_span(curve.kv, u);
    std::vector<double> basis(static_cast<std::size_t>(p + 1));
    basis_funs(curve.kv, span, u, basis);
    Eigen::VectorXd value = Eigen::VectorXd::Zero(curve.dim());
    for (int r = 0; r <= p; ++r) {
        value += basis[static_cast<std::size_t>(r)] * curve.controls.row(span - p + r).transpose();
    }
    return value;
}

Eigen::VectorXd eval_volume(const BSplineVolume& vol, double u, double v, double t) {
    const std::array<double, 3> x{u, v, t};
    std::array<int, 3> span{};
    std::array<std::vector<double>, 3> basis;
    for (std::size_t a = 0; a < 3; ++a) {
        const auto& kv = vol.kv(static_cast<int>(a));
        span[a] = find_span(kv, x[a]);
        basis[a].resize(static_cast<std::size_t>(kv.degree() + 1));
        basis_funs(kv, span[a], x[a], basis[a]);
    }
    const int p = vol.kv(0).degree();
    const int q = vol.kv(1).degree();
    const int r = vol.kv(2).degree();
    Eigen::VectorXd value = Eigen::VectorXd::Zero(vol.dim());
    const auto controls = vol.controls();
    for (int a = 0; a <= p; ++a) {
        const double na = basis[0][static_cast<std::size_t>(a)];
        for (int b = 0; b <= q; ++b) {
            const double nab = na * basis[1][static_cast<std::size_t>(b)];
            for (int c = 0; c <= r; ++c) {
                const double w = nab * basis[2][static_cast<std::size_t>(c)];
                const std::size_t off = vol.offset(span[0] - p + a, span[1] - q + b, span[2] - r + c);
                for (int d = 0; d < vol.dim(); ++d) value[d] += w * controls[off + static_cast<std::size_t>(d)];
            }
        }
    }
    return value;
}

namespace {

void check_params(std::span<const double> params, int degree) {
    if (degree < 1) throw DomainError("knot placement requires degree >= 1");
    if (params.size() < static_cast<std::size_t>(degree + 1)) {
        throw SizeError("need at least " + std::to_string(degree + 1) + " parameters, got " +
                        std::to_string(params.size()));
    }
    if (params.front() != 0.0 || params.back() != 1.0) throw DomainError("parameters must start at 0 and end at 1");
    for (std::size_t i = 1; i < params.size(); ++i) {
        if (!(params[i - 1] < params[i])) throw DomainError("parameters must be strictly increasing");
    }
}

}  // namespace

KnotVector averaging_knots(std::span<const double> params, int degree) {
    check_params(params, degree);
    const int n = static_cast<int>(params.size()) - 1;
    std::vector<double> knots(static_cast<std::size_t>(degree + 1), 0.0);
    for (int j = 1; j <= n - degree; ++j) {
        double sum = 0.0;
        for (int i = j; i < j + degree; ++i) sum += params[static_cast<std::size_t>(i)];
        knots.push_back(sum / degree);
    }
    knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), 1.0);
    return KnotVector(degree, std::move(knots));
}

KnotVector approximation_knots(std::span<const double> params, int degree, int control_count) {
    check_params(params, degree);
    const int m = static_cast<int>(params.size()) - 1;
    if (control_count == m + 1) return averaging_knots(params, degree);
    if (control_count < degree + 1 || control_count > m + 1) {
        throw SizeError("control count " + std::to_string(control_count) + " outside [" +
                        std::to_string(degree + 1) + ", " + std::to_string(m + 1) + "]");
    }
    const int n = control_count - 1;
    const double d = static_cast<double>(m + 1) / static_cast<double>(n - degree + 1);
    std::vector<double> knots(static_cast<std::size_t>(degree + 1), 0.0);
    for (int j = 1; j <= n - degree; ++j) {
        const int i = static_cast<int>(j * d);
        const double alpha = j * d - i;
        knots.push_back((1.0 - alpha) * params[static_cast<std::size_t>(i - 1)] +
                        alpha * params[static_cast<std::size_t>(i)]);
    }
    knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), 1.0);
    return KnotVector(degree, std::move(knots));
}

BSplineCurve insert_knot(const BSplineCurve& curve, double u_hat) {
    const KnotVector& kv = curve.kv;
    KnotVector refined = kv.with_knot(u_hat);
    const int p = kv.degree();
    const int k = find_span(kv, u_hat);
    const int s = kv.multiplicity(u_hat);
    const int n = kv.control_count() - 1;

    Eigen::MatrixXd out(n + 2, curve.dim());
    for (int i = 0; i <= k - p; ++i) out.row(i) = curve.controls.row(i);
    for (int i = k - s; i <= n; ++i) out.row(i + 1) = curve.controls.row(i);
    for (int i = k - p + 1; i <= k - s; ++i) {
        const double alpha = (u_hat - kv[static_cast<std::size_t>(i)]) /
                             (kv[static_cast<std::size_t>(i + p)] - kv[static_cast<std::size_t>(i)]);
        out.row(i) = alpha * curve.controls.row(i) + (1.0 - alpha) * curve.controls.row(i - 1);
    }
    return BSplineCurve(std::move(refined), std::move(out));
}

}  // namespace kpi
