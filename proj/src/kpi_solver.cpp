#include "kpi/kpi_solver.hpp"

#include "kpi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace kpi {

void FitRow::validate() const {
    const std::size_t n = params.size();
    if (n == 0) throw SizeError("fit row needs at least one point");
    if (static_cast<std::size_t>(points.rows()) != n || key_flags.size() != n) {
        throw SizeError("fit row params, points and key flags differ in length");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(params[i] >= 0.0 && params[i] <= 1.0)) throw DomainError("fit parameter outside [0, 1]");
        if (i > 0 && !(params[i - 1] < params[i])) throw DomainError("fit parameters must be strictly increasing");
    }
}

std::vector<double> FitRow::key_params() const {
    std::vector<double> keys;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (key_flags[i]) keys.push_back(params[i]);
    }
    return keys;
}

KnotVector refine_knots_for_keys(const KnotVector& kv, std::span<const double> key_params, double min_span_width) {
    std::vector<double> keys(key_params.begin(), key_params.end());
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 1; i < keys.size(); ++i) {
        if (keys[i] - keys[i - 1] < min_span_width) {
            throw FeasibilityError("key parameters " + std::to_string(keys[i - 1]) + " and " +
                                   std::to_string(keys[i]) + " are closer than the minimum span width");
        }
    }

    KnotVector out = kv;
    for (;;) {
        int crowded = -1;
        int prev_span = -1;
        for (double k : keys) {
            const int span = find_span(out, k);
            if (span == prev_span) {
                crowded = span;
                break;
            }
            prev_span = span;
        }
        if (crowded < 0) return out;
        const double lo = out[static_cast<std::size_t>(crowded)];
        const double hi = out[static_cast<std::size_t>(crowded + 1)];
        out = out.with_knot(0.5 * (lo + hi));
    }
}

namespace {

Eigen::MatrixXd collocation(const KnotVector& kv, std::span<const double> params) {
    const int p = kv.degree();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(params.size()), kv.control_count());
    std::vector<double> basis(static_cast<std::size_t>(p + 1));
    for (std::size_t r = 0; r < params.size(); ++r) {
        const int span = find_span(kv, params[r]);
        basis_funs(kv, span, params[r], basis);
        for (int c = 0; c <= p; ++c) b(static_cast<Eigen::Index>(r), span - p + c) = basis[static_cast<std::size_t>(c)];
    }
    return b;
}

}  // namespace

KPICurve solve_kpi_curve(const FitRow& row, const KnotVector& kv, const FitOptions& opts) {
    row.validate();
    const Eigen::MatrixXd full = collocation(kv, row.params);
    const Eigen::Index n = kv.control_count();
    const Eigen::Index dim = row.points.cols();

    std::vector<Eigen::Index> key_rows;
    std::vector<Eigen::Index> free_rows;
    for (std::size_t i = 0; i < row.params.size(); ++i) {
        (row.key_flags[i] ? key_rows : free_rows).push_back(static_cast<Eigen::Index>(i));
    }
    const auto m = static_cast<Eigen::Index>(key_rows.size());
    const auto nf = static_cast<Eigen::Index>(free_rows.size());
    Eigen::MatrixXd a(nf, n), b(nf, dim), c(m, n), d(m, dim);
    for (Eigen::Index r = 0; r < nf; ++r) {
        a.row(r) = full.row(free_rows[static_cast<std::size_t>(r)]);
        b.row(r) = row.points.row(free_rows[static_cast<std::size_t>(r)]);
    }
    for (Eigen::Index r = 0; r < m; ++r) {
        c.row(r) = full.row(key_rows[static_cast<std::size_t>(r)]);
        d.row(r) = row.points.row(key_rows[static_cast<std::size_t>(r)]);
    }

    if (m > n) {
        throw FeasibilityError(std::to_string(m) + " key points exceed " + std::to_string(n) + " control points");
    }
    if (m > 0) {
        Eigen::FullPivLU<Eigen::MatrixXd> c_lu(c);
        if (c_lu.rank() < m) throw FeasibilityError("key-point constraint rows are linearly dependent");
    }

    KPICurve out{BSplineCurve(kv, Eigen::MatrixXd::Zero(n, dim)), row.key_params(), 0.0, 0.0, 1.0, false, false};

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    kkt.topLeftCorner(n, n) = 2.0 * a.transpose() * a;
    kkt.topRightCorner(n, m) = c.transpose();
    kkt.bottomLeftCorner(m, n) = c;
    Eigen::MatrixXd rhs(n + m, dim);
    rhs.topRows(n) = 2.0 * a.transpose() * b;
    rhs.bottomRows(m) = d;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    Eigen::MatrixXd x;
    if (lu.isInvertible()) {
        Eigen::MatrixXd sol = lu.solve(rhs);
        sol += lu.solve(rhs - kkt * sol);  // one step of iterative refinement
        x = sol.topRows(n);
        const double rc = lu.rcond();
        out.condition_estimate = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    } else {
        // Null-space method: x = x0 + Z y, with x0 a solution of C x = d and y
        // a least-squares step within null(C).
        out.underdetermined = true;
        Eigen::MatrixXd x0 = Eigen::MatrixXd::Zero(n, dim);
        Eigen::MatrixXd z = Eigen::MatrixXd::Identity(n, n);
        if (m > 0) {
            x0 = c.completeOrthogonalDecomposition().solve(d);
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(c.transpose());
            const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
            z = q.rightCols(n - m);
        }
        x = x0;
        if (nf > 0 && z.cols() > 0) {
            const Eigen::MatrixXd az = a * z;
            x += z * az.completeOrthogonalDecomposition().solve(b - a * x0);
        }
        // Any null([A; C]) component leaves both the keys and the objective
        // alone; spend it on the flattest control polygon, which keeps
        // constant data constant.
        Eigen::MatrixXd stacked(nf + m, n);
        stacked << a, c;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
        svd.setThreshold(1e-12);
        const Eigen::Index rank = svd.rank();
        if (rank < n && n > 1) {
            const Eigen::MatrixXd ns = svd.matrixV().rightCols(n - rank);
            Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(n - 1, n);
            for (Eigen::Index i = 0; i + 1 < n; ++i) {
                diff(i, i) = -1.0;
                diff(i, i + 1) = 1.0;
            }
            const Eigen::MatrixXd dn = diff * ns;
            x -= ns * dn.completeOrthogonalDecomposition().solve(diff * x);
        }
        out.condition_estimate = std::numeric_limits<double>::infinity();
    }
    out.ill_conditioned = out.condition_estimate > opts.cond_threshold;

    out.curve.controls = x;
    if (m > 0) out.residual_key = (c * x - d).cwiseAbs().maxCoeff();
    if (nf > 0) out.residual_lsq = (a * x - b).squaredNorm();
    if (!(out.residual_key <= opts.key_tolerance)) {
        throw NumericalError("key-point residual " + std::to_string(out.residual_key) + " exceeds tolerance");
    }
    return out;
}

KPICurve fit_kpi_curve(const FitRow& row, int degree, const FitOptions& opts) {
    row.validate();
    const int count = opts.control_count > 0 ? opts.control_count : static_cast<int>(row.params.size());
    const KnotVector base = approximation_knots(row.params, degree, count);
    const auto keys = row.key_params();
    return solve_kpi_curve(row, refine_knots_for_keys(base, keys, opts.min_span_width), opts);
}

std::vector<int> propagate_keys(const KnotVector& kv, int degree, std::span<const double> key_params) {
    std::set<int> idx;
    for (double u : key_params) {
        const int span = find_span(kv, u);
        for (int j = span - degree; j <= span; ++j) idx.insert(j);
    }
    return {idx.begin(), idx.end()};
}

KnotVector knot_union(std::span<const KnotVector> kvs) {
    if (kvs.empty()) throw SizeError("knot union of nothing");
    const int p = kvs.front().degree();
    std::vector<double> merged(kvs.front().knots().begin(), kvs.front().knots().end());
    for (std::size_t s = 1; s < kvs.size(); ++s) {
        if (kvs[s].degree() != p) throw DomainError("knot union needs equal degrees");
        std::vector<double> next;
        const auto other = kvs[s].knots();
        // Multiset union: each value keeps its larger multiplicity.
        std::set_union(merged.begin(), merged.end(), other.begin(), other.end(), std::back_inserter(next));
        merged = std::move(next);
    }
    return KnotVector(p, std::move(merged));
}

namespace {

int initial_controls(std::size_t params, int degree, double ratio) {
    const auto n = static_cast<int>(params);
    const auto scaled = static_cast<int>(std::lround(ratio * static_cast<double>(n)));
    return std::clamp(scaled, degree + 1, n);
}

/// Common knot vector for a family of rows that differ only by key pattern.
KnotVector common_knots(std::span<const double> params, int degree, double ratio,
                        const std::vector<std::vector<double>>& key_sets, double min_span_width) {
    const KnotVector base = approximation_knots(params, degree, initial_controls(params.size(), degree, ratio));
    std::vector<KnotVector> refined{base};
    std::set<std::vector<double>> seen;
    for (const auto& keys : key_sets) {
        if (keys.empty() || !seen.insert(keys).second) continue;
        refined.push_back(refine_knots_for_keys(base, keys, min_span_width));
    }
    return knot_union(refined);
}

void note(LevelReport& level, const KPICurve& c) {
    level.max_key_residual = std::max(level.max_key_residual, c.residual_key);
    level.ill_conditioned += c.ill_conditioned ? 1 : 0;
    level.underdetermined += c.underdetermined ? 1 : 0;
}

KPICurve solve_row(const FitRow& row, const KnotVector& kv, const FitOptions& opts, const char* level,
                   std::size_t index) {
    try {
        return solve_kpi_curve(row, kv, opts);
    } catch (const Error& e) {
        throw FeasibilityError(std::string(level) + " row " + std::to_string(index) + ": " + e.what());
    }
}

}  // namespace

BSplineVolume fit_volume(const GriddedDataset& grid, const VolumeFitOptions& opts, VolumeFitReport* report) {
    const std::size_t nu = grid.nu();
    const std::size_t nv = grid.nv();
    const std::size_t nt = grid.nt();
    const auto [p, q, r] = opts.degrees;
    if (p < 1 || q < 1 || r < 1) throw DomainError("volume degrees must be at least 1");
    if (nu < static_cast<std::size_t>(p + 1) || nv < static_cast<std::size_t>(q + 1) ||
        nt < static_cast<std::size_t>(r + 1)) {
        throw SizeError("grid has fewer parameters than degree + 1 on some axis");
    }
    if (grid.values.size() != nu * nv * nt || grid.key_mask.size() != nu * nv) {
        throw SizeError("gridded dataset storage does not match its parameter sets");
    }
    VolumeFitReport local;
    const auto width = static_cast<Eigen::Index>(nt);  // scalar values, one column per time step

    // Level 1: curves along u, one solve per j covering every time step.
    std::vector<std::vector<double>> keys_u(nv);
    for (std::size_t j = 0; j < nv; ++j) {
        for (std::size_t i = 0; i < nu; ++i) {
            if (grid.is_key(i, j)) keys_u[j].push_back(grid.u_bar[i]);
        }
    }
    const KnotVector kv_u = common_knots(grid.u_bar, p, opts.control_ratio, keys_u, opts.fit.min_span_width);
    const auto n_u = static_cast<std::size_t>(kv_u.control_count());
    // level1[(a * nv + j)] holds the nt values of control a for column j.
    std::vector<Eigen::VectorXd> level1(n_u * nv);
    for (std::size_t j = 0; j < nv; ++j) {
        FitRow row{grid.u_bar, Eigen::MatrixXd(static_cast<Eigen::Index>(nu), width), std::vector<bool>(nu)};
        for (std::size_t i = 0; i < nu; ++i) {
            row.key_flags[i] = grid.is_key(i, j);
            for (std::size_t k = 0; k < nt; ++k) {
                row.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = grid.value(i, j, k);
            }
        }
        const KPICurve c = solve_row(row, kv_u, opts.fit, "level-1 (u)", j);
        note(local.levels[0], c);
        for (std::size_t a = 0; a < n_u; ++a) level1[a * nv + j] = c.curve.controls.row(static_cast<Eigen::Index>(a)).transpose();
    }
    local.levels[0].rows = nv;
    local.levels[0].control_count = kv_u.control_count();

    // Keys for level 2: column j is key in row a when a station (i, j) has a
    // non-zero basis N_a(u_i).
    std::vector<std::vector<bool>> key_av(n_u, std::vector<bool>(nv, false));
    for (std::size_t i = 0; i < nu; ++i) {
        for (std::size_t j = 0; j < nv; ++j) {
            if (!grid.is_key(i, j)) continue;
            const double u = grid.u_bar[i];
            for (int a : propagate_keys(kv_u, p, std::span<const double>(&u, 1))) {
                key_av[static_cast<std::size_t>(a)][j] = true;
            }
        }
    }
    std::vector<std::vector<double>> keys_v(n_u);
    for (std::size_t a = 0; a < n_u; ++a) {
        for (std::size_t j = 0; j < nv; ++j) {
            if (key_av[a][j]) keys_v[a].push_back(grid.v_bar[j]);
        }
    }
    const KnotVector kv_v = common_knots(grid.v_bar, q, opts.control_ratio, keys_v, opts.fit.min_span_width);
    const auto n_v = static_cast<std::size_t>(kv_v.control_count());
    std::vector<Eigen::VectorXd> level2(n_u * n_v);
    for (std::size_t a = 0; a < n_u; ++a) {
        FitRow row{grid.v_bar, Eigen::MatrixXd(static_cast<Eigen::Index>(nv), width), key_av[a]};
        for (std::size_t j = 0; j < nv; ++j) row.points.row(static_cast<Eigen::Index>(j)) = level1[a * nv + j].transpose();
        const KPICurve c = solve_row(row, kv_v, opts.fit, "level-2 (v)", a);
        note(local.levels[1], c);
        for (std::size_t b = 0; b < n_v; ++b) level2[a * n_v + b] = c.curve.controls.row(static_cast<Eigen::Index>(b)).transpose();
    }
    local.levels[1].rows = n_u;
    local.levels[1].control_count = kv_v.control_count();

    // Level 3: lines (a, b) touched by a station's u- and v-windows interpolate
    // every time sample; the rest are plain least squares.
    std::vector<bool> key_line(n_u * n_v, false);
    for (std::size_t i = 0; i < nu; ++i) {
        for (std::size_t j = 0; j < nv; ++j) {
            if (!grid.is_key(i, j)) continue;
            const double u = grid.u_bar[i];
            const double v = grid.v_bar[j];
            const auto wa = propagate_keys(kv_u, p, std::span<const double>(&u, 1));
            const auto wb = propagate_keys(kv_v, q, std::span<const double>(&v, 1));
            for (int a : wa) {
                for (int b : wb) key_line[static_cast<std::size_t>(a) * n_v + static_cast<std::size_t>(b)] = true;
            }
        }
    }
    const std::vector<std::vector<double>> keys_t{grid.t_bar};
    const KnotVector kv_t = common_knots(grid.t_bar, r, opts.control_ratio, keys_t, opts.fit.min_span_width);
    const auto n_t = static_cast<std::size_t>(kv_t.control_count());

    std::vector<double> controls(n_u * n_v * n_t, 0.0);
    for (bool keyed : {true, false}) {
        std::vector<std::size_t> lines;
        for (std::size_t l = 0; l < key_line.size(); ++l) {
            if (key_line[l] == keyed) lines.push_back(l);
        }
        if (lines.empty()) continue;
        FitRow row{grid.t_bar, Eigen::MatrixXd(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(lines.size())),
                   std::vector<bool>(nt, keyed)};
        for (std::size_t c = 0; c < lines.size(); ++c) row.points.col(static_cast<Eigen::Index>(c)) = level2[lines[c]];
        const KPICurve fitted = solve_row(row, kv_t, opts.fit, keyed ? "level-3 (t, key)" : "level-3 (t)", 0);
        note(local.levels[2], fitted);
        for (std::size_t c = 0; c < lines.size(); ++c) {
            for (std::size_t k = 0; k < n_t; ++k) {
                controls[lines[c] * n_t + k] =
                    fitted.curve.controls(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
            }
        }
    }
    local.levels[2].rows = n_u * n_v;
    local.levels[2].control_count = kv_t.control_count();

    if (report != nullptr) *report = local;
    return BSplineVolume({kv_u, kv_v, kv_t}, 1, std::move(controls));
}

}  // namespace kpi
