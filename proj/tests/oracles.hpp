#pragma once

// Test-only reference computations. Nothing here calls into the library's
// evaluation, factorization or triangulation code paths.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Cox-de Boor recursion for a single basis function, half-open spans, with
/// the right end of the domain closed onto the last non-degenerate span.
inline double basis(const std::vector<double>& U, int i, int p, double u) {
    if (p == 0) {
        const double lo = U[static_cast<std::size_t>(i)];
        const double hi = U[static_cast<std::size_t>(i + 1)];
        if (lo <= u && u < hi) return 1.0;
        // u at the domain's right end belongs to the last non-empty span.
        if (u == U.back() && hi == U.back() && lo < hi) return 1.0;
        return 0.0;
    }
    double left = 0.0, right = 0.0;
    const double d1 = U[static_cast<std::size_t>(i + p)] - U[static_cast<std::size_t>(i)];
    const double d2 = U[static_cast<std::size_t>(i + p + 1)] - U[static_cast<std::size_t>(i + 1)];
    if (d1 > 0.0) left = (u - U[static_cast<std::size_t>(i)]) / d1 * basis(U, i, p - 1, u);
    if (d2 > 0.0) right = (U[static_cast<std::size_t>(i + p + 1)] - u) / d2 * basis(U, i + 1, p - 1, u);
    return left + right;
}

inline std::vector<double> all_basis(const std::vector<double>& U, int p, double u) {
    const int n = static_cast<int>(U.size()) - p - 1;
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = basis(U, i, p, u);
    return out;
}

/// Linear scan for the span index of u.
inline int span_scan(const std::vector<double>& U, int p, double u) {
    const int n = static_cast<int>(U.size()) - p - 2;
    if (u == U.back()) {
        for (int i = n; i >= p; --i) {
            if (U[static_cast<std::size_t>(i)] < U[static_cast<std::size_t>(i + 1)]) return i;
        }
    }
    for (int i = p; i <= n; ++i) {
        if (U[static_cast<std::size_t>(i)] <= u && u < U[static_cast<std::size_t>(i + 1)]) return i;
    }
    return -1;
}

/// Gaussian elimination with full pivoting; throws on (numerical) singularity.
inline Matrix solve_full_pivot(Matrix a, Matrix b) {
    const std::size_t n = a.size();
    const std::size_t m = b.empty() ? 0 : b[0].size();
    std::vector<std::size_t> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = i;
    double scale = 0.0;
    for (const auto& r : a)
        for (double v : r) scale = std::max(scale, std::abs(v));
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pr = k, pc = k;
        double best = -1.0;
        for (std::size_t i = k; i < n; ++i)
            for (std::size_t j = k; j < n; ++j)
                if (std::abs(a[i][j]) > best) {
                    best = std::abs(a[i][j]);
                    pr = i;
                    pc = j;
                }
        if (best <= 1e-14 * scale) throw std::runtime_error("oracle: singular system");
        std::swap(a[k], a[pr]);
        std::swap(b[k], b[pr]);
        for (auto& r : a) std::swap(r[k], r[pc]);
        std::swap(col[k], col[pc]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a[i][k] / a[k][k];
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
            for (std::size_t j = 0; j < m; ++j) b[i][j] -= f * b[k][j];
        }
    }
    Matrix y(n, std::vector<double>(m, 0.0));
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = b[ii][j];
            for (std::size_t c = ii + 1; c < n; ++c) s -= a[ii][c] * y[c][j];
            y[ii][j] = s / a[ii][ii];
        }
    }
    Matrix x(n, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < n; ++i) x[col[i]] = y[i];
    return x;
}

/// Controls minimizing sum over free rows of (B x - Q)^2 subject to B x = Q on
/// key rows, from the dense KKT system [2 A^T A, C^T; C, 0].
inline Matrix kkt_solve(const Matrix& colloc, const Matrix& points, const std::vector<bool>& key) {
    const std::size_t n = colloc[0].size();
    const std::size_t dim = points[0].size();
    std::vector<std::size_t> keys, free;
    for (std::size_t r = 0; r < colloc.size(); ++r) (key[r] ? keys : free).push_back(r);
    const std::size_t m = keys.size();
    Matrix k(n + m, std::vector<double>(n + m, 0.0));
    Matrix rhs(n + m, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t r : free) s += colloc[r][i] * colloc[r][j];
            k[i][j] = 2.0 * s;
        }
        for (std::size_t d = 0; d < dim; ++d) {
            double s = 0.0;
            for (std::size_t r : free) s += colloc[r][i] * points[r][d];
            rhs[i][d] = 2.0 * s;
        }
    }
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            k[n + c][i] = colloc[keys[c]][i];
            k[i][n + c] = colloc[keys[c]][i];
        }
        rhs[n + c] = points[keys[c]];
    }
    Matrix sol = solve_full_pivot(k, rhs);
    sol.resize(n);
    return sol;
}

/// Unconstrained least squares through the normal equations A^T A x = A^T b.
inline Matrix normal_equations(const Matrix& a, const Matrix& b) {
    const std::size_t n = a[0].size();
    const std::size_t dim = b[0].size();
    Matrix ata(n, std::vector<double>(n, 0.0));
    Matrix atb(n, std::vector<double>(dim, 0.0));
    for (std::size_t r = 0; r < a.size(); ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) ata[i][j] += a[r][i] * a[r][j];
            for (std::size_t d = 0; d < dim; ++d) atb[i][d] += a[r][i] * b[r][d];
        }
    }
    return solve_full_pivot(ata, atb);
}

struct P2 {
    double x, y;
};

inline double orient(P2 a, P2 b, P2 c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

/// All triangles (sorted index triples) whose circumcircle holds no other
/// point: the Delaunay triangulation for points in general position.
inline std::vector<std::array<int, 3>> brute_force_delaunay(const std::vector<P2>& pts) {
    std::vector<std::array<int, 3>> out;
    const int n = static_cast<int>(pts.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                P2 a = pts[static_cast<std::size_t>(i)], b = pts[static_cast<std::size_t>(j)],
                   c = pts[static_cast<std::size_t>(k)];
                const double o = orient(a, b, c);
                if (std::abs(o) < 1e-14) continue;
                if (o < 0) std::swap(b, c);
                bool empty = true;
                for (int l = 0; l < n && empty; ++l) {
                    if (l == i || l == j || l == k) continue;
                    const P2 d = pts[static_cast<std::size_t>(l)];
                    const double adx = a.x - d.x, ady = a.y - d.y, bdx = b.x - d.x, bdy = b.y - d.y,
                                 cdx = c.x - d.x, cdy = c.y - d.y;
                    const double det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) -
                                       (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady) +
                                       (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
                    if (det > 0) empty = false;
                }
                if (empty) out.push_back({i, j, k});
            }
    std::sort(out.begin(), out.end());
    return out;
}

inline double seg_dist(P2 p, P2 a, P2 b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - a.x - t * vx, p.y - a.y - t * vy);
}

/// Symmetric Hausdorff distance between two closed polygons, by dense
/// sampling of each boundary against the other's edges.
inline double hausdorff(const std::vector<P2>& a, const std::vector<P2>& b, int samples_per_edge = 200) {
    auto one_way = [&](const std::vector<P2>& from, const std::vector<P2>& to) {
        double worst = 0.0;
        for (std::size_t i = 0; i < from.size(); ++i) {
            const P2 p = from[i], q = from[(i + 1) % from.size()];
            for (int s = 0; s < samples_per_edge; ++s) {
                const double t = static_cast<double>(s) / samples_per_edge;
                const P2 x{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
                double best = 1e300;
                for (std::size_t j = 0; j < to.size(); ++j) best = std::min(best, seg_dist(x, to[j], to[(j + 1) % to.size()]));
                worst = std::max(worst, best);
            }
        }
        return worst;
    };
    return std::max(one_way(a, b), one_way(b, a));
}

}  // namespace oracle
