#pragma once

// Independent reference computations used by the unit and acceptance suites.
// Nothing here calls into the code paths it is used to check.

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <vector>

#include "pcn/geometry.hpp"
#include "pcn/point.hpp"

namespace oracle {

using pcn::Point;

inline std::vector<Point> random_points(std::mt19937_64& rng, std::size_t n, int dim, double lo = 0.0,
                                        double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<Point> pts;
    for (std::size_t i = 0; i < n; ++i) {
        Point p(dim);
        for (int c = 0; c < dim; ++c) p[c] = u(rng);
        pts.push_back(p);
    }
    return pts;
}

inline mpq_class quantized(double x) {
    mpq_class q(static_cast<double>(std::llround(x / pcn::geo::kQuantum)));
    return q;
}

/// Number of points strictly inside the circumsphere of `simplex`, computed
/// by solving for the circumcenter (long double, exact rational fallback near ties).
inline int circumsphere_violations(const std::vector<Point>& pts, const std::vector<std::uint32_t>& simplex) {
    const int d = pts.front().dim();
    // Long double attempt.
    std::vector<std::vector<long double>> a(static_cast<std::size_t>(d), std::vector<long double>(d + 1));
    const Point& p0 = pts[simplex[0]];
    auto qd = [](double x) { return static_cast<long double>(std::llround(x / pcn::geo::kQuantum)) * 1e-9L; };
    for (int i = 0; i < d; ++i) {
        const Point& pi = pts[simplex[static_cast<std::size_t>(i + 1)]];
        long double rhs = 0;
        for (int c = 0; c < d; ++c) {
            a[i][c] = 2 * (qd(pi[c]) - qd(p0[c]));
            rhs += qd(pi[c]) * qd(pi[c]) - qd(p0[c]) * qd(p0[c]);
        }
        a[i][d] = rhs;
    }
    for (int c = 0; c < d; ++c) {
        int piv = c;
        for (int r = c + 1; r < d; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (int r = 0; r < d; ++r) {
            if (r == c) continue;
            const long double f = a[r][c] / a[c][c];
            for (int k = c; k <= d; ++k) a[r][k] -= f * a[c][k];
        }
    }
    std::vector<long double> center(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) center[c] = a[c][d] / a[c][c];
    auto d2 = [&](const Point& p) {
        long double s = 0;
        for (int c = 0; c < d; ++c) s += (qd(p[c]) - center[c]) * (qd(p[c]) - center[c]);
        return s;
    };
    const long double r2 = d2(p0);
    std::vector<std::uint32_t> near;
    int violations = 0;
    for (std::uint32_t j = 0; j < pts.size(); ++j) {
        if (std::find(simplex.begin(), simplex.end(), j) != simplex.end()) continue;
        const long double diff = d2(pts[j]) - r2;
        const long double slack = 1e-9L * (r2 + 1);
        if (diff < -slack) ++violations;
        else if (diff <= slack) near.push_back(j);
    }
    if (near.empty()) return violations;

    // Exact rational circumcenter for the undecided points.
    std::vector<std::vector<mpq_class>> e(static_cast<std::size_t>(d), std::vector<mpq_class>(d + 1));
    for (int i = 0; i < d; ++i) {
        const Point& pi = pts[simplex[static_cast<std::size_t>(i + 1)]];
        mpq_class rhs = 0;
        for (int c = 0; c < d; ++c) {
            e[i][c] = 2 * (quantized(pi[c]) - quantized(p0[c]));
            rhs += quantized(pi[c]) * quantized(pi[c]) - quantized(p0[c]) * quantized(p0[c]);
        }
        e[i][d] = rhs;
    }
    for (int c = 0; c < d; ++c) {
        int piv = c;
        while (e[piv][c] == 0) ++piv;
        std::swap(e[c], e[piv]);
        for (int r = 0; r < d; ++r) {
            if (r == c || e[r][c] == 0) continue;
            const mpq_class f = e[r][c] / e[c][c];
            for (int k = c; k <= d; ++k) e[r][k] -= f * e[c][k];
        }
    }
    std::vector<mpq_class> cc(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) cc[c] = e[c][d] / e[c][c];
    auto ed2 = [&](const Point& p) {
        mpq_class s = 0;
        for (int c = 0; c < d; ++c) s += (quantized(p[c]) - cc[c]) * (quantized(p[c]) - cc[c]);
        return s;
    };
    const mpq_class er2 = ed2(p0);
    for (auto j : near)
        if (ed2(pts[j]) < er2) ++violations;
    return violations;
}

/// Index of the point nearest to x (smallest index on ties).
inline std::uint32_t nearest(const std::vector<Point>& pts, const Point& x) {
    std::uint32_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::uint32_t i = 0; i < pts.size(); ++i) {
        const double d = pcn::dist2(pts[i], x);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

/// All-pairs unweighted hop distances; -1 for unreachable.
inline std::vector<std::vector<int>> floyd_warshall(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
    const int inf = std::numeric_limits<int>::max() / 4;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
    for (auto [a, b] : edges) d[a][b] = d[b][a] = 1;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    for (auto& row : d)
        for (auto& x : row)
            if (x >= inf) x = -1;
    return d;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
            for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) mx += rx[i], my += ry[i];
    mx /= static_cast<double>(rx.size());
    my /= static_cast<double>(ry.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
