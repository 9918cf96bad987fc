#include "predicates.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pcn/error.hpp"
#include "pcn/geometry.hpp"

namespace pcn::geo::detail {
namespace {

constexpr int kMaxN = kMaxDim + 1;
// Relative error bound of the Laplace expansion against the permanent of the
// absolute entries; generous for n <= 5.
constexpr double kFilterEps = 1e-13;
// Quantized magnitudes stay below 2^50 so coordinate differences are exact doubles.
constexpr double kMaxCoordinate = 1e6;

using Mat = std::array<std::array<double, kMaxN>, kMaxN>;

double laplace(const Mat& m, const Mat& a, int n, int row, unsigned used, double& perm) {
    if (row == n) {
        perm = 1.0;
        return 1.0;
    }
    double s = 0.0, p = 0.0, sign = 1.0;
    for (int c = 0; c < n; ++c) {
        if (used & (1u << c)) continue;
        if (m[row][c] != 0.0 || a[row][c] != 0.0) {
            double sub_perm = 0.0;
            const double sub = laplace(m, a, n, row + 1, used | (1u << c), sub_perm);
            s += sign * m[row][c] * sub;
            p += a[row][c] * sub_perm;
        }
        sign = -sign;
    }
    perm = p;
    return s;
}

int filtered_sign(const Mat& m, const Mat& a, int n) {
    double perm = 0.0;
    const double det = laplace(m, a, n, 0, 0u, perm);
    const double bound = kFilterEps * perm;
    if (det > bound) return 1;
    if (det < -bound) return -1;
    return 2;  // undecided
}

int bareiss_sign(std::array<std::array<mpz_class, kMaxN>, kMaxN> m, int n) {
    int sign = 1;
    mpz_class prev = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (m[k][k] == 0) {
            int swap = -1;
            for (int r = k + 1; r < n; ++r)
                if (m[r][k] != 0) {
                    swap = r;
                    break;
                }
            if (swap < 0) return 0;
            std::swap(m[k], m[swap]);
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j) {
                m[i][j] = m[i][j] * m[k][k] - m[i][k] * m[k][j];
                mpz_divexact(m[i][j].get_mpz_t(), m[i][j].get_mpz_t(), prev.get_mpz_t());
            }
        prev = m[k][k];
    }
    return sign * sgn(m[n - 1][n - 1]);
}

mpz_class to_mpz(std::int64_t v) {
    mpz_class r;
    mpz_set_si(r.get_mpz_t(), static_cast<long>(v));
    return r;
}

}  // namespace

QuantizedPoints::QuantizedPoints(std::span<const Point> points, std::span<const std::uint64_t> labels)
    : dim_(points.empty() ? 0 : points.front().dim()) {
    if (!labels.empty() && labels.size() != points.size())
        throw std::invalid_argument("label count does not match point count");
    q_.reserve(points.size());
    labels_.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Point& p = points[i];
        if (p.dim() != dim_) throw std::invalid_argument("mixed point dimensions");
        if (!p.finite()) throw std::invalid_argument("non-finite coordinate");
        std::array<std::int64_t, kMaxDim> qi{};
        for (int c = 0; c < dim_; ++c) {
            if (std::abs(p[c]) > kMaxCoordinate)
                throw DegeneracyError("coordinate magnitude exceeds " + std::to_string(kMaxCoordinate));
            qi[static_cast<std::size_t>(c)] = std::llround(p[c] / kQuantum);
        }
        q_.push_back(qi);
        labels_.push_back(labels.empty() ? i : labels[i]);
    }
}

int QuantizedPoints::orient(std::span<const std::uint32_t> rows) const {
    const int n = dim_;
    Mat m{}, a{};
    const auto& last = q_[rows[static_cast<std::size_t>(n)]];
    for (int r = 0; r < n; ++r) {
        const auto& p = q_[rows[static_cast<std::size_t>(r)]];
        for (int c = 0; c < n; ++c) {
            m[r][c] = static_cast<double>(p[c] - last[c]);
            a[r][c] = std::abs(m[r][c]);
        }
    }
    const int s = filtered_sign(m, a, n);
    if (s != 2) return s;
    std::array<std::array<mpz_class, kMaxN>, kMaxN> e;
    for (int r = 0; r < n; ++r) {
        const auto& p = q_[rows[static_cast<std::size_t>(r)]];
        for (int c = 0; c < n; ++c) e[r][c] = to_mpz(p[c] - last[c]);
    }
    return bareiss_sign(std::move(e), n);
}

int QuantizedPoints::lifted_unperturbed(std::span<const std::uint32_t> rows) const {
    const int n = dim_ + 1;
    Mat m{}, a{};
    const auto& last = q_[rows[static_cast<std::size_t>(n)]];
    for (int r = 0; r < n; ++r) {
        const auto& p = q_[rows[static_cast<std::size_t>(r)]];
        double w = 0.0, wabs = 0.0;
        for (int c = 0; c < dim_; ++c) {
            const double diff = static_cast<double>(p[c] - last[c]);
            const double sum = static_cast<double>(p[c]) + static_cast<double>(last[c]);
            m[r][c] = diff;
            a[r][c] = std::abs(diff);
            w += diff * sum;
            wabs += std::abs(diff * sum);
        }
        m[r][dim_] = w;
        a[r][dim_] = wabs;
    }
    const int s = filtered_sign(m, a, n);
    if (s != 2) return s;
    std::array<std::array<mpz_class, kMaxN>, kMaxN> e;
    for (int r = 0; r < n; ++r) {
        const auto& p = q_[rows[static_cast<std::size_t>(r)]];
        mpz_class w = 0;
        for (int c = 0; c < dim_; ++c) {
            e[r][c] = to_mpz(p[c] - last[c]);
            w += e[r][c] * (to_mpz(p[c]) + to_mpz(last[c]));
        }
        e[r][dim_] = w;
    }
    return bareiss_sign(std::move(e), n);
}

int QuantizedPoints::orient_lifted(std::span<const std::uint32_t> rows) const {
    const int s = lifted_unperturbed(rows);
    return s != 0 ? s : perturbed_sign(rows, true);
}

int QuantizedPoints::orient_perturbed(std::span<const std::uint32_t> rows) const {
    const int s = orient(rows);
    return s != 0 ? s : perturbed_sign(rows, false);
}

// det(A + E) expands into monomials over partial matchings S of perturbed
// entries; the coefficient of Π_{(r,c)∈S} ε_rc is (-1)^(Σr+Σc)·sgn(π_S) times
// the complementary minor. With ε_k = ε^(2^k) and entries ranked by priority,
// ascending bitmasks enumerate monomials from most to least significant.
int QuantizedPoints::perturbed_sign(std::span<const std::uint32_t> rows, bool lifted) const {
    const int m = static_cast<int>(rows.size());
    const int ones_col = lifted ? dim_ + 1 : dim_;
    std::vector<std::vector<mpz_class>> a(static_cast<std::size_t>(m), std::vector<mpz_class>(static_cast<std::size_t>(m)));
    for (int r = 0; r < m; ++r) {
        const auto& p = q_[rows[static_cast<std::size_t>(r)]];
        mpz_class w = 0;
        for (int c = 0; c < dim_; ++c) {
            a[r][c] = to_mpz(p[c]);
            w += a[r][c] * a[r][c];
        }
        if (lifted) a[r][dim_] = w;
        a[r][ones_col] = 1;
    }
    struct Entry {
        int row, col;
        int cls;
        std::uint64_t label;
    };
    std::vector<Entry> entries;
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < ones_col; ++c)
            entries.push_back({r, c, (lifted && c == dim_) ? 0 : 1 + c, labels_[rows[static_cast<std::size_t>(r)]]});
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
        return x.cls != y.cls ? x.cls < y.cls : x.label < y.label;
    });
    const int e = static_cast<int>(entries.size());
    if (e > 62) throw DegeneracyError("perturbation table too large");

    std::array<std::array<mpz_class, kMaxN>, kMaxN> minor;
    for (std::uint64_t mask = 1; mask < (1ull << e); ++mask) {
        unsigned used_rows = 0, used_cols = 0;
        bool ok = true;
        int count = 0;
        for (std::uint64_t bits = mask; bits; bits &= bits - 1) {
            const Entry& en = entries[static_cast<std::size_t>(__builtin_ctzll(bits))];
            if ((used_rows >> en.row) & 1u || (used_cols >> en.col) & 1u) {
                ok = false;
                break;
            }
            used_rows |= 1u << en.row;
            used_cols |= 1u << en.col;
            ++count;
        }
        if (!ok || count >= m) continue;

        // Sign of the matching: (-1)^(Σr+Σc) · sgn(rows sorted -> matched cols).
        std::array<int, kMaxN + 1> col_of_row{};
        int parity = 0;
        for (std::uint64_t bits = mask; bits; bits &= bits - 1) {
            const Entry& en = entries[static_cast<std::size_t>(__builtin_ctzll(bits))];
            col_of_row[static_cast<std::size_t>(en.row)] = en.col;
            parity += en.row + en.col;
        }
        std::vector<int> seq;
        for (int r = 0; r < m; ++r)
            if ((used_rows >> r) & 1u) seq.push_back(col_of_row[static_cast<std::size_t>(r)]);
        for (std::size_t i = 0; i < seq.size(); ++i)
            for (std::size_t j = i + 1; j < seq.size(); ++j)
                if (seq[i] > seq[j]) ++parity;

        const int n = m - count;
        int ri = 0;
        for (int r = 0; r < m; ++r) {
            if ((used_rows >> r) & 1u) continue;
            int ci = 0;
            for (int c = 0; c < m; ++c) {
                if ((used_cols >> c) & 1u) continue;
                minor[ri][ci++] = a[r][c];
            }
            ++ri;
        }
        const int det = n == 0 ? 1 : bareiss_sign(minor, n);
        if (det != 0) return (parity % 2 == 0) ? det : -det;
    }
    throw DegeneracyError("perturbed orientation unresolved");
}

int QuantizedPoints::affine_rank(std::span<const std::uint32_t> rows) const {
    if (rows.size() <= 1) return 0;
    const auto& base = q_[rows[0]];
    std::vector<std::vector<mpq_class>> m;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        std::vector<mpq_class> row(static_cast<std::size_t>(dim_));
        for (int c = 0; c < dim_; ++c) row[static_cast<std::size_t>(c)] = to_mpz(q_[rows[r]][c] - base[c]);
        m.push_back(std::move(row));
    }
    int rank = 0;
    const std::size_t nr = m.size();
    for (int c = 0; c < dim_ && static_cast<std::size_t>(rank) < nr; ++c) {
        std::size_t piv = static_cast<std::size_t>(rank);
        while (piv < nr && m[piv][static_cast<std::size_t>(c)] == 0) ++piv;
        if (piv == nr) continue;
        std::swap(m[piv], m[static_cast<std::size_t>(rank)]);
        const auto& pr = m[static_cast<std::size_t>(rank)];
        for (std::size_t r = static_cast<std::size_t>(rank) + 1; r < nr; ++r) {
            if (m[r][static_cast<std::size_t>(c)] == 0) continue;
            const mpq_class f = m[r][static_cast<std::size_t>(c)] / pr[static_cast<std::size_t>(c)];
            for (int cc = c; cc < dim_; ++cc)
                m[r][static_cast<std::size_t>(cc)] -= f * pr[static_cast<std::size_t>(cc)];
        }
        ++rank;
    }
    return rank;
}

}  // namespace pcn::geo::detail
