#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "pcn/error.hpp"
#include "pcn/geometry.hpp"
#include "predicates.hpp"

namespace pcn::geo {
namespace {

using detail::QuantizedPoints;

constexpr int kMaxFacetVerts = kMaxDim + 1;

struct Facet {
    std::array<std::uint32_t, kMaxFacetVerts> v{};
    std::array<std::int32_t, kMaxFacetVerts> nb{};
    std::uint32_t visible_mark = 0;
    std::uint32_t hidden_mark = 0;
    bool alive = true;
};

using RidgeKey = std::array<std::uint32_t, kMaxFacetVerts - 1>;

struct RidgeHash {
    std::size_t operator()(const RidgeKey& k) const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        for (auto x : k) h = (h ^ x) * 1099511628211ull;
        return static_cast<std::size_t>(h);
    }
};

// Morton-style interleave of coarse quantized coordinates; spatially coherent
// insertion keeps the visible-facet search near the end of the facet list.
std::vector<std::uint32_t> insertion_order(const QuantizedPoints& qp) {
    const int d = qp.dim();
    const std::size_t n = qp.size();
    std::array<std::int64_t, kMaxDim> lo{}, hi{};
    lo.fill(INT64_MAX);
    hi.fill(INT64_MIN);
    for (std::uint32_t i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) {
            lo[c] = std::min(lo[c], qp.q(i)[c]);
            hi[c] = std::max(hi[c], qp.q(i)[c]);
        }
    const int bits = 60 / d;
    std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::uint64_t key = 0;
        std::array<std::uint64_t, kMaxDim> cell{};
        for (int c = 0; c < d; ++c) {
            const double span = static_cast<double>(hi[c] - lo[c]);
            const double t = span > 0 ? static_cast<double>(qp.q(i)[c] - lo[c]) / span : 0.0;
            cell[c] = static_cast<std::uint64_t>(t * static_cast<double>((1ull << bits) - 1));
        }
        for (int b = bits - 1; b >= 0; --b)
            for (int c = 0; c < d; ++c) key = (key << 1) | ((cell[c] >> b) & 1u);
        keyed[i] = {key, i};
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = keyed[i].second;
    return order;
}

class LiftedHull {
public:
    explicit LiftedHull(const QuantizedPoints& qp) : qp_(qp), D_(qp.dim() + 1) {}

    void build() {
        auto order = insertion_order(qp_);
        const int d = qp_.dim();

        // Greedy affinely independent (d+1)-subset, then one extra point.
        std::vector<std::uint32_t> simplex;
        std::vector<std::uint32_t> rest;
        for (std::uint32_t idx : order) {
            if (static_cast<int>(simplex.size()) <= d) {
                simplex.push_back(idx);
                if (qp_.affine_rank(simplex) != static_cast<int>(simplex.size()) - 1) {
                    simplex.pop_back();
                    rest.push_back(idx);
                }
            } else {
                rest.push_back(idx);
            }
        }
        if (static_cast<int>(simplex.size()) < d + 1)
            throw DegeneracyError("all points lie on a common hyperplane");
        if (rest.empty()) {
            single_simplex_ = simplex;
            return;
        }
        simplex.push_back(rest.front());
        rest.erase(rest.begin());
        init_simplex(simplex);
        for (std::uint32_t idx : rest) insert(idx);
    }

    std::vector<std::vector<std::uint32_t>> lower_facets() const {
        std::vector<std::vector<std::uint32_t>> out;
        if (!single_simplex_.empty()) {
            out.push_back(single_simplex_);
            return out;
        }
        for (const Facet& f : facets_) {
            if (!f.alive) continue;
            // Lower iff the vertical point at +infinity is beneath, which
            // reduces to a positive projected orientation. Facets that are
            // flat only thanks to the perturbation carry no real cell.
            const std::span<const std::uint32_t> rows(f.v.data(), static_cast<std::size_t>(D_));
            if (qp_.orient_perturbed(rows) > 0 && qp_.orient(rows) != 0)
                out.emplace_back(f.v.begin(), f.v.begin() + D_);
        }
        return out;
    }

private:
    int orient(const Facet& f, std::uint32_t q) const {
        std::array<std::uint32_t, kMaxFacetVerts + 1> rows{};
        std::copy(f.v.begin(), f.v.begin() + D_, rows.begin());
        rows[static_cast<std::size_t>(D_)] = q;
        return qp_.orient_lifted(std::span<const std::uint32_t>(rows.data(), static_cast<std::size_t>(D_ + 1)));
    }

    void init_simplex(const std::vector<std::uint32_t>& s) {
        // Facet j omits s[j]; its neighbor opposite vertex s[k] is facet k.
        const int m = D_ + 1;
        for (int j = 0; j < m; ++j) {
            Facet f;
            std::array<int, kMaxFacetVerts> omitted_idx{};
            int t = 0;
            for (int k = 0; k < m; ++k)
                if (k != j) {
                    f.v[static_cast<std::size_t>(t)] = s[static_cast<std::size_t>(k)];
                    omitted_idx[static_cast<std::size_t>(t)] = k;
                    ++t;
                }
            for (int p = 0; p < D_; ++p) f.nb[static_cast<std::size_t>(p)] = omitted_idx[static_cast<std::size_t>(p)];
            if (orient(f, s[static_cast<std::size_t>(j)]) > 0) {
                std::swap(f.v[0], f.v[1]);
                std::swap(f.nb[0], f.nb[1]);
            }
            facets_.push_back(f);
        }
        alive_ = m;
    }

    void insert(std::uint32_t q) {
        ++stamp_;
        std::int32_t start = -1;
        for (std::int32_t i = static_cast<std::int32_t>(facets_.size()) - 1; i >= 0; --i) {
            Facet& f = facets_[static_cast<std::size_t>(i)];
            if (!f.alive) continue;
            if (orient(f, q) > 0) {
                start = i;
                break;
            }
        }
        if (start < 0) throw DegeneracyError("point not outside lifted hull (duplicate point?)");

        std::vector<std::int32_t> visible{start};
        std::vector<std::pair<std::int32_t, int>> horizon;
        facets_[static_cast<std::size_t>(start)].visible_mark = stamp_;
        for (std::size_t h = 0; h < visible.size(); ++h) {
            const std::int32_t fi = visible[h];
            for (int p = 0; p < D_; ++p) {
                const std::int32_t ni = facets_[static_cast<std::size_t>(fi)].nb[static_cast<std::size_t>(p)];
                Facet& nf = facets_[static_cast<std::size_t>(ni)];
                if (nf.visible_mark == stamp_) continue;
                if (nf.hidden_mark != stamp_) {
                    if (orient(nf, q) > 0) {
                        nf.visible_mark = stamp_;
                        visible.push_back(ni);
                        continue;
                    }
                    nf.hidden_mark = stamp_;
                }
                horizon.emplace_back(fi, p);
            }
        }

        std::unordered_map<RidgeKey, std::pair<std::int32_t, int>, RidgeHash> open;
        for (auto [fi, p] : horizon) {
            const Facet& vf = facets_[static_cast<std::size_t>(fi)];
            Facet nf;
            nf.v = vf.v;
            nf.v[static_cast<std::size_t>(p)] = q;
            nf.nb.fill(-1);
            const std::int32_t hid = vf.nb[static_cast<std::size_t>(p)];
            nf.nb[static_cast<std::size_t>(p)] = hid;
            const auto new_idx = static_cast<std::int32_t>(facets_.size());
            Facet& hf = facets_[static_cast<std::size_t>(hid)];
            for (int k = 0; k < D_; ++k)
                if (hf.nb[static_cast<std::size_t>(k)] == fi) hf.nb[static_cast<std::size_t>(k)] = new_idx;
            facets_.push_back(nf);
            for (int k = 0; k < D_; ++k) {
                if (k == p) continue;
                RidgeKey key{};
                int t = 0;
                for (int j = 0; j < D_; ++j)
                    if (j != k) key[static_cast<std::size_t>(t++)] = nf.v[static_cast<std::size_t>(j)];
                std::sort(key.begin(), key.begin() + (D_ - 1));
                auto [it, inserted] = open.try_emplace(key, new_idx, k);
                if (!inserted) {
                    facets_[static_cast<std::size_t>(new_idx)].nb[static_cast<std::size_t>(k)] = it->second.first;
                    facets_[static_cast<std::size_t>(it->second.first)].nb[static_cast<std::size_t>(it->second.second)] =
                        new_idx;
                    open.erase(it);
                }
            }
        }
        for (std::int32_t fi : visible) facets_[static_cast<std::size_t>(fi)].alive = false;
        alive_ += static_cast<std::int64_t>(horizon.size()) - static_cast<std::int64_t>(visible.size());
        if (facets_.size() > 4 * static_cast<std::size_t>(alive_) + 64) compact();
    }

    void compact() {
        std::vector<std::int32_t> remap(facets_.size(), -1);
        std::vector<Facet> kept;
        kept.reserve(static_cast<std::size_t>(alive_));
        for (std::size_t i = 0; i < facets_.size(); ++i)
            if (facets_[i].alive) {
                remap[i] = static_cast<std::int32_t>(kept.size());
                kept.push_back(facets_[i]);
            }
        for (Facet& f : kept)
            for (int k = 0; k < D_; ++k) f.nb[static_cast<std::size_t>(k)] = remap[static_cast<std::size_t>(f.nb[static_cast<std::size_t>(k)])];
        facets_ = std::move(kept);
    }

    const QuantizedPoints& qp_;
    int D_;
    std::vector<Facet> facets_;
    std::vector<std::uint32_t> single_simplex_;
    std::int64_t alive_ = 0;
    std::uint32_t stamp_ = 0;
};

void check_distinct(const QuantizedPoints& qp) {
    std::vector<std::uint32_t> idx(qp.size());
    std::iota(idx.begin(), idx.end(), 0u);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return qp.q(a) < qp.q(b); });
    for (std::size_t i = 1; i < idx.size(); ++i)
        if (qp.q(idx[i]) == qp.q(idx[i - 1]))
            throw DegeneracyError("duplicate points " + std::to_string(idx[i - 1]) + " and " + std::to_string(idx[i]));
}

}  // namespace

bool Triangulation::adjacent(std::uint32_t a, std::uint32_t b) const {
    const auto& ns = neighbor_sets[a];
    return std::binary_search(ns.begin(), ns.end(), b);
}

Triangulation delaunay(std::span<const Point> points, std::span<const std::uint64_t> labels) {
    if (points.empty()) throw DegeneracyError("empty point set");
    const int d = points.front().dim();
    if (d < 2 || d > kMaxDim) throw std::invalid_argument("dimension must be 2, 3 or 4");
    if (static_cast<int>(points.size()) < d + 1) throw DegeneracyError("need at least d+1 points");
    QuantizedPoints qp(points, labels);
    check_distinct(qp);

    LiftedHull hull(qp);
    hull.build();

    Triangulation tri;
    tri.dim = d;
    tri.points.assign(points.begin(), points.end());
    tri.simplices = hull.lower_facets();
    for (auto& s : tri.simplices) std::sort(s.begin(), s.end());
    std::sort(tri.simplices.begin(), tri.simplices.end());
    tri.neighbor_sets.assign(points.size(), {});
    for (const auto& s : tri.simplices)
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = 0; j < s.size(); ++j)
                if (i != j) tri.neighbor_sets[s[i]].push_back(s[j]);
    for (auto& ns : tri.neighbor_sets) {
        std::sort(ns.begin(), ns.end());
        ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    }
    return tri;
}

std::vector<std::uint32_t> local_dt_neighbors(const Point& center, std::span<const Point> candidates,
                                              std::uint64_t center_label,
                                              std::span<const std::uint64_t> candidate_labels) {
    if (candidates.empty()) throw std::invalid_argument("local_dt_neighbors: no candidates");
    if (!candidate_labels.empty() && candidate_labels.size() != candidates.size())
        throw std::invalid_argument("local_dt_neighbors: label count mismatch");
    const int d = center.dim();
    std::vector<std::uint32_t> all(candidates.size());
    std::iota(all.begin(), all.end(), 0u);
    if (static_cast<int>(candidates.size()) + 1 <= d + 1) return all;

    std::vector<Point> pts;
    pts.reserve(candidates.size() + 1);
    pts.push_back(center);
    pts.insert(pts.end(), candidates.begin(), candidates.end());
    std::vector<std::uint64_t> labels;
    labels.reserve(pts.size());
    labels.push_back(center_label);
    for (std::size_t i = 0; i < candidates.size(); ++i)
        labels.push_back(candidate_labels.empty() ? center_label + 1 + i : candidate_labels[i]);
    const Triangulation tri = delaunay(pts, labels);
    std::vector<std::uint32_t> out;
    out.reserve(tri.neighbor_sets[0].size());
    for (auto j : tri.neighbor_sets[0]) out.push_back(j - 1);
    return out;
}

}  // namespace pcn::geo
