#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pcn/geometry.hpp"

namespace pcn::geo {

bool VoronoiCell::contains(const Point& x, double tol) const {
    return std::all_of(halfspaces.begin(), halfspaces.end(),
                       [&](const Halfspace& h) { return h.signed_distance(x) <= tol; });
}

VoronoiCell voronoi_cell(const Point& center, std::span<const Point> dt_neighbors,
                         std::span<const std::uint32_t> neighbor_ids, std::uint32_t owner) {
    if (!neighbor_ids.empty() && neighbor_ids.size() != dt_neighbors.size())
        throw std::invalid_argument("voronoi_cell: id count mismatch");
    VoronoiCell cell;
    cell.owner = owner;
    cell.center = center;
    cell.halfspaces.reserve(dt_neighbors.size());
    for (std::size_t i = 0; i < dt_neighbors.size(); ++i) {
        const Point& n = dt_neighbors[i];
        if (dist2(n, center) == 0.0) throw std::invalid_argument("voronoi_cell: neighbor coincides with center");
        Halfspace h;
        h.normal = n - center;
        h.offset = 0.5 * (norm2(n) - norm2(center));
        h.neighbor = neighbor_ids.empty() ? static_cast<std::uint32_t>(i) : neighbor_ids[i];
        cell.halfspaces.push_back(h);
    }
    return cell;
}

DirectionLine::DirectionLine(Point base_point, Point direction) : base(base_point), dir(direction) {
    const double len = norm(dir);
    if (!(len > 0.0) || !std::isfinite(len)) throw std::invalid_argument("DirectionLine: zero direction");
    dir *= 1.0 / len;
}

CellExit line_cell_exit(const VoronoiCell& cell, const DirectionLine& line, double entry_param,
                        std::optional<std::uint32_t> exclude) {
    const Point entry = line.at(entry_param);
    const double tol = kLineTolerance * (1.0 + norm(entry));
    for (const Halfspace& h : cell.halfspaces)
        if (h.signed_distance(entry) > tol)
            throw std::invalid_argument("line_cell_exit: entry point lies outside the cell");

    CellExit best;
    for (const Halfspace& h : cell.halfspaces) {
        if (exclude && h.neighbor == *exclude) continue;
        const double rate = dot(h.normal, line.dir);
        if (!(rate > 0.0)) continue;
        const double t = std::max(entry_param, (h.offset - dot(h.normal, line.base)) / rate);
        const double tie = 1e-12 * (1.0 + std::abs(t));
        if (!best.neighbor || t < best.param - tie) {
            best.param = t;
            best.neighbor = h.neighbor;
        } else if (std::abs(t - best.param) <= tie && h.neighbor < *best.neighbor) {
            best.param = std::min(best.param, t);
            best.neighbor = h.neighbor;
        }
    }
    return best;
}

std::optional<std::pair<double, double>> line_cell_interval(const VoronoiCell& cell, const DirectionLine& line,
                                                            double tol) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const Halfspace& h : cell.halfspaces) {
        const double rate = dot(h.normal, line.dir);
        const double slack = h.offset - dot(h.normal, line.base);
        if (rate > 0.0) {
            hi = std::min(hi, slack / rate);
        } else if (rate < 0.0) {
            lo = std::max(lo, slack / rate);
        } else if (slack < -tol * norm(h.normal)) {
            return std::nullopt;
        }
    }
    if (lo > hi + tol) return std::nullopt;
    return std::make_pair(lo, std::max(lo, hi));
}

}  // namespace pcn::geo
