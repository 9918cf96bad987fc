#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pcn/point.hpp"

namespace pcn::geo {

/// Grid used to quantize coordinates before the exact predicates run.
inline constexpr double kQuantum = 1e-9;
/// Halfspace membership tolerance used by the line walk.
inline constexpr double kLineTolerance = 1e-9;

/// Delaunay triangulation of a finite point set.
///
/// `neighbor_sets[i]` is sorted ascending; `simplices` holds (d+1)-tuples of
/// point indices, each sorted ascending, in a deterministic order.
struct Triangulation {
    int dim = 0;
    std::vector<Point> points;
    std::vector<std::vector<std::uint32_t>> neighbor_sets;
    std::vector<std::vector<std::uint32_t>> simplices;

    bool adjacent(std::uint32_t a, std::uint32_t b) const;
};

/// Delaunay triangulation via the lower hull of the lifted point set.
///
/// Predicates are exact on coordinates quantized to `kQuantum`. Cospherical
/// ties are resolved by symbolically raising the lifted coordinate of each
/// point by an infinitesimal that is larger for smaller `labels` (point index
/// when `labels` is empty), so the result is independent of insertion order
/// and consistent between a global and a local triangulation that share labels.
///
/// Throws `DegeneracyError` for fewer than d+1 points, duplicate points, or
/// point sets contained in a hyperplane.
Triangulation delaunay(std::span<const Point> points, std::span<const std::uint64_t> labels = {});

/// Indices (into `candidates`) adjacent to `center` in the Delaunay
/// triangulation of {center} ∪ candidates. With d+1 or fewer points in total
/// every candidate is returned. `center_label` and `candidate_labels` feed the
/// tie-break; pass global node ids to stay consistent with a global triangulation.
std::vector<std::uint32_t> local_dt_neighbors(const Point& center, std::span<const Point> candidates,
                                              std::uint64_t center_label = 0,
                                              std::span<const std::uint64_t> candidate_labels = {});

/// {x : normal·x <= offset}; the bisector between the cell owner and `neighbor`.
struct Halfspace {
    Point normal;
    double offset = 0;
    std::uint32_t neighbor = 0;

    double signed_distance(const Point& x) const { return (dot(normal, x) - offset) / norm(normal); }
};

struct VoronoiCell {
    std::uint32_t owner = 0;
    Point center;
    std::vector<Halfspace> halfspaces;

    /// True when x satisfies every halfspace within `tol` (Euclidean distance).
    bool contains(const Point& x, double tol = kLineTolerance) const;
};

/// Voronoi cell of `center` restricted to the given Delaunay neighbors. The
/// i-th halfspace carries `neighbor_ids[i]` (or i when omitted).
/// Throws `std::invalid_argument` when a neighbor coincides with the center.
VoronoiCell voronoi_cell(const Point& center, std::span<const Point> dt_neighbors,
                         std::span<const std::uint32_t> neighbor_ids = {}, std::uint32_t owner = 0);

/// base + t·dir with ‖dir‖ = 1.
struct DirectionLine {
    Point base;
    Point dir;

    /// Normalizes `dir`; throws `std::invalid_argument` for a zero vector.
    DirectionLine(Point base_point, Point direction);
    Point at(double t) const { return base + t * dir; }
    DirectionLine reversed() const { return DirectionLine(base, -1.0 * dir); }
};

struct CellExit {
    double param = std::numeric_limits<double>::infinity();
    std::optional<std::uint32_t> neighbor;

    bool bounded() const { return neighbor.has_value(); }
};

/// Where the line leaves `cell` after `entry_param`, and through whose bisector.
/// Ties between bisectors crossed at the same parameter go to the smallest
/// neighbor id. Halfspaces whose neighbor is `exclude` are ignored.
/// Throws `std::invalid_argument` when the entry point is outside the cell.
CellExit line_cell_exit(const VoronoiCell& cell, const DirectionLine& line, double entry_param,
                        std::optional<std::uint32_t> exclude = std::nullopt);

/// Parameter interval [enter, leave] of the line inside the cell; empty
/// optional when the line misses the cell.
std::optional<std::pair<double, double>> line_cell_interval(const VoronoiCell& cell, const DirectionLine& line,
                                                            double tol = kLineTolerance);

}  // namespace pcn::geo
