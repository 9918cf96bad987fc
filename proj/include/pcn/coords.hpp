#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pcn/error.hpp"
#include "pcn/point.hpp"
#include "pcn/topology.hpp"

namespace pcn {

inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

/// k distinct nodes drawn uniformly from the largest connected component.
std::vector<NodeId> select_anchors(const ChannelGraph& g, std::size_t k, std::uint64_t seed);

/// Unweighted hop counts from `root`; kUnreachable where there is no path.
std::vector<std::uint32_t> bfs_hops(const ChannelGraph& g, NodeId root);

/// All-pairs hop matrix of a connected graph.
Eigen::MatrixXd hop_matrix(const ChannelGraph& g);

struct MdsResult {
    std::vector<Point> coords;
    double stress = 0;  ///< Σ_{i<j} (h_ij − d_ij)²
};

/// Classical MDS followed by stress refinement (coordinate descent, step halving).
MdsResult mds_anchor_coords(const Eigen::MatrixXd& hops, int dim, std::uint64_t seed);
double stress(const Eigen::MatrixXd& hops, std::span<const Point> coords);

struct SolveResult {
    Point x;
    double residual = 0;  ///< Σ_i (h_i − ‖x − a_i‖)²
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, SolveResult best) : Error(what), best_(best) {}
    const SolveResult& best() const noexcept { return best_; }

private:
    SolveResult best_;
};

/// argmin_x Σ_i (hops_i − ‖x − anchor_i‖)² by multi-start coordinate descent.
SolveResult solve_node_coord(std::span<const Point> anchors, std::span<const double> hops, std::uint64_t seed);
double node_residual(std::span<const Point> anchors, std::span<const double> hops, const Point& x);

/// Component-wise min over neighbours, plus one.
std::vector<std::uint32_t> join_hops(std::span<const std::vector<std::uint32_t>> neighbor_hops);

/// Singular values, descending, normalised by the largest.
std::vector<double> svd_spectrum(const Eigen::MatrixXd& m);

struct CoordConfig {
    int dim = 3;
    std::size_t anchors = 0;  ///< 0 means dim + 1
    /// Half-width of the per-node uniform jitter that separates nodes whose
    /// anchor hop vectors coincide, in hop units.
    double jitter = 0.01;
};

struct CoordinateAssignment {
    int dim = 3;
    std::vector<Point> coords;
    std::vector<NodeId> anchors;
    std::vector<Point> anchor_coords;
    std::vector<std::vector<std::uint32_t>> node_anchor_hops;
    double anchor_stress = 0;
};

/// The coordinate authority: anchors, anchor MDS, then one solve per node.
/// Requires a connected graph.
CoordinateAssignment assign_coordinates(const ChannelGraph& g, const CoordConfig& cfg, std::uint64_t seed);

/// Coordinate for a node from its anchor hop vector, as the authority would
/// hand it out (solve plus the node's jitter).
Point coordinate_for(const CoordinateAssignment& ca, NodeId node, std::span<const std::uint32_t> hops,
                     const CoordConfig& cfg, std::uint64_t seed);

void write_coords_csv(std::span<const Point> coords, const std::filesystem::path& file);
std::vector<Point> read_coords_csv(const std::filesystem::path& file);

}  // namespace pcn
