#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcn/coords.hpp"
#include "pcn/point.hpp"
#include "pcn/topology.hpp"

namespace pcn {

/// <source, pred, succ, dest>; kNoNode stands for "none".
struct ForwardingEntry {
    NodeId source = kNoNode;
    NodeId pred = kNoNode;
    NodeId succ = kNoNode;
    NodeId dest = kNoNode;

    friend bool operator==(const ForwardingEntry&, const ForwardingEntry&) = default;
};

struct MdtNodeState {
    NodeId id = 0;
    bool active = true;
    Point coord;
    std::map<NodeId, Point> direct;  ///< C_u
    std::map<NodeId, Point> dt;      ///< N_u
    std::vector<ForwardingEntry> table;
    /// Physical path id → ... → neighbour for every DT neighbour without a channel.
    std::map<NodeId, std::vector<NodeId>> virtual_links;

    /// Distinct neighbours |C_u ∪ N_u|.
    std::size_t storage() const;
};

using Mdt = std::vector<MdtNodeState>;

/// Builds every node's state from the global Delaunay of `coords`.
/// Inactive nodes (active[u] == false) get an empty, inactive state.
/// Virtual links follow BFS shortest paths (smallest-id ties) over active nodes.
Mdt build_mdt(const ChannelGraph& g, std::span<const Point> coords, const std::vector<bool>& active = {});

/// Recomputes every forwarding table from the stored virtual links.
void rebuild_tables(Mdt& mdt);

/// The coordinate authority a joining node talks to.
struct CoordAuthority {
    CoordinateAssignment* ca = nullptr;
    CoordConfig cfg;
    std::uint64_t seed = 0;
};

struct JoinReport {
    Point coord;
    NodeId closest = kNoNode;
    std::size_t neighbor_queries = 0;
};

/// Inserts `node` (whose channels to `direct` already exist in `g`) into the
/// structure. Grows `mdt` and the authority's tables if needed.
JoinReport join(Mdt& mdt, const ChannelGraph& g, NodeId node, std::span<const NodeId> direct, CoordAuthority& auth,
                std::optional<Point> coord_override = std::nullopt);

struct MaintenanceReport {
    std::size_t changed_nodes = 0;
    std::size_t messages = 0;
};

/// One synchronous round: every active node refreshes C_u from its channels,
/// swaps neighbour sets with its direct and DT neighbours, recomputes N_u
/// from its local DT and repairs broken virtual links.
MaintenanceReport maintenance_round(Mdt& mdt, const ChannelGraph& g);

/// Marks a node as gone; its channels must already be removed from the graph.
void depart(Mdt& mdt, NodeId node);

/// Overlay greedy walk toward `target` using N_u ∪ C_u, ignoring balances.
/// Returns the physical path; its last node is the local minimum reached.
std::vector<NodeId> greedy_walk(const Mdt& mdt, NodeId from, const Point& target);

/// Structural problems (broken links, asymmetric adjacency, ...); empty when sound.
std::vector<std::string> mdt_violations(const Mdt& mdt, const ChannelGraph& g);

/// Drops repeated nodes from a walk by cutting out the loops between them.
std::vector<NodeId> remove_cycles(std::span<const NodeId> path);

nlohmann::json to_json(const Mdt& mdt);

}  // namespace pcn
