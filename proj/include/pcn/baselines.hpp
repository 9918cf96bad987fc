#pragma once

#include <cstdint>
#include <vector>

#include "pcn/mdt.hpp"
#include "pcn/routing.hpp"
#include "pcn/topology.hpp"

namespace pcn {

/// Fewest-hop path (BFS, smallest-id ties) ignoring balances; empty when
/// the endpoints are disconnected.
std::vector<NodeId> shortest_path(const ChannelGraph& g, NodeId from, NodeId to);

/// Probes the BFS path and commits it if every hop can carry the amount.
RouteResult route_shortest_path(ChannelGraph& g, const Payment& p);

/// BFS spanning trees rooted at the landmarks.
struct LandmarkState {
    std::vector<NodeId> landmarks;
    std::vector<std::vector<NodeId>> parent;          ///< [tree][node], root maps to itself
    std::vector<std::vector<std::uint32_t>> depth;    ///< [tree][node], kUnreachable off-tree
};

/// The `count` highest-degree nodes (ties to the smaller id) become landmarks.
LandmarkState build_landmarks(const ChannelGraph& g, std::size_t count = 3);

/// sender → landmark (up the tree) then landmark → receiver (down the tree),
/// for the landmark minimising depth(s) + depth(r). `chosen` receives the tree index.
std::vector<NodeId> landmark_path(const LandmarkState& st, NodeId s, NodeId r, std::size_t* chosen = nullptr);

RouteResult route_landmark(const LandmarkState& st, ChannelGraph& g, const Payment& p);

/// Prefix coordinates on the landmark trees: a node's coordinate in tree i
/// is its parent's plus the node's rank among the parent's children.
struct TreeEmbedding {
    LandmarkState trees;
    std::vector<std::vector<std::vector<std::uint32_t>>> prefix;  ///< [tree][node]

    /// min over trees of depth(a) + depth(b) - 2·common-prefix-length.
    std::uint32_t distance(NodeId a, NodeId b) const;
};

TreeEmbedding build_embedding(const ChannelGraph& g, std::size_t count = 3);

/// Greedy hop-by-hop: the funded neighbour strictly closest to the receiver
/// in embedding distance, over all channels.
RouteResult route_embedding(const TreeEmbedding& emb, ChannelGraph& g, const Payment& p);

// Mean per-node state, in node/edge entries.
double storage_shortest_path(const ChannelGraph& g);
double storage_landmark(const LandmarkState& st, const ChannelGraph& g);
double storage_embedding(const TreeEmbedding& emb);
double storage_mdt(const Mdt& mdt);

}  // namespace pcn
