#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pcn/geometry.hpp"
#include "pcn/mdt.hpp"
#include "pcn/topology.hpp"

namespace pcn {

enum class Failure {
    None,
    NoRoute,       ///< no candidate next hop (or disconnected endpoints)
    Insufficient,  ///< candidates exist but none can carry the amount
    LoopGuard,     ///< hop budget exhausted
    LineExited,    ///< PE line left the hull before reaching the receiver
    CommitFailed,  ///< a hop ran dry while committing (path reuses a channel)
    PartFailed,    ///< another sub-payment of the same payment failed
};

std::string_view to_string(Failure f);
Failure failure_from_string(std::string_view s);

struct RouteResult {
    bool success = false;
    Failure reason = Failure::None;
    std::vector<NodeId> path;  ///< physical hops, sender first
    std::size_t probe_messages = 0;
    Amount delivered = 0;
    /// Overlay nodes where a forwarding decision was taken (WF / WF-PE only).
    std::vector<NodeId> decisions;
};

/// Applies ψ_uv -= ω, ψ_vu += ω hop by hop. If a hop lacks funds every earlier
/// hop is undone and false is returned.
bool commit_path(ChannelGraph& g, std::span<const NodeId> path, Amount amount);
/// Undoes a committed path exactly.
void rollback_path(ChannelGraph& g, std::span<const NodeId> path, Amount amount);
/// min ψ over the directed hops; max Amount for a single-node path,
/// -1 when a hop has no channel.
Amount bottleneck(const ChannelGraph& g, std::span<const NodeId> path);

/// Hop budget used by the greedy routers: 4 · diameter of the component
/// structure (max finite eccentricity), at least 4.
std::size_t default_hop_budget(const ChannelGraph& g);

// ---------------------------------------------------------------------------
// MDT greedy forwarding

struct MdtDecision {
    enum class Kind { Deliver, Direct, Virtual, Fail };
    Kind kind = Kind::Fail;
    NodeId next = kNoNode;
    std::vector<NodeId> segment;  ///< physical path from the deciding node to `next`
    std::size_t probes = 0;
    Failure reason = Failure::None;
};

inline constexpr std::size_t kMaxDtProbes = 5;

/// Neighbours strictly closer to `target` than `s`, nearest first (ties by
/// id): direct neighbours, then up to kMaxDtProbes DT-only neighbours that
/// have a stored virtual link.
struct MdtCandidates {
    std::vector<NodeId> direct;
    std::vector<NodeId> virtual_links;
};
MdtCandidates mdt_candidates(const MdtNodeState& s, const Point& target);

/// One forwarding step at `s` toward `target` for amount ω.
MdtDecision forward_mdt(const MdtNodeState& s, const ChannelGraph& g, const Point& target, Amount amount);

struct RouteOptions {
    std::size_t hop_budget = 0;  ///< physical hops; 0 means default_hop_budget(g)
};

/// Greedy MDT routing from payment.sender to the node at payment.receiver's
/// coordinate, then an atomic commit.
RouteResult route_mdt(const Mdt& mdt, ChannelGraph& g, const Payment& p, const RouteOptions& opt = {});

// ---------------------------------------------------------------------------
// Splitting

struct SplitPart {
    Amount amount = 0;
    std::uint64_t sub_index = 0;
};

struct SplitPlan {
    std::vector<SplitPart> parts;
    Amount threshold = 0;
};

/// ω ≤ threshold: one part. Otherwise ⌈ω/threshold⌉ parts, uniform over the
/// compositions of ω with every part in [1, threshold].
SplitPlan split_payment(Amount amount, Amount threshold, std::uint64_t seed);

// ---------------------------------------------------------------------------
// WebFlow-PE

using Digest = std::array<std::uint8_t, 32>;
Digest sha256(std::span<const std::uint8_t> bytes);

struct PeTarget {
    geo::DirectionLine line;
    Digest secret_hash{};
};

struct PeOptions {
    /// Base point drawn from a cube of this half-width, as a fraction of the
    /// distance from the sender to its nearest bisector. 0 uses the sender's coordinate.
    double base_spread = 0.5;
    /// Half-width of the cube around the receiver coordinate that the line
    /// aims at. Only used when the receiver's cell is supplied.
    double target_jitter = 0.0;
};

/// The node's Voronoi cell from its DT neighbours; halfspaces carry node ids.
geo::VoronoiCell cell_of(const MdtNodeState& s);

PeTarget make_pe_target(const geo::VoronoiCell& sender_cell, const Point& sender, const Point& receiver,
                        std::span<const std::uint8_t> secret, std::uint64_t seed, const PeOptions& opt = {},
                        const geo::VoronoiCell* receiver_cell = nullptr);

/// Parameter where the line enters the cell, clamped to ≥ 0 (the walk only
/// moves forward from the base point); nullopt when the line misses it.
std::optional<double> pe_entry_param(const geo::VoronoiCell& cell, const geo::DirectionLine& line);

struct PeDecision {
    enum class Kind { Deliver, Next, Fail };
    Kind kind = Kind::Fail;
    NodeId next = kNoNode;
    std::vector<NodeId> segment;
    std::size_t probes = 0;
    double exit_param = 0;
    Failure reason = Failure::None;
};

/// Where the line leaves `s`'s cell and the physical segment to that cell's
/// owner, without looking at balances. `next` is kNoNode on failure.
struct PeHop {
    NodeId next = kNoNode;
    std::vector<NodeId> segment;
    double exit_param = 0;
    Failure reason = Failure::None;
};
PeHop pe_next_hop(const MdtNodeState& s, const PeTarget& t, double entry_param, NodeId last_hop);

/// One WF-PE step. `expected` is the hash this node expects for the payment
/// when it is the receiver.
PeDecision forward_pe(const MdtNodeState& s, const ChannelGraph& g, const PeTarget& t, double entry_param,
                      NodeId last_hop, Amount amount, const std::optional<Digest>& expected = std::nullopt);

/// Static line walk from the sender toward the receiver's cell, then commit.
RouteResult route_pe(const Mdt& mdt, ChannelGraph& g, const Payment& p, std::span<const std::uint8_t> secret,
                     std::uint64_t seed, const PeOptions& pe = {}, const RouteOptions& opt = {});

/// The 32-byte secret a sender derives for a payment in simulation runs.
std::vector<std::uint8_t> payment_secret(const Payment& p, std::uint64_t seed);

}  // namespace pcn
