#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcn/mdt.hpp"
#include "pcn/rng.hpp"
#include "pcn/routing.hpp"
#include "pcn/topology.hpp"

namespace pcn::proto {

class ProtocolError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Wire format

enum class MsgType : std::uint8_t { Route = 0, RouteAck = 1, RouteNack = 2, Probe = 3, Commit = 4, CommitNack = 5 };
enum class Scheme : std::uint8_t { Mdt = 0, Pe = 1 };

std::string to_string(MsgType t);

struct Message {
    std::uint64_t trans_id = 0;
    MsgType type = MsgType::Route;
    Scheme scheme = Scheme::Mdt;
    /// Coordinate dimension d. The direction holds d values (MDT: a
    /// coordinate) or 2d values (PE: line base then unit direction).
    std::uint8_t dim = 0;
    std::vector<double> direction;
    std::uint64_t capacity = 0;
    std::uint64_t commit = 0;

    friend bool operator==(const Message&, const Message&) = default;
};

/// Bytes after the length field for a message with `values` direction entries.
inline constexpr std::size_t frame_body_size(std::size_t values) { return 8 + 1 + 1 + 8 * values + 8 + 8; }

/// [len u32][trans_id u64][type u8 = code<<1 | scheme][dim u8][direction f64…][capacity u64][commit u64],
/// little-endian; len counts the bytes after itself.
std::vector<std::uint8_t> encode(const Message& m);
/// Decodes exactly one frame. Throws ProtocolError on short input, trailing
/// bytes, a length mismatch or an unknown type code.
Message decode(std::span<const std::uint8_t> frame);

/// Transport metadata around a frame: which hop of which link it travels.
struct Envelope {
    NodeId from = kNoNode;
    NodeId to = kNoNode;
    NodeId link_src = kNoNode;  ///< overlay node that chose the current segment
    NodeId link_dst = kNoNode;  ///< overlay node at the end of the segment
    std::uint32_t hop = 0;      ///< recipient's position on the payment path (probes: the prober's)
    bool reverse = false;       ///< travelling back toward link_src / the sender
    Message msg;
};

inline constexpr std::size_t kEnvelopeHeader = 4 * 5 + 1;
std::vector<std::uint8_t> encode_envelope(const Envelope& e);
Envelope decode_envelope(std::span<const std::uint8_t> bytes);

/// Splits a byte stream into envelopes.
class EnvelopeReader {
public:
    void feed(std::span<const std::uint8_t> bytes);
    std::optional<Envelope> next();

private:
    std::vector<std::uint8_t> buf_;
};

// ---------------------------------------------------------------------------
// Node runtime

struct ActorOptions {
    std::size_t hop_budget = 64;
    PeOptions pe;
};

/// What an actor reports about a transaction; the runtime collects these.
struct TxEvent {
    enum class Kind { RouteFailed, Delivered, Completed, CommitFailed };
    std::uint64_t trans_id = 0;
    NodeId node = kNoNode;
    Kind kind = Kind::RouteFailed;
    Failure reason = Failure::None;
};

class NodeActor {
public:
    NodeActor(const MdtNodeState& state, const ChannelGraph& g, const ActorOptions& opt = {});

    NodeId id() const { return state_.id; }
    const MdtNodeState& state() const { return state_; }
    const ActorOptions& options() const { return opt_; }

    /// Sender side: starts routing toward the receiver's coordinate (MDT) or
    /// along the given line (PE).
    std::vector<Envelope> start_mdt(const Payment& p, const Point& receiver);
    std::vector<Envelope> start_pe(const Payment& p, const PeTarget& target);
    /// Receiver side: the hash of the secret shared with the sender.
    void expect(std::uint64_t trans_id, const Digest& secret_hash) { expected_[trans_id] = secret_hash; }
    /// Makes this node refuse to forward COMMIT for the transaction.
    void inject_commit_failure(std::uint64_t trans_id) { fail_commit_.push_back(trans_id); }

    /// First PROBE along `segment` (which starts at this node) for `route`'s commit.
    std::vector<Envelope> probe(std::uint64_t trans_id, std::uint32_t hop, const std::vector<NodeId>& segment,
                                const Message& route);

    std::vector<Envelope> handle(const Envelope& e);
    std::vector<Envelope> handle_route(const Envelope& e);
    std::vector<Envelope> handle_probe(const Envelope& e);
    std::vector<Envelope> handle_commit(const Envelope& e);

    /// ψ(self, v) and ψ(v, self) as this node sees them.
    Amount out_balance(NodeId v) const;
    Amount in_balance(NodeId v) const;
    std::size_t pending_count() const { return pending_.size(); }
    std::size_t dropped() const { return dropped_; }
    std::vector<TxEvent> take_events();

private:
    struct Pending {
        NodeId last = kNoNode;
        NodeId next = kNoNode;
        Amount amount = 0;
        Message route;
    };
    /// A decision node working through its candidate segments.
    struct Decision {
        std::vector<std::vector<NodeId>> segments;
        std::size_t tried = 0;
        Failure empty_reason = Failure::NoRoute;
    };
    using Key = std::pair<std::uint64_t, std::uint32_t>;

    std::vector<Envelope> start(const Message& route);
    std::vector<Envelope> decide(const Key& key, NodeId prev);
    std::vector<Envelope> try_next_segment(const Key& key);
    std::vector<Envelope> send_route(const Key& key, const std::vector<NodeId>& segment);
    std::vector<Envelope> fail_route(const Key& key, Failure reason);
    std::vector<Envelope> start_commit(const Key& key);
    NodeId link_next(NodeId link_src, NodeId link_dst, bool toward_dst, NodeId from) const;
    void transfer(NodeId from, NodeId to, Amount amount);
    void emit(std::uint64_t tid, TxEvent::Kind kind, Failure reason);
    std::vector<Envelope> drop(const Envelope& e, const char* why);

    MdtNodeState state_;
    ActorOptions opt_;
    std::map<NodeId, std::pair<Amount, Amount>> view_;  ///< v → (ψ(self,v), ψ(v,self))
    std::map<Key, Pending> pending_;
    std::map<Key, Decision> deciding_;
    std::map<std::uint64_t, Digest> expected_;
    std::vector<std::uint64_t> fail_commit_;
    std::vector<TxEvent> events_;
    std::size_t dropped_ = 0;
};

// ---------------------------------------------------------------------------
// Deterministic in-process transport

struct ProtoOutcome {
    bool success = false;
    Failure reason = Failure::None;
    std::vector<NodeId> path;  ///< sender, then every ROUTE recipient in order
    std::size_t probe_messages = 0;  ///< forward PROBE transmissions
    std::size_t messages = 0;
};

/// One actor per node, messages delivered one at a time. Delivery between a
/// fixed pair is FIFO; which pair goes next is drawn from the seed.
class DeterministicNetwork {
public:
    DeterministicNetwork(const Mdt& mdt, const ChannelGraph& g, std::uint64_t seed, const ActorOptions& opt = {});

    ProtoOutcome pay_mdt(const Payment& p);
    /// `pe_seed` as in the simulator's WF-PE router.
    ProtoOutcome pay_pe(const Payment& p, std::uint64_t pe_seed);

    NodeActor& actor(NodeId u) { return actors_.at(u); }
    /// Channel balances as the endpoint actors see them. Throws ProtocolError
    /// if the two ends of a channel disagree.
    ChannelGraph balances() const;
    std::size_t total_pending() const;

private:
    ProtoOutcome run(const Payment& p, std::vector<Envelope> first);
    void post(std::vector<Envelope> out);

    const Mdt& mdt_;
    ChannelGraph shape_;
    std::vector<NodeActor> actors_;
    Rng rng_;
    std::map<std::pair<NodeId, NodeId>, std::deque<Envelope>> queues_;
};

// ---------------------------------------------------------------------------
// Stream sockets

struct TcpDemoOptions {
    std::size_t nodes = 20;
    std::uint16_t base_port = 47000;
    Scheme scheme = Scheme::Mdt;
    std::size_t payments = 20;
    std::uint64_t seed = 0;
    double mean_degree = 6;
};

struct TcpDemoReport {
    std::size_t payments = 0;
    std::size_t succeeded = 0;
    std::size_t matches_sim = 0;  ///< outcomes identical to the in-memory engine
    Amount initial_total = 0;
    Amount final_total = 0;
    std::size_t messages = 0;
    bool balances_match = true;  ///< final balances equal the in-memory engine's
};

/// Runs one thread per node, each listening on 127.0.0.1:(base_port + id),
/// and replays a seeded workload over real sockets.
TcpDemoReport run_tcp_demo(const TcpDemoOptions& opt);

}  // namespace pcn::proto
