#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pcn/rng.hpp"

namespace pcn {

using NodeId = std::uint32_t;
/// Currency in integer minor units (cents, satoshi).
using Amount = std::int64_t;

inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

struct Channel {
    NodeId a = 0, b = 0;
    Amount ab = 0;  ///< spendable from a toward b
    Amount ba = 0;  ///< spendable from b toward a
    bool alive = true;

    NodeId other(NodeId u) const noexcept { return u == a ? b : a; }
};

struct Incidence {
    NodeId neighbor;
    std::size_t channel;
};

struct Payment {
    std::uint64_t trans_id = 0;
    NodeId sender = 0;
    NodeId receiver = 0;
    Amount amount = 0;
    std::optional<std::uint64_t> sub_index;
};

/// Undirected multigraph-free channel graph with per-direction balances.
/// Node ids are dense; removing a node only drops its channels.
class ChannelGraph {
public:
    ChannelGraph() = default;
    explicit ChannelGraph(std::size_t n) : adj_(n) {}

    std::size_t node_count() const noexcept { return adj_.size(); }
    std::size_t channel_count() const noexcept { return live_channels_; }
    /// Channel slots including removed ones; indices are stable.
    std::size_t channel_slots() const noexcept { return channels_.size(); }

    std::size_t add_channel(NodeId a, NodeId b, Amount ab = 0, Amount ba = 0);
    void remove_channel(NodeId a, NodeId b);
    void remove_node(NodeId u);

    const Channel& channel(std::size_t i) const { return channels_.at(i); }
    Channel& channel(std::size_t i) { return channels_.at(i); }
    const std::vector<Incidence>& incident(NodeId u) const { return adj_.at(u); }
    std::size_t degree(NodeId u) const { return adj_.at(u).size(); }
    std::vector<NodeId> neighbors(NodeId u) const;

    std::optional<std::size_t> find_channel(NodeId u, NodeId v) const;
    bool has_channel(NodeId u, NodeId v) const { return find_channel(u, v).has_value(); }

    /// Directed balance ψ_uv; throws if there is no channel.
    Amount balance(NodeId u, NodeId v) const;
    void set_balance(NodeId u, NodeId v, Amount amount);
    /// ψ_uv -= ω, ψ_vu += ω. Throws if the channel is missing or ψ_uv < ω.
    void transfer(NodeId u, NodeId v, Amount amount);

    Amount total_balance() const;
    bool is_connected() const;
    /// Connected component ids per node, numbered from 0 in order of first node.
    std::vector<std::uint32_t> components() const;

private:
    static std::uint64_t key(NodeId a, NodeId b) noexcept {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(a) << 32) | b;
    }

    std::vector<Channel> channels_;
    std::vector<std::vector<Incidence>> adj_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
    std::size_t live_channels_ = 0;
};

/// Sub-graph induced by `keep` (sorted or not), relabelled densely in
/// ascending id order. `old_ids[new] = old`.
struct Relabelled {
    ChannelGraph graph;
    std::vector<NodeId> old_ids;
};
Relabelled induced_subgraph(const ChannelGraph& g, std::span<const NodeId> keep);
Relabelled largest_component(const ChannelGraph& g);

struct CapacityDist {
    enum class Kind { Constant, Uniform, LogNormal };
    Kind kind = Kind::Constant;
    Amount value = 0;          ///< Constant
    Amount min = 0, max = 0;   ///< Uniform, inclusive
    double median = 0, sigma = 0;  ///< LogNormal

    Amount sample(Rng& rng) const;
    static CapacityDist constant(Amount v);
    static CapacityDist uniform(Amount lo, Amount hi);
    static CapacityDist lognormal(double median, double sigma);
};

enum class BalancePolicy { EvenSplit, Trace };

/// `EvenSplit` samples a capacity per channel and gives each side half (an odd
/// unit goes to the ψ_ba side). `Trace` installs `trace[i]` as (ψ_ab, ψ_ba) for
/// channel slot i and throws if any live slot lacks data.
void assign_balances(ChannelGraph& g, BalancePolicy policy, const CapacityDist& dist, std::uint64_t seed,
                     std::span<const std::pair<Amount, Amount>> trace = {});

ChannelGraph gen_waxman(std::size_t n, double alpha, double beta, std::uint64_t seed,
                        const CapacityDist& dist = CapacityDist::constant(0));
/// β that makes the expected mean degree of gen_waxman(n, alpha, β, seed)
/// equal `target_degree`, capped at 1.
double waxman_beta_for_degree(std::size_t n, double alpha, double target_degree, std::uint64_t seed);
/// Node positions used by gen_waxman for the given (n, seed).
std::vector<std::pair<double, double>> waxman_positions(std::size_t n, std::uint64_t seed);

/// Barabási–Albert graph grown from an (m+1)-clique.
ChannelGraph gen_scale_free(std::size_t n, std::size_t m, std::uint64_t seed,
                            const CapacityDist& dist = CapacityDist::constant(0));
/// Uniform-ish random k-regular simple graph (stub matching with restarts).
ChannelGraph gen_random_regular(std::size_t n, std::size_t k, std::uint64_t seed,
                                const CapacityDist& dist = CapacityDist::constant(0));
/// rows×cols 4-neighbour grid; node id = r*cols + c.
ChannelGraph gen_grid(std::size_t rows, std::size_t cols, const CapacityDist& dist = CapacityDist::constant(0),
                      std::uint64_t seed = 0);

struct GeneratorConfig {
    std::string model = "waxman";  ///< waxman | scalefree | regular | grid
    std::size_t n = 100;
    double alpha = 0.4, beta = 0.4;
    std::optional<double> mean_degree;  ///< waxman: overrides beta
    std::size_t m = 2;                  ///< scalefree edges per node; regular degree
    std::size_t rows = 0, cols = 0;     ///< grid
    CapacityDist capacity = CapacityDist::uniform(1000, 100000);
    std::uint64_t seed = 0;
};
GeneratorConfig generator_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorConfig& c);
CapacityDist capacity_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CapacityDist& c);
ChannelGraph generate(const GeneratorConfig& c);

struct TraceData {
    ChannelGraph graph;
    std::vector<Payment> payments;
    std::vector<NodeId> old_ids;  ///< file id of each dense node id
    std::size_t dropped_payments = 0;
    std::size_t removed_nodes = 0;
    std::size_t removed_channels = 0;
};

/// Reads a topology CSV (and optionally a transactions CSV), drops zero-fund
/// channels, prunes degree ≤ 1 nodes to a fixed point and relabels densely.
TraceData load_trace(const std::filesystem::path& topology,
                     const std::optional<std::filesystem::path>& transactions = std::nullopt);
/// Reads a topology CSV verbatim: ids must already be dense 0..N-1.
ChannelGraph read_topology_csv(const std::filesystem::path& file);
void write_topology_csv(const ChannelGraph& g, const std::filesystem::path& file);
std::vector<Payment> read_transactions_csv(const std::filesystem::path& file);
void write_transactions_csv(std::span<const Payment> payments, const std::filesystem::path& file);

}  // namespace pcn
