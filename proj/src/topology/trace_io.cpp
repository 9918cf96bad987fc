#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_set>

#include "pcn/error.hpp"
#include "pcn/topology.hpp"
#include "util/csv.hpp"

namespace pcn {
namespace {

constexpr std::string_view kTopologyHeader = "src,dst,balance_src_dst,balance_dst_src";
constexpr std::string_view kTransactionsHeader = "trans_id,sender,receiver,amount";

struct RawChannel {
    std::uint64_t a, b;
    Amount ab, ba;
};

std::vector<RawChannel> read_raw_channels(const std::filesystem::path& file) {
    std::vector<RawChannel> out;
    std::unordered_set<std::uint64_t> seen;
    csv::read(file, kTopologyHeader, [&](const auto& f, std::size_t line, const std::string& name) {
        if (f.size() != 4) throw ParseError(name, line, "expected 4 fields");
        RawChannel c{csv::parse_field<std::uint64_t>(f[0], name, line, "src"),
                     csv::parse_field<std::uint64_t>(f[1], name, line, "dst"),
                     csv::parse_field<Amount>(f[2], name, line, "balance_src_dst"),
                     csv::parse_field<Amount>(f[3], name, line, "balance_dst_src")};
        if (c.a == c.b) throw ParseError(name, line, "self-loop");
        if (c.a > 0xffffffffull || c.b > 0xffffffffull) throw ParseError(name, line, "node id too large");
        if (c.ab < 0 || c.ba < 0) throw ParseError(name, line, "negative balance");
        const std::uint64_t key = (std::min(c.a, c.b) << 32) | std::max(c.a, c.b);
        if (!seen.insert(key).second) throw ParseError(name, line, "duplicate channel");
        out.push_back(c);
    });
    return out;
}

}  // namespace

std::vector<Payment> read_transactions_csv(const std::filesystem::path& file) {
    std::vector<Payment> out;
    csv::read(file, kTransactionsHeader, [&](const auto& f, std::size_t line, const std::string& name) {
        if (f.size() != 4) throw ParseError(name, line, "expected 4 fields");
        Payment p;
        p.trans_id = csv::parse_field<std::uint64_t>(f[0], name, line, "trans_id");
        p.sender = csv::parse_field<NodeId>(f[1], name, line, "sender");
        p.receiver = csv::parse_field<NodeId>(f[2], name, line, "receiver");
        p.amount = csv::parse_field<Amount>(f[3], name, line, "amount");
        if (p.amount <= 0) throw ParseError(name, line, "amount must be positive");
        if (p.sender == p.receiver) throw ParseError(name, line, "sender equals receiver");
        out.push_back(p);
    });
    return out;
}

void write_transactions_csv(std::span<const Payment> payments, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << kTransactionsHeader << '\n';
    for (const auto& p : payments) out << p.trans_id << ',' << p.sender << ',' << p.receiver << ',' << p.amount << '\n';
}

void write_topology_csv(const ChannelGraph& g, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << kTopologyHeader << '\n';
    for (std::size_t i = 0; i < g.channel_slots(); ++i) {
        const Channel& c = g.channel(i);
        if (c.alive) out << c.a << ',' << c.b << ',' << c.ab << ',' << c.ba << '\n';
    }
}

ChannelGraph read_topology_csv(const std::filesystem::path& file) {
    const auto raw = read_raw_channels(file);
    std::uint64_t n = 0;
    for (const auto& c : raw) n = std::max({n, c.a + 1, c.b + 1});
    ChannelGraph g(n);
    for (const auto& c : raw)
        g.add_channel(static_cast<NodeId>(c.a), static_cast<NodeId>(c.b), c.ab, c.ba);
    return g;
}

TraceData load_trace(const std::filesystem::path& topology, const std::optional<std::filesystem::path>& transactions) {
    const auto raw = read_raw_channels(topology);

    // Dense ids over every mentioned node, in ascending file-id order.
    std::map<std::uint64_t, NodeId> dense;
    for (const auto& c : raw) {
        dense.emplace(c.a, 0);
        dense.emplace(c.b, 0);
    }
    std::vector<std::uint64_t> file_id;
    for (auto& [id, d] : dense) {
        d = static_cast<NodeId>(file_id.size());
        file_id.push_back(id);
    }

    ChannelGraph full(file_id.size());
    std::size_t removed_channels = 0;
    for (const auto& c : raw) {
        if (c.ab + c.ba == 0) {
            ++removed_channels;
            continue;
        }
        full.add_channel(dense[c.a], dense[c.b], c.ab, c.ba);
    }

    // Pruning a leaf can expose a new one, so iterate to a fixed point.
    std::vector<bool> removed(full.node_count(), false);
    std::vector<NodeId> queue;
    for (NodeId u = 0; u < full.node_count(); ++u)
        if (full.degree(u) <= 1) queue.push_back(u);
    while (!queue.empty()) {
        const NodeId u = queue.back();
        queue.pop_back();
        if (removed[u]) continue;
        removed[u] = true;
        for (NodeId v : full.neighbors(u)) {
            full.remove_channel(u, v);
            ++removed_channels;
            if (!removed[v] && full.degree(v) <= 1) queue.push_back(v);
        }
    }

    std::vector<NodeId> keep;
    for (NodeId u = 0; u < full.node_count(); ++u)
        if (!removed[u]) keep.push_back(u);
    Relabelled r = induced_subgraph(full, keep);

    TraceData out;
    out.graph = std::move(r.graph);
    out.removed_nodes = full.node_count() - keep.size();
    out.removed_channels = removed_channels;
    std::map<std::uint64_t, NodeId> final_id;
    for (NodeId i = 0; i < r.old_ids.size(); ++i) {
        out.old_ids.push_back(static_cast<NodeId>(file_id[r.old_ids[i]]));
        final_id.emplace(file_id[r.old_ids[i]], i);
    }
    if (transactions) {
        for (Payment p : read_transactions_csv(*transactions)) {
            const auto s = final_id.find(p.sender), t = final_id.find(p.receiver);
            if (s == final_id.end() || t == final_id.end()) {
                ++out.dropped_payments;
                continue;
            }
            p.sender = s->second;
            p.receiver = t->second;
            out.payments.push_back(p);
        }
    }
    return out;
}

}  // namespace pcn
