#include <algorithm>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

#include "pcn/error.hpp"
#include "pcn/topology.hpp"

namespace pcn {

std::size_t ChannelGraph::add_channel(NodeId a, NodeId b, Amount ab, Amount ba) {
    if (a == b) throw std::invalid_argument("self-loop channel at node " + std::to_string(a));
    if (a >= adj_.size() || b >= adj_.size()) throw std::invalid_argument("channel endpoint out of range");
    if (ab < 0 || ba < 0) throw std::invalid_argument("negative channel balance");
    const auto k = key(a, b);
    if (index_.count(k))
        throw std::invalid_argument("duplicate channel " + std::to_string(a) + "-" + std::to_string(b));
    const std::size_t id = channels_.size();
    channels_.push_back({a, b, ab, ba, true});
    index_.emplace(k, id);
    adj_[a].push_back({b, id});
    adj_[b].push_back({a, id});
    ++live_channels_;
    return id;
}

void ChannelGraph::remove_channel(NodeId a, NodeId b) {
    const auto it = index_.find(key(a, b));
    if (it == index_.end()) return;
    const std::size_t id = it->second;
    index_.erase(it);
    channels_[id].alive = false;
    auto drop = [&](NodeId u) {
        auto& v = adj_[u];
        v.erase(std::remove_if(v.begin(), v.end(), [&](const Incidence& x) { return x.channel == id; }), v.end());
    };
    drop(a);
    drop(b);
    --live_channels_;
}

void ChannelGraph::remove_node(NodeId u) {
    for (NodeId v : neighbors(u)) remove_channel(u, v);
}

std::vector<NodeId> ChannelGraph::neighbors(NodeId u) const {
    std::vector<NodeId> out;
    out.reserve(adj_.at(u).size());
    for (const auto& inc : adj_[u]) out.push_back(inc.neighbor);
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<std::size_t> ChannelGraph::find_channel(NodeId u, NodeId v) const {
    const auto it = index_.find(key(u, v));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Amount ChannelGraph::balance(NodeId u, NodeId v) const {
    const auto c = find_channel(u, v);
    if (!c) throw std::invalid_argument("no channel " + std::to_string(u) + "-" + std::to_string(v));
    const Channel& ch = channels_[*c];
    return ch.a == u ? ch.ab : ch.ba;
}

void ChannelGraph::set_balance(NodeId u, NodeId v, Amount amount) {
    if (amount < 0) throw std::invalid_argument("negative balance");
    const auto c = find_channel(u, v);
    if (!c) throw std::invalid_argument("no channel " + std::to_string(u) + "-" + std::to_string(v));
    Channel& ch = channels_[*c];
    (ch.a == u ? ch.ab : ch.ba) = amount;
}

void ChannelGraph::transfer(NodeId u, NodeId v, Amount amount) {
    const auto c = find_channel(u, v);
    if (!c) throw std::invalid_argument("no channel " + std::to_string(u) + "-" + std::to_string(v));
    Channel& ch = channels_[*c];
    Amount& out = ch.a == u ? ch.ab : ch.ba;
    Amount& in = ch.a == u ? ch.ba : ch.ab;
    if (amount < 0 || out < amount) throw Error("insufficient balance on " + std::to_string(u) + "->" + std::to_string(v));
    out -= amount;
    in += amount;
}

Amount ChannelGraph::total_balance() const {
    Amount s = 0;
    for (const Channel& c : channels_)
        if (c.alive) s += c.ab + c.ba;
    return s;
}

std::vector<std::uint32_t> ChannelGraph::components() const {
    constexpr auto kUnset = static_cast<std::uint32_t>(-1);
    std::vector<std::uint32_t> comp(adj_.size(), kUnset);
    std::uint32_t next = 0;
    std::vector<NodeId> stack;
    for (NodeId s = 0; s < adj_.size(); ++s) {
        if (comp[s] != kUnset) continue;
        comp[s] = next;
        stack.push_back(s);
        while (!stack.empty()) {
            const NodeId u = stack.back();
            stack.pop_back();
            for (const auto& inc : adj_[u])
                if (comp[inc.neighbor] == kUnset) {
                    comp[inc.neighbor] = next;
                    stack.push_back(inc.neighbor);
                }
        }
        ++next;
    }
    return comp;
}

bool ChannelGraph::is_connected() const {
    const auto comp = components();
    return std::all_of(comp.begin(), comp.end(), [](std::uint32_t c) { return c == 0; });
}

Relabelled induced_subgraph(const ChannelGraph& g, std::span<const NodeId> keep) {
    Relabelled r;
    r.old_ids.assign(keep.begin(), keep.end());
    std::sort(r.old_ids.begin(), r.old_ids.end());
    r.old_ids.erase(std::unique(r.old_ids.begin(), r.old_ids.end()), r.old_ids.end());
    std::vector<NodeId> fresh(g.node_count(), kNoNode);
    for (NodeId i = 0; i < r.old_ids.size(); ++i) fresh[r.old_ids[i]] = i;
    r.graph = ChannelGraph(r.old_ids.size());
    for (std::size_t i = 0; i < g.channel_slots(); ++i) {
        const Channel& c = g.channel(i);
        if (!c.alive || fresh[c.a] == kNoNode || fresh[c.b] == kNoNode) continue;
        r.graph.add_channel(fresh[c.a], fresh[c.b], c.ab, c.ba);
    }
    return r;
}

Relabelled largest_component(const ChannelGraph& g) {
    const auto comp = g.components();
    if (comp.empty()) return {};
    std::vector<std::size_t> size(*std::max_element(comp.begin(), comp.end()) + 1, 0);
    for (auto c : comp) ++size[c];
    const auto best = static_cast<std::uint32_t>(std::max_element(size.begin(), size.end()) - size.begin());
    std::vector<NodeId> keep;
    for (NodeId u = 0; u < comp.size(); ++u)
        if (comp[u] == best) keep.push_back(u);
    return induced_subgraph(g, keep);
}

}  // namespace pcn
