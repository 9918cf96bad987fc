#include "pcn/baselines.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

#include "pcn/coords.hpp"

namespace pcn {
namespace {

std::vector<NodeId> bfs_tree(const ChannelGraph& g, NodeId root) {
    std::vector<NodeId> parent(g.node_count(), kNoNode);
    std::queue<NodeId> q;
    parent[root] = root;
    q.push(root);
    while (!q.empty()) {
        const NodeId u = q.front();
        q.pop();
        for (NodeId v : g.neighbors(u))
            if (parent[v] == kNoNode) {
                parent[v] = u;
                q.push(v);
            }
    }
    return parent;
}

std::vector<NodeId> up_path(const std::vector<NodeId>& parent, NodeId v) {
    std::vector<NodeId> p{v};
    while (parent[p.back()] != p.back()) p.push_back(parent[p.back()]);
    return p;
}

RouteResult probe_and_commit(ChannelGraph& g, std::vector<NodeId> path, Amount amount) {
    RouteResult r;
    if (path.size() < 2) {
        r.reason = Failure::NoRoute;
        return r;
    }
    r.probe_messages = path.size() - 1;
    r.path = std::move(path);
    if (bottleneck(g, r.path) < amount) {
        r.reason = Failure::Insufficient;
        return r;
    }
    if (!commit_path(g, r.path, amount)) {
        r.reason = Failure::CommitFailed;
        return r;
    }
    r.success = true;
    r.delivered = amount;
    return r;
}

void check_payment(const ChannelGraph& g, const Payment& p) {
    if (p.sender >= g.node_count() || p.receiver >= g.node_count() || p.sender == p.receiver || p.amount <= 0)
        throw std::invalid_argument("invalid payment");
}

}  // namespace

std::vector<NodeId> shortest_path(const ChannelGraph& g, NodeId from, NodeId to) {
    const auto parent = bfs_tree(g, from);
    if (parent[to] == kNoNode) return {};
    auto p = up_path(parent, to);
    std::reverse(p.begin(), p.end());
    return p;
}

RouteResult route_shortest_path(ChannelGraph& g, const Payment& p) {
    check_payment(g, p);
    return probe_and_commit(g, shortest_path(g, p.sender, p.receiver), p.amount);
}

LandmarkState build_landmarks(const ChannelGraph& g, std::size_t count) {
    if (count == 0 || count > g.node_count()) throw std::invalid_argument("build_landmarks: bad landmark count");
    std::vector<NodeId> order(g.node_count());
    for (NodeId u = 0; u < order.size(); ++u) order[u] = u;
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return g.degree(a) > g.degree(b); });
    LandmarkState st;
    st.landmarks.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
    for (NodeId l : st.landmarks) {
        st.parent.push_back(bfs_tree(g, l));
        st.depth.push_back(bfs_hops(g, l));
    }
    return st;
}

std::vector<NodeId> landmark_path(const LandmarkState& st, NodeId s, NodeId r, std::size_t* chosen) {
    std::size_t best = st.landmarks.size();
    std::uint64_t best_len = kUnreachable;
    for (std::size_t i = 0; i < st.landmarks.size(); ++i) {
        if (st.depth[i][s] == kUnreachable || st.depth[i][r] == kUnreachable) continue;
        const std::uint64_t len = std::uint64_t{st.depth[i][s]} + st.depth[i][r];
        if (len < best_len) {
            best_len = len;
            best = i;
        }
    }
    if (chosen) *chosen = best;
    if (best == st.landmarks.size()) return {};
    auto path = up_path(st.parent[best], s);
    auto down = up_path(st.parent[best], r);
    path.insert(path.end(), down.rbegin() + 1, down.rend());
    return path;
}

RouteResult route_landmark(const LandmarkState& st, ChannelGraph& g, const Payment& p) {
    check_payment(g, p);
    return probe_and_commit(g, landmark_path(st, p.sender, p.receiver), p.amount);
}

TreeEmbedding build_embedding(const ChannelGraph& g, std::size_t count) {
    TreeEmbedding emb;
    emb.trees = build_landmarks(g, count);
    const std::size_t n = g.node_count();
    for (std::size_t t = 0; t < emb.trees.landmarks.size(); ++t) {
        const auto& parent = emb.trees.parent[t];
        const auto& depth = emb.trees.depth[t];
        std::vector<std::vector<NodeId>> children(n);
        for (NodeId v = 0; v < n; ++v)
            if (parent[v] != kNoNode && parent[v] != v) children[parent[v]].push_back(v);
        std::vector<std::vector<std::uint32_t>> prefix(n);
        // Parents precede children in depth order.
        std::vector<NodeId> order;
        for (NodeId v = 0; v < n; ++v)
            if (depth[v] != kUnreachable) order.push_back(v);
        std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return depth[a] < depth[b]; });
        for (NodeId u : order)
            for (std::uint32_t i = 0; i < children[u].size(); ++i) {
                prefix[children[u][i]] = prefix[u];
                prefix[children[u][i]].push_back(i);
            }
        emb.prefix.push_back(std::move(prefix));
    }
    return emb;
}

std::uint32_t TreeEmbedding::distance(NodeId a, NodeId b) const {
    std::uint32_t best = kUnreachable;
    for (std::size_t t = 0; t < prefix.size(); ++t) {
        if (trees.depth[t][a] == kUnreachable || trees.depth[t][b] == kUnreachable) continue;
        const auto& pa = prefix[t][a];
        const auto& pb = prefix[t][b];
        const auto common = static_cast<std::uint32_t>(
            std::mismatch(pa.begin(), pa.end(), pb.begin(), pb.end()).first - pa.begin());
        best = std::min(best, static_cast<std::uint32_t>(pa.size() + pb.size()) - 2 * common);
    }
    return best;
}

RouteResult route_embedding(const TreeEmbedding& emb, ChannelGraph& g, const Payment& p) {
    check_payment(g, p);
    RouteResult r;
    r.path = {p.sender};
    NodeId u = p.sender;
    std::uint32_t du = emb.distance(u, p.receiver);
    if (du == kUnreachable) {
        r.reason = Failure::NoRoute;
        return r;
    }
    while (u != p.receiver) {
        NodeId best = kNoNode;
        std::uint32_t best_d = du;
        bool closer_exists = false;
        for (NodeId v : g.neighbors(u)) {
            const auto dv = emb.distance(v, p.receiver);
            if (dv >= du) continue;
            closer_exists = true;
            if (g.balance(u, v) < p.amount) continue;
            if (dv < best_d) {
                best_d = dv;
                best = v;
            }
        }
        if (best == kNoNode) {
            r.reason = closer_exists ? Failure::Insufficient : Failure::NoRoute;
            return r;
        }
        ++r.probe_messages;
        r.path.push_back(best);
        u = best;
        du = best_d;
    }
    if (!commit_path(g, r.path, p.amount)) {
        r.reason = Failure::CommitFailed;
        return r;
    }
    r.success = true;
    r.delivered = p.amount;
    return r;
}

double storage_shortest_path(const ChannelGraph& g) {
    return static_cast<double>(g.node_count() + g.channel_count());
}

double storage_landmark(const LandmarkState& st, const ChannelGraph& g) {
    if (g.node_count() == 0) return 0;
    double total = 0;
    for (NodeId u = 0; u < g.node_count(); ++u) {
        if (std::find(st.landmarks.begin(), st.landmarks.end(), u) != st.landmarks.end()) {
            total += static_cast<double>(g.node_count());
            continue;
        }
        for (const auto& d : st.depth)
            if (d[u] != kUnreachable) total += d[u];
    }
    return total / static_cast<double>(g.node_count());
}

double storage_embedding(const TreeEmbedding& emb) {
    if (emb.prefix.empty() || emb.prefix.front().empty()) return 0;
    const std::size_t n = emb.prefix.front().size();
    double total = 0;
    for (const auto& tree : emb.prefix)
        for (const auto& p : tree) total += static_cast<double>(p.size());
    return total / static_cast<double>(n);
}

double storage_mdt(const Mdt& mdt) {
    double total = 0;
    std::size_t n = 0;
    for (const auto& s : mdt)
        if (s.active) {
            total += static_cast<double>(s.storage());
            ++n;
        }
    return n ? total / static_cast<double>(n) : 0.0;
}

}  // namespace pcn
