#include "pcn/mdt.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <unordered_map>

#include "pcn/geometry.hpp"

namespace pcn {
namespace {

bool is_active(const Mdt& mdt, NodeId u) { return u < mdt.size() && mdt[u].active; }

/// BFS over active nodes; parent[v] is the first discoverer, visiting
/// neighbours in ascending id order.
std::vector<NodeId> bfs_parents(const ChannelGraph& g, NodeId root, const std::vector<bool>& active) {
    std::vector<NodeId> parent(g.node_count(), kNoNode);
    std::queue<NodeId> q;
    parent[root] = root;
    q.push(root);
    while (!q.empty()) {
        const NodeId u = q.front();
        q.pop();
        for (NodeId v : g.neighbors(u))
            if (parent[v] == kNoNode && (active.empty() || active[v])) {
                parent[v] = u;
                q.push(v);
            }
    }
    return parent;
}

std::vector<NodeId> trace_back(const std::vector<NodeId>& parent, NodeId root, NodeId v) {
    if (parent[v] == kNoNode) return {};
    std::vector<NodeId> path{v};
    while (path.back() != root) path.push_back(parent[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<NodeId> reversed(std::vector<NodeId> p) {
    std::reverse(p.begin(), p.end());
    return p;
}

bool valid_path(const std::vector<NodeId>& p, NodeId from, NodeId to, const ChannelGraph& g, const Mdt& mdt) {
    if (p.size() < 2 || p.front() != from || p.back() != to) return false;
    std::set<NodeId> seen;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!is_active(mdt, p[i]) || !seen.insert(p[i]).second) return false;
        if (i + 1 < p.size() && !g.has_channel(p[i], p[i + 1])) return false;
    }
    return true;
}

/// The physical path u uses to reach neighbour w according to u's state.
std::vector<NodeId> link_of(const MdtNodeState& s, NodeId w) {
    if (s.direct.count(w)) return {s.id, w};
    const auto it = s.virtual_links.find(w);
    return it == s.virtual_links.end() ? std::vector<NodeId>{} : it->second;
}

std::vector<NodeId> concat(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
    std::vector<NodeId> out = a;
    out.insert(out.end(), b.begin() + 1, b.end());
    return remove_cycles(out);
}

std::vector<NodeId> local_dt(NodeId center, const Point& c, const std::map<NodeId, Point>& cand) {
    std::vector<Point> pts;
    std::vector<std::uint64_t> labels;
    std::vector<NodeId> ids;
    for (const auto& [id, p] : cand) {
        if (id == center) continue;
        ids.push_back(id);
        pts.push_back(p);
        labels.push_back(id);
    }
    if (ids.empty()) return {};
    std::vector<NodeId> out;
    for (auto i : geo::local_dt_neighbors(c, pts, center, labels)) out.push_back(ids[i]);
    std::sort(out.begin(), out.end());
    return out;
}

bool same_quantized(const Point& a, const Point& b) {
    for (int c = 0; c < a.dim(); ++c)
        if (std::llround(a[c] / geo::kQuantum) != std::llround(b[c] / geo::kQuantum)) return false;
    return true;
}

}  // namespace

std::size_t MdtNodeState::storage() const {
    std::size_t n = direct.size();
    for (const auto& [v, p] : dt)
        if (!direct.count(v)) ++n;
    return n;
}

std::vector<NodeId> remove_cycles(std::span<const NodeId> path) {
    std::vector<NodeId> out;
    std::unordered_map<NodeId, std::size_t> pos;
    for (NodeId v : path) {
        const auto it = pos.find(v);
        if (it != pos.end()) {
            for (std::size_t i = it->second + 1; i < out.size(); ++i) pos.erase(out[i]);
            out.resize(it->second + 1);
            continue;
        }
        pos[v] = out.size();
        out.push_back(v);
    }
    return out;
}

void rebuild_tables(Mdt& mdt) {
    for (auto& s : mdt) s.table.clear();
    for (const auto& s : mdt) {
        if (!s.active) continue;
        const NodeId u = s.id;
        for (const auto& [v, path] : s.virtual_links) {
            // Each undirected link is installed once, from its smaller end
            // unless only the larger end holds it.
            if (u > v && is_active(mdt, v) && mdt[v].virtual_links.count(u)) continue;
            if (path.size() < 3) continue;
            const NodeId src = std::min(u, v), dst = std::max(u, v);
            const std::vector<NodeId> p = u < v ? path : reversed(path);
            mdt[src].table.push_back({kNoNode, kNoNode, p[1], dst});
            mdt[dst].table.push_back({kNoNode, kNoNode, p[p.size() - 2], src});
            for (std::size_t i = 1; i + 1 < p.size(); ++i) mdt[p[i]].table.push_back({src, p[i - 1], p[i + 1], dst});
        }
    }
}

Mdt build_mdt(const ChannelGraph& g, std::span<const Point> coords, const std::vector<bool>& active) {
    const std::size_t n = g.node_count();
    if (coords.size() != n) throw std::invalid_argument("build_mdt: one coordinate per node required");
    if (!active.empty() && active.size() != n) throw std::invalid_argument("build_mdt: active mask size mismatch");
    Mdt mdt(n);
    std::vector<NodeId> ids;
    for (NodeId u = 0; u < n; ++u) {
        mdt[u].id = u;
        mdt[u].coord = coords[u];
        mdt[u].active = active.empty() || active[u];
        if (mdt[u].active) ids.push_back(u);
    }
    if (ids.empty()) return mdt;
    const int d = coords.front().dim();

    std::vector<std::vector<NodeId>> nbrs(n);
    if (ids.size() <= static_cast<std::size_t>(d) + 1) {
        for (NodeId u : ids)
            for (NodeId v : ids)
                if (u != v) nbrs[u].push_back(v);
    } else {
        std::vector<Point> pts;
        std::vector<std::uint64_t> labels;
        for (NodeId u : ids) {
            pts.push_back(coords[u]);
            labels.push_back(u);
        }
        const auto tri = geo::delaunay(pts, labels);
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (auto j : tri.neighbor_sets[i]) nbrs[ids[i]].push_back(ids[j]);
    }

    for (NodeId u : ids) {
        for (NodeId v : g.neighbors(u))
            if (mdt[v].active) mdt[u].direct.emplace(v, coords[v]);
        for (NodeId v : nbrs[u]) mdt[u].dt.emplace(v, coords[v]);
    }

    for (NodeId u : ids) {
        std::vector<NodeId> targets;
        for (NodeId v : nbrs[u])
            if (v > u && !g.has_channel(u, v)) targets.push_back(v);
        if (targets.empty()) continue;
        const auto parent = bfs_parents(g, u, active);
        for (NodeId v : targets) {
            auto path = trace_back(parent, u, v);
            if (path.empty())
                throw Error("no physical path between DT neighbours " + std::to_string(u) + " and " + std::to_string(v));
            mdt[v].virtual_links[u] = reversed(path);
            mdt[u].virtual_links[v] = std::move(path);
        }
    }
    rebuild_tables(mdt);
    return mdt;
}

std::vector<NodeId> greedy_walk(const Mdt& mdt, NodeId from, const Point& target) {
    std::vector<NodeId> path{from};
    NodeId u = from;
    for (std::size_t steps = 0; steps <= mdt.size(); ++steps) {
        const MdtNodeState& s = mdt[u];
        NodeId best = u;
        double best_d = dist2(s.coord, target);
        auto consider = [&](NodeId w, const Point& p) {
            if (!is_active(mdt, w)) return;
            const double dw = dist2(p, target);
            if (dw < best_d || (dw == best_d && best != u && w < best)) {
                best = w;
                best_d = dw;
            }
        };
        for (const auto& [w, p] : s.direct) consider(w, p);
        for (const auto& [w, p] : s.dt) consider(w, p);
        if (best == u) break;
        const auto seg = link_of(s, best);
        if (seg.empty()) break;
        path.insert(path.end(), seg.begin() + 1, seg.end());
        u = best;
    }
    return remove_cycles(path);
}

JoinReport join(Mdt& mdt, const ChannelGraph& g, NodeId node, std::span<const NodeId> direct, CoordAuthority& auth,
                std::optional<Point> coord_override) {
    if (!auth.ca) throw std::invalid_argument("join: no coordinate authority");
    CoordinateAssignment& ca = *auth.ca;
    if (node < mdt.size() && mdt[node].active) throw std::invalid_argument("join: node already present");
    if (mdt.size() <= node) {
        const std::size_t old = mdt.size();
        mdt.resize(node + 1);
        for (std::size_t i = old; i < mdt.size(); ++i) {
            mdt[i].id = static_cast<NodeId>(i);
            mdt[i].active = false;
        }
    }
    if (ca.coords.size() <= node) {
        ca.coords.resize(node + 1, Point(ca.dim));
        ca.node_anchor_hops.resize(node + 1);
    }

    std::vector<NodeId> live;
    for (NodeId c : direct)
        if (c != node && is_active(mdt, c) && g.has_channel(node, c)) live.push_back(c);
    std::sort(live.begin(), live.end());
    live.erase(std::unique(live.begin(), live.end()), live.end());
    if (live.empty()) throw Error("join: node " + std::to_string(node) + " has no functioning neighbour");

    std::vector<std::vector<std::uint32_t>> reports;
    for (NodeId c : live) reports.push_back(ca.node_anchor_hops.at(c));
    const auto hops = join_hops(reports);
    Point coord = coord_override ? *coord_override : coordinate_for(ca, node, hops, auth.cfg, auth.seed);

    JoinReport report;
    const auto walk = greedy_walk(mdt, live.front(), coord);
    const NodeId closest = walk.back();
    report.closest = closest;
    if (same_quantized(coord, mdt[closest].coord)) {
        // Coincident with an existing node: shift by a few grid steps in a
        // direction fixed by the node id so the tie-break stays deterministic.
        Rng rng = make_rng(auth.seed, "join.nudge", node);
        for (int c = 0; c < coord.dim(); ++c) coord[c] += (rng() & 1 ? 1.0 : -1.0) * 1e-6;
    }
    ca.coords[node] = coord;
    ca.node_anchor_hops[node] = hops;
    report.coord = coord;

    // Candidate set with a physical path from `node` to each candidate.
    std::map<NodeId, std::vector<NodeId>> paths;
    std::map<NodeId, Point> cand;
    auto offer = [&](NodeId m, std::vector<NodeId> p) {
        if (m == node || !is_active(mdt, m) || p.size() < 2 || p.back() != m) return;
        auto it = paths.find(m);
        if (it == paths.end()) {
            paths.emplace(m, std::move(p));
            cand.emplace(m, mdt[m].coord);
        } else if (p.size() < it->second.size()) {
            it->second = std::move(p);
        }
    };
    for (NodeId c : live) offer(c, {node, c});
    {
        std::vector<NodeId> p{node};
        p.insert(p.end(), walk.begin(), walk.end());
        offer(closest, remove_cycles(p));
    }

    std::set<NodeId> queried;
    std::vector<NodeId> mine;
    while (true) {
        mine = local_dt(node, coord, cand);
        std::vector<NodeId> pending;
        for (NodeId v : mine)
            if (!queried.count(v)) pending.push_back(v);
        if (pending.empty()) break;
        for (NodeId v : pending) {
            queried.insert(v);
            ++report.neighbor_queries;
            const MdtNodeState& sv = mdt[v];
            const std::vector<NodeId> to_v = paths.at(v);
            for (const auto& [m, p] : sv.dt) {
                const auto seg = link_of(sv, m);
                if (!seg.empty()) offer(m, concat(to_v, seg));
            }
        }
    }

    MdtNodeState& me = mdt[node];
    me = MdtNodeState{};
    me.id = node;
    me.active = true;
    me.coord = coord;
    for (NodeId c : g.neighbors(node))
        if (is_active(mdt, c)) me.direct.emplace(c, mdt[c].coord);
    for (NodeId v : mine) {
        me.dt.emplace(v, mdt[v].coord);
        if (!me.direct.count(v)) me.virtual_links[v] = paths.at(v);
    }
    for (const auto& [c, p] : me.direct) mdt[c].direct[node] = coord;

    // Only nodes in the new star can lose or gain DT neighbours.
    for (NodeId x : mine) {
        MdtNodeState& sx = mdt[x];
        std::map<NodeId, Point> cands = sx.dt;
        for (const auto& [c, p] : sx.direct) cands.emplace(c, p);
        cands.emplace(node, coord);
        const auto now = local_dt(x, sx.coord, cands);
        std::map<NodeId, Point> next;
        for (NodeId y : now) next.emplace(y, cands.at(y));
        for (const auto& [y, p] : sx.dt)
            if (!next.count(y)) sx.virtual_links.erase(y);
        sx.dt = std::move(next);
        if (sx.dt.count(node) && !sx.direct.count(node)) sx.virtual_links[node] = reversed(me.virtual_links.at(x));
    }
    rebuild_tables(mdt);
    return report;
}

void depart(Mdt& mdt, NodeId node) {
    if (node < mdt.size()) mdt[node].active = false;
}

MaintenanceReport maintenance_round(Mdt& mdt, const ChannelGraph& g) {
    const Mdt snap = mdt;
    MaintenanceReport report;

    // Who lists u as a neighbour: those nodes push their sets to u as well.
    std::vector<std::set<NodeId>> senders(snap.size());
    for (const auto& s : snap) {
        if (!s.active) continue;
        for (const auto& [v, p] : s.dt)
            if (v < snap.size()) senders[v].insert(s.id);
        for (const auto& [v, p] : s.direct)
            if (v < snap.size()) senders[v].insert(s.id);
    }

    for (const auto& old : snap) {
        if (!old.active) continue;
        const NodeId u = old.id;
        MdtNodeState& s = mdt[u];

        std::map<NodeId, Point> direct;
        for (NodeId v : g.neighbors(u))
            if (is_active(snap, v)) direct.emplace(v, snap[v].coord);

        // Contacts include departed DT neighbours: their last advertised
        // neighbour set is still cached from the previous exchange.
        std::set<NodeId> contacts(senders[u].begin(), senders[u].end());
        for (const auto& [v, p] : direct) contacts.insert(v);
        for (const auto& [v, p] : old.dt) contacts.insert(v);
        for (const auto& [v, p] : old.direct) contacts.insert(v);

        std::map<NodeId, Point> cand;
        for (NodeId w : contacts) {
            if (is_active(snap, w)) cand.emplace(w, snap[w].coord);
            ++report.messages;
            for (const auto& [m, p] : snap[w].dt)
                if (m != u && is_active(snap, m)) cand.emplace(m, snap[m].coord);
        }
        for (const auto& [v, p] : direct) cand.emplace(v, p);

        const auto now = local_dt(u, old.coord, cand);
        std::map<NodeId, Point> dt;
        for (NodeId y : now) dt.emplace(y, cand.at(y));

        std::map<NodeId, std::vector<NodeId>> links;
        for (const auto& [y, p] : dt) {
            if (direct.count(y)) continue;
            const auto kept = old.virtual_links.find(y);
            if (kept != old.virtual_links.end() && valid_path(kept->second, u, y, g, snap)) {
                links[y] = kept->second;
                continue;
            }
            // Splice our link to a contact with the contact's link to y.
            std::vector<NodeId> best;
            for (NodeId w : contacts) {
                if (!is_active(snap, w) || w == y) continue;
                std::vector<NodeId> first = direct.count(w) ? std::vector<NodeId>{u, w} : link_of(old, w);
                if (!valid_path(first, u, w, g, snap)) continue;
                std::vector<NodeId> second = g.has_channel(w, y) ? std::vector<NodeId>{w, y} : link_of(snap[w], y);
                if (!valid_path(second, w, y, g, snap)) continue;
                auto p2 = concat(first, second);
                if (valid_path(p2, u, y, g, snap) && (best.empty() || p2.size() < best.size())) best = std::move(p2);
            }
            if (best.empty()) {
                // Nobody nearby holds a usable route: fall back to an
                // expanding search over the channel graph.
                std::vector<bool> alive(g.node_count(), false);
                for (NodeId v = 0; v < g.node_count() && v < snap.size(); ++v) alive[v] = snap[v].active;
                best = trace_back(bfs_parents(g, u, alive), u, y);
                report.messages += g.node_count();
            }
            if (!best.empty()) links[y] = std::move(best);
        }

        if (direct != old.direct || dt != old.dt || links != old.virtual_links) ++report.changed_nodes;
        s.direct = std::move(direct);
        s.dt = std::move(dt);
        s.virtual_links = std::move(links);
    }

    // Both ends of a link agree on the smaller end's path.
    for (auto& s : mdt) {
        if (!s.active) continue;
        for (auto& [v, path] : s.virtual_links)
            if (v < s.id && is_active(mdt, v)) {
                const auto it = mdt[v].virtual_links.find(s.id);
                if (it != mdt[v].virtual_links.end()) path = reversed(it->second);
            }
    }
    rebuild_tables(mdt);
    return report;
}

std::vector<std::string> mdt_violations(const Mdt& mdt, const ChannelGraph& g) {
    std::vector<std::string> out;
    auto name = [](NodeId u) { return std::to_string(u); };
    for (const auto& s : mdt) {
        if (!s.active) continue;
        const NodeId u = s.id;
        for (NodeId v : g.neighbors(u))
            if (is_active(mdt, v) && !s.direct.count(v)) out.push_back(name(u) + ": channel to " + name(v) + " missing from C_u");
        for (const auto& [v, p] : s.direct)
            if (!g.has_channel(u, v)) out.push_back(name(u) + ": C_u lists " + name(v) + " without a channel");
        for (const auto& [v, p] : s.dt) {
            if (!is_active(mdt, v)) {
                out.push_back(name(u) + ": DT neighbour " + name(v) + " is gone");
                continue;
            }
            if (!mdt[v].dt.count(u)) out.push_back(name(u) + ": DT adjacency to " + name(v) + " not symmetric");
            if (s.direct.count(v)) continue;
            const auto it = s.virtual_links.find(v);
            if (it == s.virtual_links.end() || !valid_path(it->second, u, v, g, mdt))
                out.push_back(name(u) + ": no valid virtual link to " + name(v));
        }
        for (const auto& e : s.table) {
            if (e.succ != kNoNode && !g.has_channel(u, e.succ))
                out.push_back(name(u) + ": forwarding successor " + name(e.succ) + " is not a direct neighbour");
            if (e.pred != kNoNode && !g.has_channel(u, e.pred))
                out.push_back(name(u) + ": forwarding predecessor " + name(e.pred) + " is not a direct neighbour");
        }
    }
    return out;
}

nlohmann::json to_json(const Mdt& mdt) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : mdt) {
        if (!s.active) continue;
        nlohmann::json coord = nlohmann::json::array();
        for (int c = 0; c < s.coord.dim(); ++c) coord.push_back(s.coord[c]);
        nlohmann::json c_u = nlohmann::json::array(), n_u = nlohmann::json::array();
        for (const auto& [v, p] : s.direct) c_u.push_back(v);
        for (const auto& [v, p] : s.dt) n_u.push_back(v);
        nlohmann::json links = nlohmann::json::object();
        for (const auto& [v, p] : s.virtual_links) links[std::to_string(v)] = p;
        arr.push_back({{"node", s.id}, {"coord", coord}, {"C_u", c_u}, {"N_u", n_u}, {"virtual_links", links}});
    }
    return arr;
}

}  // namespace pcn
