#include "pcn/routing.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "pcn/coords.hpp"

namespace pcn {

std::string_view to_string(Failure f) {
    switch (f) {
        case Failure::None: return "none";
        case Failure::NoRoute: return "no-route";
        case Failure::Insufficient: return "insufficient";
        case Failure::LoopGuard: return "loop-guard";
        case Failure::LineExited: return "line-exited";
        case Failure::CommitFailed: return "commit-failed";
        case Failure::PartFailed: return "part-failed";
    }
    return "unknown";
}

Failure failure_from_string(std::string_view s) {
    for (Failure f : {Failure::None, Failure::NoRoute, Failure::Insufficient, Failure::LoopGuard, Failure::LineExited,
                      Failure::CommitFailed, Failure::PartFailed})
        if (to_string(f) == s) return f;
    throw std::invalid_argument("unknown failure reason: " + std::string(s));
}

bool commit_path(ChannelGraph& g, std::span<const NodeId> path, Amount amount) {
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const auto c = g.find_channel(path[i], path[i + 1]);
        if (!c || g.balance(path[i], path[i + 1]) < amount) {
            rollback_path(g, path.first(i + 1), amount);
            return false;
        }
        g.transfer(path[i], path[i + 1], amount);
    }
    return true;
}

void rollback_path(ChannelGraph& g, std::span<const NodeId> path, Amount amount) {
    for (std::size_t i = path.size(); i-- > 1;) g.transfer(path[i], path[i - 1], amount);
}

Amount bottleneck(const ChannelGraph& g, std::span<const NodeId> path) {
    Amount m = std::numeric_limits<Amount>::max();
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (!g.has_channel(path[i], path[i + 1])) return -1;
        m = std::min(m, g.balance(path[i], path[i + 1]));
    }
    return m;
}

std::size_t default_hop_budget(const ChannelGraph& g) {
    std::uint32_t diameter = 1;
    for (NodeId u = 0; u < g.node_count(); ++u) {
        if (g.degree(u) == 0) continue;
        for (auto h : bfs_hops(g, u))
            if (h != kUnreachable) diameter = std::max(diameter, h);
    }
    return 4 * static_cast<std::size_t>(diameter);
}

MdtCandidates mdt_candidates(const MdtNodeState& s, const Point& target) {
    MdtCandidates c;
    const double du = dist2(s.coord, target);
    using Cand = std::pair<double, NodeId>;
    std::vector<Cand> direct, dt;
    for (const auto& [v, p] : s.direct)
        if (const double dv = dist2(p, target); dv < du) direct.emplace_back(dv, v);
    for (const auto& [v, p] : s.dt) {
        if (s.direct.count(v)) continue;
        const auto it = s.virtual_links.find(v);
        if (it == s.virtual_links.end() || it->second.size() < 2) continue;
        if (const double dv = dist2(p, target); dv < du) dt.emplace_back(dv, v);
    }
    std::sort(direct.begin(), direct.end());
    std::sort(dt.begin(), dt.end());
    for (const auto& [d, v] : direct) c.direct.push_back(v);
    for (const auto& [d, v] : dt) {
        if (c.virtual_links.size() == kMaxDtProbes) break;
        c.virtual_links.push_back(v);
    }
    return c;
}

MdtDecision forward_mdt(const MdtNodeState& s, const ChannelGraph& g, const Point& target, Amount amount) {
    if (amount <= 0) throw std::invalid_argument("forward_mdt: amount must be positive");
    MdtDecision out;
    if (dist2(s.coord, target) == 0.0) {
        out.kind = MdtDecision::Kind::Deliver;
        out.next = s.id;
        out.segment = {s.id};
        return out;
    }
    const auto cand = mdt_candidates(s, target);
    for (NodeId v : cand.direct) {
        if (g.has_channel(s.id, v) && g.balance(s.id, v) >= amount) {
            out.kind = MdtDecision::Kind::Direct;
            out.next = v;
            out.segment = {s.id, v};
            return out;
        }
    }
    for (NodeId v : cand.virtual_links) {
        const auto& link = s.virtual_links.at(v);
        out.probes += link.size() - 1;
        if (bottleneck(g, link) >= amount) {
            out.kind = MdtDecision::Kind::Virtual;
            out.next = v;
            out.segment = link;
            return out;
        }
    }
    out.kind = MdtDecision::Kind::Fail;
    out.reason = cand.direct.empty() && cand.virtual_links.empty() ? Failure::NoRoute : Failure::Insufficient;
    return out;
}

RouteResult route_mdt(const Mdt& mdt, ChannelGraph& g, const Payment& p, const RouteOptions& opt) {
    if (p.sender >= mdt.size() || p.receiver >= mdt.size() || !mdt[p.sender].active || !mdt[p.receiver].active)
        throw std::invalid_argument("route_mdt: endpoint not in the structure");
    const std::size_t budget = opt.hop_budget ? opt.hop_budget : default_hop_budget(g);
    const Point target = mdt[p.receiver].coord;
    RouteResult r;
    r.path = {p.sender};
    NodeId u = p.sender;
    while (true) {
        r.decisions.push_back(u);
        const auto d = forward_mdt(mdt[u], g, target, p.amount);
        r.probe_messages += d.probes;
        if (d.kind == MdtDecision::Kind::Deliver) break;
        if (d.kind == MdtDecision::Kind::Fail) {
            r.reason = d.reason;
            return r;
        }
        r.path.insert(r.path.end(), d.segment.begin() + 1, d.segment.end());
        u = d.next;
        if (r.path.size() - 1 > budget) {
            r.reason = Failure::LoopGuard;
            return r;
        }
    }
    if (u != p.receiver) {
        // Another node sits on the receiver's coordinate; cannot happen with
        // distinct coordinates but keep the result honest.
        r.reason = Failure::NoRoute;
        return r;
    }
    if (!commit_path(g, r.path, p.amount)) {
        r.reason = Failure::CommitFailed;
        return r;
    }
    r.success = true;
    r.delivered = p.amount;
    return r;
}

SplitPlan split_payment(Amount amount, Amount threshold, std::uint64_t seed) {
    if (amount <= 0 || threshold <= 0) throw std::invalid_argument("split_payment: amounts must be positive");
    Rng rng(seed);
    SplitPlan plan;
    plan.threshold = threshold;
    const Amount k = (amount + threshold - 1) / threshold;
    // Each part is threshold - y_i with y a uniform weak composition of
    // slack = k·threshold - ω < threshold, so every part lands in [1, threshold].
    const Amount slack = k * threshold - amount;
    // Stars and bars: k-1 distinct bar positions among slack + k - 1 slots,
    // drawn with Floyd's algorithm.
    std::vector<Amount> cuts;
    const Amount slots = slack + k - 1;
    for (Amount j = slots - (k - 1); j < slots; ++j) {
        const Amount t = std::uniform_int_distribution<Amount>(0, j)(rng);
        cuts.push_back(std::find(cuts.begin(), cuts.end(), t) == cuts.end() ? t : j);
    }
    std::sort(cuts.begin(), cuts.end());
    Amount prev = -1;
    std::vector<std::uint64_t> seen;
    auto fresh_index = [&] {
        while (true) {
            const std::uint64_t x = rng();
            if (std::find(seen.begin(), seen.end(), x) == seen.end()) {
                seen.push_back(x);
                return x;
            }
        }
    };
    for (Amount i = 0; i < k; ++i) {
        const Amount bar = i + 1 < k ? cuts[static_cast<std::size_t>(i)] : slack + k - 1;
        const Amount y = bar - prev - 1;
        prev = bar;
        plan.parts.push_back({threshold - y, 0});
    }
    for (auto& part : plan.parts) part.sub_index = fresh_index();
    return plan;
}

}  // namespace pcn
