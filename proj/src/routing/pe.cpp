#include <algorithm>
#include <cstring>
#include <limits>
#include <stdexcept>

#include <openssl/evp.h>

#include "pcn/routing.hpp"

namespace pcn {

Digest sha256(std::span<const std::uint8_t> bytes) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
        throw Error("sha256 failed");
    return out;
}

std::vector<std::uint8_t> payment_secret(const Payment& p, std::uint64_t seed) {
    Rng rng(stream_seed(seed, "secret", p.trans_id ^ (p.sub_index.value_or(0) * 0x9e3779b97f4a7c15ull)));
    std::vector<std::uint8_t> k(32);
    for (std::size_t i = 0; i < k.size(); i += 8) {
        const std::uint64_t x = rng();
        std::memcpy(k.data() + i, &x, 8);
    }
    return k;
}

geo::VoronoiCell cell_of(const MdtNodeState& s) {
    std::vector<Point> pts;
    std::vector<std::uint32_t> ids;
    for (const auto& [v, p] : s.dt) {
        pts.push_back(p);
        ids.push_back(v);
    }
    return geo::voronoi_cell(s.coord, pts, ids, s.id);
}

namespace {

Point uniform_in_cube(Rng& rng, const Point& center, double half) {
    Point p = center;
    std::uniform_real_distribution<double> u(-half, half);
    for (int c = 0; c < p.dim(); ++c) p[c] += u(rng);
    return p;
}

}  // namespace

PeTarget make_pe_target(const geo::VoronoiCell& sender_cell, const Point& sender, const Point& receiver,
                        std::span<const std::uint8_t> secret, std::uint64_t seed, const PeOptions& opt,
                        const geo::VoronoiCell* receiver_cell) {
    Rng rng(seed);
    Point base = sender;
    if (opt.base_spread > 0 && !sender_cell.halfspaces.empty()) {
        double reach = std::numeric_limits<double>::infinity();
        for (const auto& h : sender_cell.halfspaces) reach = std::min(reach, -h.signed_distance(sender));
        const double half = opt.base_spread * reach;
        for (int attempt = 0; attempt < 64; ++attempt) {
            const Point q = uniform_in_cube(rng, sender, half);
            if (sender_cell.contains(q, 0.0)) {
                base = q;
                break;
            }
        }
    }
    Point aim = receiver;
    if (opt.target_jitter > 0 && receiver_cell) {
        for (int attempt = 0; attempt < 64; ++attempt) {
            const Point q = uniform_in_cube(rng, receiver, opt.target_jitter);
            if (receiver_cell->contains(q, 0.0)) {
                aim = q;
                break;
            }
        }
    }
    if (dist2(aim, base) == 0.0) base = sender;
    return PeTarget{geo::DirectionLine(base, aim - base), sha256(secret)};
}

std::optional<double> pe_entry_param(const geo::VoronoiCell& cell, const geo::DirectionLine& line) {
    const auto iv = geo::line_cell_interval(cell, line);
    if (!iv || iv->second < 0) return std::nullopt;
    return std::max(0.0, iv->first);
}

PeHop pe_next_hop(const MdtNodeState& s, const PeTarget& t, double entry_param, NodeId last_hop) {
    PeHop out;
    const auto exit = geo::line_cell_exit(cell_of(s), t.line, entry_param,
                                          last_hop == kNoNode ? std::nullopt : std::optional<std::uint32_t>(last_hop));
    if (!exit.bounded()) {
        out.reason = Failure::LineExited;
        return out;
    }
    const NodeId v = *exit.neighbor;
    out.exit_param = exit.param;
    if (s.direct.count(v)) {
        out.segment = {s.id, v};
    } else {
        const auto it = s.virtual_links.find(v);
        if (it == s.virtual_links.end() || it->second.size() < 2) {
            out.reason = Failure::NoRoute;
            return out;
        }
        out.segment = it->second;
    }
    out.next = v;
    return out;
}

PeDecision forward_pe(const MdtNodeState& s, const ChannelGraph& g, const PeTarget& t, double entry_param,
                      NodeId last_hop, Amount amount, const std::optional<Digest>& expected) {
    if (amount <= 0) throw std::invalid_argument("forward_pe: amount must be positive");
    PeDecision out;
    if (expected && *expected == t.secret_hash) {
        out.kind = PeDecision::Kind::Deliver;
        out.next = s.id;
        out.segment = {s.id};
        return out;
    }
    auto hop = pe_next_hop(s, t, entry_param, last_hop);
    out.exit_param = hop.exit_param;
    if (hop.next == kNoNode) {
        out.reason = hop.reason;
        return out;
    }
    out.probes = hop.segment.size() - 1;
    if (bottleneck(g, hop.segment) < amount) {
        out.reason = Failure::Insufficient;
        return out;
    }
    out.kind = PeDecision::Kind::Next;
    out.next = hop.next;
    out.segment = std::move(hop.segment);
    return out;
}

RouteResult route_pe(const Mdt& mdt, ChannelGraph& g, const Payment& p, std::span<const std::uint8_t> secret,
                     std::uint64_t seed, const PeOptions& pe, const RouteOptions& opt) {
    if (p.sender >= mdt.size() || p.receiver >= mdt.size() || !mdt[p.sender].active || !mdt[p.receiver].active)
        throw std::invalid_argument("route_pe: endpoint not in the structure");
    const std::size_t budget = opt.hop_budget ? opt.hop_budget : default_hop_budget(g);
    const auto& sender = mdt[p.sender];
    const PeTarget target =
        make_pe_target(cell_of(sender), sender.coord, mdt[p.receiver].coord, secret, seed, pe);
    const Digest expected = sha256(secret);

    RouteResult r;
    r.path = {p.sender};
    NodeId u = p.sender, last = kNoNode;
    while (true) {
        r.decisions.push_back(u);
        const auto cell = cell_of(mdt[u]);
        const auto entry = pe_entry_param(cell, target.line);
        if (!entry) {
            r.reason = Failure::LineExited;
            return r;
        }
        const auto d = forward_pe(mdt[u], g, target, *entry, last, p.amount,
                                  u == p.receiver ? std::optional<Digest>(expected) : std::nullopt);
        r.probe_messages += d.probes;
        if (d.kind == PeDecision::Kind::Deliver) break;
        if (d.kind == PeDecision::Kind::Fail) {
            r.reason = d.reason;
            return r;
        }
        r.path.insert(r.path.end(), d.segment.begin() + 1, d.segment.end());
        last = u;
        u = d.next;
        if (r.path.size() - 1 > budget) {
            r.reason = Failure::LoopGuard;
            return r;
        }
    }
    if (!commit_path(g, r.path, p.amount)) {
        r.reason = Failure::CommitFailed;
        return r;
    }
    r.success = true;
    r.delivered = p.amount;
    return r;
}

}  // namespace pcn
