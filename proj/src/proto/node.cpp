#include <algorithm>
#include <iostream>

#include "pcn/proto.hpp"

namespace pcn::proto {

namespace {

Point point_of(const std::vector<double>& v, std::size_t from, int dim) {
    Point p(dim);
    for (int i = 0; i < dim; ++i) p[i] = v[from + static_cast<std::size_t>(i)];
    return p;
}

std::vector<double> values_of(const Point& p) { return std::vector<double>(p.data(), p.data() + p.dim()); }

// The constructor normalizes; the wire already carries a unit vector and
// renormalizing could move the last bit.
geo::DirectionLine line_of(const Message& m) {
    const int d = m.dim;
    geo::DirectionLine line(point_of(m.direction, 0, d), point_of(m.direction, d, d));
    line.dir = point_of(m.direction, d, d);
    return line;
}

Envelope envelope(NodeId from, NodeId to, std::uint32_t hop, bool reverse, Message m,
                  NodeId link_src = kNoNode, NodeId link_dst = kNoNode) {
    return Envelope{from, to, link_src, link_dst, hop, reverse, std::move(m)};
}

Message control(const Message& route, MsgType type, std::uint64_t capacity = 0) {
    Message m;
    m.trans_id = route.trans_id;
    m.type = type;
    m.scheme = route.scheme;
    m.capacity = capacity;
    m.commit = route.commit;
    return m;
}

}  // namespace

NodeActor::NodeActor(const MdtNodeState& state, const ChannelGraph& g, const ActorOptions& opt)
    : state_(state), opt_(opt) {
    if (state_.id < g.node_count())
        for (const auto& inc : g.incident(state_.id))
            view_[inc.neighbor] = {g.balance(state_.id, inc.neighbor), g.balance(inc.neighbor, state_.id)};
}

Amount NodeActor::out_balance(NodeId v) const {
    const auto it = view_.find(v);
    return it == view_.end() ? 0 : it->second.first;
}

Amount NodeActor::in_balance(NodeId v) const {
    const auto it = view_.find(v);
    return it == view_.end() ? 0 : it->second.second;
}

std::vector<TxEvent> NodeActor::take_events() { return std::exchange(events_, {}); }

void NodeActor::emit(std::uint64_t tid, TxEvent::Kind kind, Failure reason) {
    events_.push_back({tid, state_.id, kind, reason});
}

void NodeActor::transfer(NodeId from, NodeId to, Amount amount) {
    if (from == state_.id) {
        auto& b = view_.at(to);
        b.first -= amount;
        b.second += amount;
    } else {
        auto& b = view_.at(from);
        b.second -= amount;
        b.first += amount;
    }
}

std::vector<Envelope> NodeActor::drop(const Envelope& e, const char* why) {
    ++dropped_;
    std::clog << "node " << state_.id << ": dropped " << to_string(e.msg.type) << " for transaction " << e.msg.trans_id
              << " (" << why << ")\n";
    return {};
}

std::vector<Envelope> NodeActor::start_mdt(const Payment& p, const Point& receiver) {
    Message m;
    m.trans_id = p.trans_id;
    m.type = MsgType::Route;
    m.scheme = Scheme::Mdt;
    m.dim = static_cast<std::uint8_t>(receiver.dim());
    m.direction = values_of(receiver);
    m.commit = static_cast<std::uint64_t>(p.amount);
    if (p.amount <= 0) throw std::invalid_argument("start_mdt: amount must be positive");
    return start(m);
}

std::vector<Envelope> NodeActor::start_pe(const Payment& p, const PeTarget& target) {
    Message m;
    m.trans_id = p.trans_id;
    m.type = MsgType::Route;
    m.scheme = Scheme::Pe;
    m.dim = static_cast<std::uint8_t>(target.line.base.dim());
    m.direction = values_of(target.line.base);
    const auto dir = values_of(target.line.dir);
    m.direction.insert(m.direction.end(), dir.begin(), dir.end());
    m.commit = static_cast<std::uint64_t>(p.amount);
    if (p.amount <= 0) throw std::invalid_argument("start_pe: amount must be positive");
    return start(m);
}

std::vector<Envelope> NodeActor::start(const Message& route) {
    const Key key{route.trans_id, 0};
    if (pending_.count(key)) throw ProtocolError("transaction " + std::to_string(route.trans_id) + " already running");
    pending_[key] = Pending{kNoNode, kNoNode, static_cast<Amount>(route.commit), route};
    return decide(key, kNoNode);
}

std::vector<Envelope> NodeActor::handle(const Envelope& e) {
    if (e.to != state_.id)
        throw ProtocolError("envelope for node " + std::to_string(e.to) + " delivered to " + std::to_string(state_.id));
    switch (e.msg.type) {
        case MsgType::Route:
        case MsgType::RouteAck:
        case MsgType::RouteNack: return handle_route(e);
        case MsgType::Probe: return handle_probe(e);
        case MsgType::Commit:
        case MsgType::CommitNack: return handle_commit(e);
    }
    throw ProtocolError("unknown message type");
}

std::vector<Envelope> NodeActor::decide(const Key& key, NodeId prev) {
    if (key.second > opt_.hop_budget) return fail_route(key, Failure::LoopGuard);
    auto& pd = pending_.at(key);
    const Message& m = pd.route;
    Decision d;
    bool deliver = false;
    if (m.scheme == Scheme::Mdt) {
        const Point target = point_of(m.direction, 0, m.dim);
        if (dist2(state_.coord, target) == 0.0) {
            deliver = true;
        } else {
            const auto cand = mdt_candidates(state_, target);
            for (NodeId v : cand.direct)
                if (view_.count(v) && out_balance(v) >= pd.amount) return send_route(key, {state_.id, v});
            for (NodeId v : cand.virtual_links) d.segments.push_back(state_.virtual_links.at(v));
            d.empty_reason = cand.direct.empty() && cand.virtual_links.empty() ? Failure::NoRoute : Failure::Insufficient;
        }
    } else {
        const auto line = line_of(m);
        const auto entry = pe_entry_param(cell_of(state_), line);
        if (!entry) return fail_route(key, Failure::LineExited);
        if (expected_.count(m.trans_id)) {
            deliver = true;
        } else {
            auto hop = pe_next_hop(state_, PeTarget{line, {}}, *entry, prev);
            if (hop.next == kNoNode) return fail_route(key, hop.reason);
            // Even a direct hop is probed: the line, not the balance, picked it.
            d.segments.push_back(std::move(hop.segment));
            d.empty_reason = Failure::Insufficient;
        }
    }
    if (deliver) {
        pd.next = kNoNode;
        Message ack = control(m, MsgType::RouteAck);
        ack.dim = m.dim;
        if (m.scheme == Scheme::Mdt) {
            ack.direction = values_of(state_.direct.at(pd.last));
        } else {
            ack.direction = m.direction;
            for (std::size_t i = m.dim; i < ack.direction.size(); ++i) ack.direction[i] = -ack.direction[i];
        }
        return {envelope(state_.id, pd.last, key.second - 1, true, std::move(ack))};
    }
    deciding_[key] = std::move(d);
    return try_next_segment(key);
}

std::vector<Envelope> NodeActor::try_next_segment(const Key& key) {
    auto& d = deciding_.at(key);
    if (d.tried == d.segments.size()) return fail_route(key, d.empty_reason);
    const auto& seg = d.segments[d.tried++];
    return probe(key.first, key.second, seg, pending_.at(key).route);
}

std::vector<Envelope> NodeActor::probe(std::uint64_t trans_id, std::uint32_t hop, const std::vector<NodeId>& segment,
                                       const Message& route) {
    if (segment.size() < 2 || segment.front() != state_.id) throw std::invalid_argument("probe: segment must start here");
    const NodeId first = segment[1];
    // Starts at the payment value, so capacity never exceeds commit.
    const Amount commit = static_cast<Amount>(route.commit);
    const Amount cap = view_.count(first) ? std::min(commit, out_balance(first)) : 0;
    Message m = control(route, MsgType::Probe, static_cast<std::uint64_t>(std::max<Amount>(cap, 0)));
    m.trans_id = trans_id;
    return {envelope(state_.id, first, hop, false, std::move(m), state_.id, segment.back())};
}

std::vector<Envelope> NodeActor::send_route(const Key& key, const std::vector<NodeId>& segment) {
    deciding_.erase(key);
    auto& pd = pending_.at(key);
    pd.next = segment[1];
    return {envelope(state_.id, segment[1], key.second + 1, false, pd.route, state_.id, segment.back())};
}

std::vector<Envelope> NodeActor::fail_route(const Key& key, Failure reason) {
    deciding_.erase(key);
    const auto it = pending_.find(key);
    emit(key.first, TxEvent::Kind::RouteFailed, reason);
    std::vector<Envelope> out;
    if (key.second > 0) {
        const Pending& pd = it->second;
        Message nack = control(pd.route, MsgType::RouteNack);
        nack.dim = pd.route.dim;
        if (pd.route.scheme == Scheme::Mdt) {
            nack.direction = values_of(state_.direct.at(pd.last));
        } else {
            nack.direction = pd.route.direction;
            for (std::size_t i = pd.route.dim; i < nack.direction.size(); ++i) nack.direction[i] = -nack.direction[i];
        }
        out.push_back(envelope(state_.id, pd.last, key.second - 1, true, std::move(nack)));
    }
    pending_.erase(it);
    return out;
}

NodeId NodeActor::link_next(NodeId link_src, NodeId link_dst, bool toward_dst, NodeId from) const {
    const NodeId lo = std::min(link_src, link_dst), hi = std::max(link_src, link_dst);
    for (const auto& f : state_.table) {
        if (f.source != lo || f.dest != hi) continue;
        // pred faces the smaller end, succ the larger one.
        const bool to_hi = (link_src == lo) == toward_dst;
        const NodeId expect_from = to_hi ? f.pred : f.succ;
        if (from != kNoNode && from != expect_from) return kNoNode;
        return to_hi ? f.succ : f.pred;
    }
    return kNoNode;
}

std::vector<Envelope> NodeActor::handle_route(const Envelope& e) {
    const Key key{e.msg.trans_id, e.hop};
    if (e.msg.type == MsgType::Route) {
        if (e.reverse) throw ProtocolError("ROUTE travelling in reverse");
        if (pending_.count(key)) throw ProtocolError("duplicate ROUTE for transaction " + std::to_string(key.first));
        pending_[key] = Pending{e.from, kNoNode, static_cast<Amount>(e.msg.commit), e.msg};
        if (state_.id == e.link_dst) return decide(key, e.link_src);
        const NodeId next = link_next(e.link_src, e.link_dst, true, e.from);
        if (next == kNoNode) return fail_route(key, Failure::NoRoute);
        pending_[key].next = next;
        return {envelope(state_.id, next, e.hop + 1, false, e.msg, e.link_src, e.link_dst)};
    }

    const auto it = pending_.find(key);
    if (!e.reverse || it == pending_.end()) {
        return drop(e, "no pending state");
    }
    const Pending pd = it->second;
    if (e.msg.type == MsgType::RouteNack) pending_.erase(it);
    if (key.second == 0) {
        if (e.msg.type == MsgType::RouteAck) return start_commit(key);
        return {};
    }
    Message m = e.msg;
    if (m.scheme == Scheme::Mdt) m.direction = values_of(state_.direct.at(pd.last));
    return {envelope(state_.id, pd.last, e.hop - 1, true, std::move(m))};
}

std::vector<Envelope> NodeActor::handle_probe(const Envelope& e) {
    Message m = e.msg;
    if (!e.reverse) {
        if (state_.id == e.link_dst) return {envelope(state_.id, e.from, e.hop, true, std::move(m), e.link_src, e.link_dst)};
        const NodeId next = link_next(e.link_src, e.link_dst, true, e.from);
        if (next == kNoNode || !view_.count(next)) {
            // Broken path: turn around with nothing.
            m.capacity = 0;
            return {envelope(state_.id, e.from, e.hop, true, std::move(m), e.link_src, e.link_dst)};
        }
        m.capacity = std::min<std::uint64_t>(m.capacity, static_cast<std::uint64_t>(std::max<Amount>(out_balance(next), 0)));
        return {envelope(state_.id, next, e.hop, false, std::move(m), e.link_src, e.link_dst)};
    }
    if (state_.id == e.link_src) {
        const Key key{m.trans_id, e.hop};
        const auto it = deciding_.find(key);
        if (it == deciding_.end()) return drop(e, "no probe outstanding");
        if (m.capacity >= m.commit) {
            const auto seg = it->second.segments[it->second.tried - 1];
            return send_route(key, seg);
        }
        return try_next_segment(key);
    }
    const NodeId prev = link_next(e.link_src, e.link_dst, false, e.from);
    if (prev == kNoNode) {
        return drop(e, "no forwarding entry");
    }
    return {envelope(state_.id, prev, e.hop, true, std::move(m), e.link_src, e.link_dst)};
}

std::vector<Envelope> NodeActor::start_commit(const Key& key) {
    auto& pd = pending_.at(key);
    const bool refuse = std::find(fail_commit_.begin(), fail_commit_.end(), key.first) != fail_commit_.end();
    if (refuse || !view_.count(pd.next) || out_balance(pd.next) < pd.amount) {
        emit(key.first, TxEvent::Kind::CommitFailed, Failure::CommitFailed);
        const NodeId next = pd.next;
        const Message release = control(pd.route, MsgType::CommitNack);
        pending_.erase(key);
        return {envelope(state_.id, next, key.second + 1, false, release)};
    }
    transfer(state_.id, pd.next, pd.amount);
    return {envelope(state_.id, pd.next, key.second + 1, false, control(pd.route, MsgType::Commit))};
}

std::vector<Envelope> NodeActor::handle_commit(const Envelope& e) {
    const Key key{e.msg.trans_id, e.hop};
    const auto it = pending_.find(key);
    if (it == pending_.end()) {
        return drop(e, "no pending state");
    }
    const Pending pd = it->second;

    if (e.msg.type == MsgType::Commit && !e.reverse) {
        if (e.from != pd.last) throw ProtocolError("COMMIT from an unexpected node");
        transfer(pd.last, state_.id, pd.amount);
        if (pd.next == kNoNode) {
            // Receiver: confirm back toward the sender.
            emit(key.first, TxEvent::Kind::Delivered, Failure::None);
            pending_.erase(it);
            return {envelope(state_.id, pd.last, e.hop - 1, true, e.msg)};
        }
        const bool refuse = std::find(fail_commit_.begin(), fail_commit_.end(), key.first) != fail_commit_.end();
        if (refuse || !view_.count(pd.next) || out_balance(pd.next) < pd.amount) {
            transfer(state_.id, pd.last, pd.amount);
            emit(key.first, TxEvent::Kind::CommitFailed, Failure::CommitFailed);
            pending_.erase(it);
            // Upstream undoes its hops; downstream only forgets the transaction.
            const Message nack = control(pd.route, MsgType::CommitNack);
            return {envelope(state_.id, pd.last, e.hop - 1, true, nack),
                    envelope(state_.id, pd.next, e.hop + 1, false, nack)};
        }
        transfer(state_.id, pd.next, pd.amount);
        return {envelope(state_.id, pd.next, e.hop + 1, false, e.msg)};
    }

    pending_.erase(it);
    if (!e.reverse) {
        if (pd.next == kNoNode) return {};
        return {envelope(state_.id, pd.next, e.hop + 1, false, e.msg)};
    }
    if (e.msg.type == MsgType::CommitNack) {
        transfer(pd.next, state_.id, pd.amount);
        if (key.second == 0) return {};
        transfer(state_.id, pd.last, pd.amount);
        return {envelope(state_.id, pd.last, e.hop - 1, true, e.msg)};
    }
    if (key.second == 0) {
        emit(key.first, TxEvent::Kind::Completed, Failure::None);
        return {};
    }
    return {envelope(state_.id, pd.last, e.hop - 1, true, e.msg)};
}

}  // namespace pcn::proto
