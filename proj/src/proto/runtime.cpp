#include "pcn/proto.hpp"

namespace pcn::proto {

DeterministicNetwork::DeterministicNetwork(const Mdt& mdt, const ChannelGraph& g, std::uint64_t seed,
                                           const ActorOptions& opt)
    : mdt_(mdt), shape_(g), rng_(seed) {
    if (mdt.size() != g.node_count()) throw std::invalid_argument("DeterministicNetwork: structure and graph differ in size");
    actors_.reserve(mdt.size());
    for (const auto& s : mdt) actors_.emplace_back(s, g, opt);
}

void DeterministicNetwork::post(std::vector<Envelope> out) {
    for (auto& e : out) {
        if (e.to >= actors_.size()) throw ProtocolError("message for unknown node " + std::to_string(e.to));
        // Every transmission crosses the wire format.
        auto bytes = encode_envelope(e);
        queues_[{e.from, e.to}].push_back(decode_envelope(bytes));
    }
}

ProtoOutcome DeterministicNetwork::pay_mdt(const Payment& p) {
    if (p.sender >= mdt_.size() || p.receiver >= mdt_.size())
        throw std::invalid_argument("pay_mdt: endpoint out of range");
    return run(p, actors_[p.sender].start_mdt(p, mdt_[p.receiver].coord));
}

ProtoOutcome DeterministicNetwork::pay_pe(const Payment& p, std::uint64_t pe_seed) {
    if (p.sender >= mdt_.size() || p.receiver >= mdt_.size())
        throw std::invalid_argument("pay_pe: endpoint out of range");
    const auto secret = payment_secret(p, pe_seed);
    const auto& s = mdt_[p.sender];
    const auto target = make_pe_target(cell_of(s), s.coord, mdt_[p.receiver].coord, secret,
                                       stream_seed(pe_seed, "line", p.trans_id), actors_[p.sender].options().pe);
    actors_[p.receiver].expect(p.trans_id, sha256(secret));
    return run(p, actors_[p.sender].start_pe(p, target));
}

ProtoOutcome DeterministicNetwork::run(const Payment& p, std::vector<Envelope> first) {
    ProtoOutcome out;
    out.path = {p.sender};
    std::vector<TxEvent> events = actors_[p.sender].take_events();
    post(std::move(first));
    std::vector<std::pair<NodeId, NodeId>> ready;
    while (!queues_.empty()) {
        ready.clear();
        for (const auto& [k, q] : queues_) ready.push_back(k);
        const auto k = ready[std::uniform_int_distribution<std::size_t>(0, ready.size() - 1)(rng_)];
        auto& q = queues_[k];
        Envelope e = std::move(q.front());
        q.pop_front();
        if (q.empty()) queues_.erase(k);

        ++out.messages;
        if (!e.reverse && e.msg.type == MsgType::Route) out.path.push_back(e.to);
        if (!e.reverse && e.msg.type == MsgType::Probe) ++out.probe_messages;
        auto& a = actors_[e.to];
        post(a.handle(e));
        for (auto& ev : a.take_events()) events.push_back(ev);
    }
    for (const auto& ev : events) {
        if (ev.trans_id != p.trans_id) continue;
        if (ev.kind == TxEvent::Kind::Completed) out.success = true;
        if ((ev.kind == TxEvent::Kind::RouteFailed || ev.kind == TxEvent::Kind::CommitFailed) &&
            out.reason == Failure::None)
            out.reason = ev.reason;
    }
    if (out.success) out.reason = Failure::None;
    return out;
}

ChannelGraph DeterministicNetwork::balances() const {
    ChannelGraph g(shape_.node_count());
    for (std::size_t i = 0; i < shape_.channel_slots(); ++i) {
        const auto& c = shape_.channel(i);
        if (!c.alive) continue;
        const Amount ab = actors_[c.a].out_balance(c.b), ba = actors_[c.b].out_balance(c.a);
        if (ab != actors_[c.b].in_balance(c.a) || ba != actors_[c.a].in_balance(c.b))
            throw ProtocolError("ends of channel " + std::to_string(c.a) + "-" + std::to_string(c.b) + " disagree");
        g.add_channel(c.a, c.b, ab, ba);
    }
    return g;
}

std::size_t DeterministicNetwork::total_pending() const {
    std::size_t n = 0;
    for (const auto& a : actors_) n += a.pending_count();
    return n;
}

}  // namespace pcn::proto
