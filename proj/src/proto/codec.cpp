#include <bit>

#include "pcn/proto.hpp"

namespace pcn::proto {

std::string to_string(MsgType t) {
    switch (t) {
        case MsgType::Route: return "ROUTE";
        case MsgType::RouteAck: return "ROUTE_ACK";
        case MsgType::RouteNack: return "ROUTE_NACK";
        case MsgType::Probe: return "PROBE";
        case MsgType::Commit: return "COMMIT";
        case MsgType::CommitNack: return "COMMIT_NACK";
    }
    return "UNKNOWN";
}

namespace {

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <class T>
T get(std::span<const std::uint8_t> in, std::size_t& pos) {
    if (in.size() - pos < sizeof(T)) throw ProtocolError("frame truncated");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(in[pos + i]) << (8 * i);
    pos += sizeof(T);
    return v;
}

std::size_t direction_values(Scheme s, std::uint8_t dim) { return s == Scheme::Pe ? 2u * dim : dim; }

}  // namespace

std::vector<std::uint8_t> encode(const Message& m) {
    const std::size_t values = direction_values(m.scheme, m.dim);
    if (m.direction.size() != values)
        throw std::invalid_argument("encode: direction has " + std::to_string(m.direction.size()) + " values, expected " +
                                    std::to_string(values));
    std::vector<std::uint8_t> out;
    out.reserve(4 + frame_body_size(values));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(frame_body_size(values)));
    put<std::uint64_t>(out, m.trans_id);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(static_cast<unsigned>(m.type) << 1 | static_cast<unsigned>(m.scheme)));
    put<std::uint8_t>(out, m.dim);
    for (double d : m.direction) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(d));
    put<std::uint64_t>(out, m.capacity);
    put<std::uint64_t>(out, m.commit);
    return out;
}

Message decode(std::span<const std::uint8_t> frame) {
    std::size_t pos = 0;
    const auto len = get<std::uint32_t>(frame, pos);
    if (frame.size() - 4 != len) throw ProtocolError("frame length field does not match the frame size");
    Message m;
    m.trans_id = get<std::uint64_t>(frame, pos);
    const auto type = get<std::uint8_t>(frame, pos);
    const unsigned code = type >> 1;
    if (code > static_cast<unsigned>(MsgType::CommitNack))
        throw ProtocolError("unknown message type code " + std::to_string(code));
    m.type = static_cast<MsgType>(code);
    m.scheme = static_cast<Scheme>(type & 1u);
    m.dim = get<std::uint8_t>(frame, pos);
    const std::size_t values = direction_values(m.scheme, m.dim);
    if (len != frame_body_size(values)) throw ProtocolError("frame length does not match its dimension");
    m.direction.reserve(values);
    for (std::size_t i = 0; i < values; ++i) m.direction.push_back(std::bit_cast<double>(get<std::uint64_t>(frame, pos)));
    m.capacity = get<std::uint64_t>(frame, pos);
    m.commit = get<std::uint64_t>(frame, pos);
    return m;
}

std::vector<std::uint8_t> encode_envelope(const Envelope& e) {
    std::vector<std::uint8_t> out;
    put<std::uint32_t>(out, e.from);
    put<std::uint32_t>(out, e.to);
    put<std::uint32_t>(out, e.link_src);
    put<std::uint32_t>(out, e.link_dst);
    put<std::uint32_t>(out, e.hop);
    put<std::uint8_t>(out, e.reverse ? 1 : 0);
    const auto f = encode(e.msg);
    out.insert(out.end(), f.begin(), f.end());
    return out;
}

Envelope decode_envelope(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    Envelope e;
    e.from = get<std::uint32_t>(bytes, pos);
    e.to = get<std::uint32_t>(bytes, pos);
    e.link_src = get<std::uint32_t>(bytes, pos);
    e.link_dst = get<std::uint32_t>(bytes, pos);
    e.hop = get<std::uint32_t>(bytes, pos);
    const auto flags = get<std::uint8_t>(bytes, pos);
    if (flags > 1) throw ProtocolError("unknown envelope flags");
    e.reverse = flags == 1;
    e.msg = decode(bytes.subspan(pos));
    return e;
}

void EnvelopeReader::feed(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

std::optional<Envelope> EnvelopeReader::next() {
    if (buf_.size() < kEnvelopeHeader + 4) return std::nullopt;
    std::size_t pos = kEnvelopeHeader;
    const auto len = get<std::uint32_t>(buf_, pos);
    const std::size_t total = kEnvelopeHeader + 4 + len;
    if (len > (1u << 20)) throw ProtocolError("frame too large");
    if (buf_.size() < total) return std::nullopt;
    auto e = decode_envelope(std::span<const std::uint8_t>(buf_).first(total));
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(total));
    return e;
}

}  // namespace pcn::proto
