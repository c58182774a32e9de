#include "stage/bus/envelope.hpp"

#include "stage/bus/wire.hpp"

namespace stage::bus {

bool valid_topic(std::string_view topic) {
    if (topic.empty() || topic.size() > 0xFFFF) return false;
    for (char c : topic) {
        if (c < 0x21 || c > 0x7E || c == '*') return false;
    }
    return true;
}

bool valid_pattern(std::string_view pattern) {
    if (pattern.size() >= 2 && pattern.substr(pattern.size() - 2) == "/*") {
        return valid_topic(pattern.substr(0, pattern.size() - 2));
    }
    return valid_topic(pattern);
}

bool topic_matches(std::string_view pattern, std::string_view topic) {
    if (pattern.size() >= 2 && pattern.substr(pattern.size() - 2) == "/*") {
        const std::string_view prefix = pattern.substr(0, pattern.size() - 1);  // keeps the slash
        return topic.size() > prefix.size() && topic.substr(0, prefix.size()) == prefix;
    }
    return pattern == topic;
}

std::size_t envelope_body_size(const EventEnvelope& e) {
    return 2 + e.topic.size() + 4 + 8 + 8 + encoded_size(e.payload);
}

std::vector<std::uint8_t> encode_envelope(const EventEnvelope& e) {
    if (!valid_topic(e.topic)) throw BusError(BusError::Code::BadTopic, "invalid topic '" + e.topic + "'");
    const std::size_t body = envelope_body_size(e);
    if (body > kMaxEnvelopeSize) {
        throw BusError(BusError::Code::PayloadTooLarge, "envelope on '" + e.topic + "' is " + std::to_string(body) +
                                                            " bytes, limit is " + std::to_string(kMaxEnvelopeSize));
    }
    std::vector<std::uint8_t> out;
    out.reserve(4 + body);
    wire::put_u32(out, static_cast<std::uint32_t>(body));
    wire::put_u16(out, static_cast<std::uint16_t>(e.topic.size()));
    out.insert(out.end(), e.topic.begin(), e.topic.end());
    wire::put_u32(out, e.sender);
    wire::put_u64(out, e.seq);
    wire::put_f64(out, e.timestamp);
    encode_value(e.payload, out);
    return out;
}

EventEnvelope decode_envelope_body(std::span<const std::uint8_t> body) {
    if (body.size() > kMaxEnvelopeSize) {
        throw BusError(BusError::Code::Malformed, "envelope body of " + std::to_string(body.size()) + " bytes");
    }
    wire::Reader in(body);
    EventEnvelope e;
    e.topic = in.bytes(in.u16());
    if (!valid_topic(e.topic)) throw BusError(BusError::Code::Malformed, "envelope has an invalid topic");
    e.sender = in.u32();
    e.seq = in.u64();
    e.timestamp = in.f64();
    std::size_t offset = in.offset();
    e.payload = decode_value_prefix(body, offset);
    if (offset != body.size()) {
        throw CodecError(CodecError::Kind::TrailingBytes, "trailing bytes after envelope payload");
    }
    return e;
}

}  // namespace stage::bus
