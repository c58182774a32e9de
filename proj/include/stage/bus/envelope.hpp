#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stage/bus/value.hpp"

namespace stage::bus {

// Body size limit; the u32 length prefix in front of each envelope is not counted.
inline constexpr std::size_t kMaxEnvelopeSize = 10'240;

struct EventEnvelope {
    std::string topic;
    std::uint32_t sender = 0;
    std::uint64_t seq = 0;
    double timestamp = 0.0;
    Value payload;

    friend bool operator==(const EventEnvelope&, const EventEnvelope&) = default;
};

class BusError : public std::runtime_error {
public:
    enum class Code { PayloadTooLarge, NotJoined, BadTopic, BadPattern, Malformed };

    BusError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

// Non-empty printable ASCII without wildcards.
bool valid_topic(std::string_view topic);

// "a/b" matches only "a/b"; "a/*" matches every topic under "a/".
bool valid_pattern(std::string_view pattern);
bool topic_matches(std::string_view pattern, std::string_view topic);

// Body bytes: u16 topic length, topic, u32 sender, u64 seq, f64 timestamp, value.
std::size_t envelope_body_size(const EventEnvelope& e);

// Full frame including the u32 length prefix. Throws BusError(PayloadTooLarge) when
// the body exceeds kMaxEnvelopeSize and BusError(BadTopic) on an invalid topic.
std::vector<std::uint8_t> encode_envelope(const EventEnvelope& e);

// Decodes one body (without the length prefix). Throws CodecError or BusError(Malformed).
EventEnvelope decode_envelope_body(std::span<const std::uint8_t> body);

}  // namespace stage::bus
