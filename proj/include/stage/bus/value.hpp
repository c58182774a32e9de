#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace stage::bus {

struct Value;
using ValueMap = std::map<std::string, Value, std::less<>>;
using Float32Array = std::vector<float>;

// Tagged payload union. Equality compares floats by bit pattern so NaNs round-trip.
struct Value {
    using Storage = std::variant<double, std::int64_t, bool, std::string, Float32Array, ValueMap>;
    Storage data;

    Value() : data(std::int64_t{0}) {}
    Value(double v) : data(v) {}
    Value(std::int64_t v) : data(v) {}
    Value(int v) : data(std::int64_t{v}) {}
    Value(bool v) : data(v) {}
    Value(std::string v) : data(std::move(v)) {}
    Value(const char* v) : data(std::string(v)) {}
    Value(Float32Array v) : data(std::move(v)) {}
    Value(ValueMap v) : data(std::move(v)) {}

    template <typename T>
    bool is() const { return std::holds_alternative<T>(data); }
    template <typename T>
    const T& as() const { return std::get<T>(data); }
    template <typename T>
    const T* get_if() const { return std::get_if<T>(&data); }

    // Member lookup on a map value; nullptr when absent or not a map.
    const Value* find(std::string_view key) const;

    friend bool operator==(const Value& a, const Value& b);
};

inline constexpr std::size_t kMaxValueDepth = 8;

enum class ValueTag : std::uint8_t {
    Float64 = 0x01,
    Int64 = 0x02,
    Bool = 0x03,
    Utf8String = 0x04,
    Float32Array = 0x05,
    Map = 0x06,
};

class CodecError : public std::runtime_error {
public:
    enum class Kind { DepthExceeded, UnknownTag, Truncated, InvalidUtf8, TrailingBytes, BadBool, KeyOrder, TooLarge };

    CodecError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Scalars and arrays count 1; a map counts one more than its deepest member.
std::size_t depth(const Value& v);

bool valid_utf8(std::string_view s);

void encode_value(const Value& v, std::vector<std::uint8_t>& out);
std::vector<std::uint8_t> encode_value(const Value& v);
std::size_t encoded_size(const Value& v);

Value decode_value(std::span<const std::uint8_t> bytes);

// Cursor-based decode for callers that embed values in larger frames.
Value decode_value_prefix(std::span<const std::uint8_t> bytes, std::size_t& offset);

}  // namespace stage::bus
