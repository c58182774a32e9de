#include "stage/bus/value.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "stage/bus/wire.hpp"

namespace stage::bus {

const Value* Value::find(std::string_view key) const {
    const auto* m = get_if<ValueMap>();
    if (!m) return nullptr;
    auto it = m->find(key);
    return it == m->end() ? nullptr : &it->second;
}

bool operator==(const Value& a, const Value& b) {
    if (a.data.index() != b.data.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const T& y = std::get<T>(b.data);
            if constexpr (std::is_same_v<T, double>) {
                return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
            } else if constexpr (std::is_same_v<T, Float32Array>) {
                return x.size() == y.size() &&
                       (x.empty() || std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0);
            } else {
                return x == y;
            }
        },
        a.data);
}

std::size_t depth(const Value& v) {
    const auto* m = v.get_if<ValueMap>();
    if (!m) return 1;
    std::size_t deepest = 0;
    for (const auto& [key, member] : *m) deepest = std::max(deepest, depth(member));
    return deepest + 1;
}

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t n = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            n = 1;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            n = 2;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            n = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + n >= s.size()) return false;
        for (std::size_t k = 1; k <= n; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // overlong forms, surrogates and out-of-range code points
        static constexpr std::uint32_t kMin[] = {0, 0x80, 0x800, 0x10000};
        if (cp < kMin[n] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
        i += n + 1;
    }
    return true;
}

namespace {

void encode_into(const Value& v, std::vector<std::uint8_t>& out, std::size_t level) {
    if (level > kMaxValueDepth) {
        throw CodecError(CodecError::Kind::DepthExceeded, "value nesting exceeds depth 8");
    }
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, double>) {
                out.push_back(static_cast<std::uint8_t>(ValueTag::Float64));
                wire::put_f64(out, x);
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                out.push_back(static_cast<std::uint8_t>(ValueTag::Int64));
                wire::put_u64(out, static_cast<std::uint64_t>(x));
            } else if constexpr (std::is_same_v<T, bool>) {
                out.push_back(static_cast<std::uint8_t>(ValueTag::Bool));
                out.push_back(x ? 1 : 0);
            } else if constexpr (std::is_same_v<T, std::string>) {
                out.push_back(static_cast<std::uint8_t>(ValueTag::Utf8String));
                wire::put_string32(out, x);
            } else if constexpr (std::is_same_v<T, Float32Array>) {
                out.push_back(static_cast<std::uint8_t>(ValueTag::Float32Array));
                wire::put_u32(out, wire::checked_u32(x.size()));
                for (float f : x) wire::put_f32(out, f);
            } else {
                out.push_back(static_cast<std::uint8_t>(ValueTag::Map));
                wire::put_u32(out, wire::checked_u32(x.size()));
                for (const auto& [key, member] : x) {
                    wire::put_string32(out, key);
                    encode_into(member, out, level + 1);
                }
            }
        },
        v.data);
}

std::size_t size_of(const Value& v) {
    return std::visit(
        [](const auto& x) -> std::size_t {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, double> || std::is_same_v<T, std::int64_t>) {
                return 9;
            } else if constexpr (std::is_same_v<T, bool>) {
                return 2;
            } else if constexpr (std::is_same_v<T, std::string>) {
                return 5 + x.size();
            } else if constexpr (std::is_same_v<T, Float32Array>) {
                return 5 + 4 * x.size();
            } else {
                std::size_t n = 5;
                for (const auto& [key, member] : x) n += 4 + key.size() + size_of(member);
                return n;
            }
        },
        v.data);
}

Value decode_at(wire::Reader& in, std::size_t level) {
    if (level > kMaxValueDepth) {
        throw CodecError(CodecError::Kind::DepthExceeded, "value nesting exceeds depth 8");
    }
    const std::uint8_t tag = in.u8();
    switch (static_cast<ValueTag>(tag)) {
        case ValueTag::Float64: return Value(in.f64());
        case ValueTag::Int64: return Value(static_cast<std::int64_t>(in.u64()));
        case ValueTag::Bool: {
            const std::uint8_t b = in.u8();
            if (b > 1) throw CodecError(CodecError::Kind::BadBool, "bool byte must be 0 or 1");
            return Value(b == 1);
        }
        case ValueTag::Utf8String: {
            std::string s = in.string32();
            if (!valid_utf8(s)) throw CodecError(CodecError::Kind::InvalidUtf8, "string is not valid UTF-8");
            return Value(std::move(s));
        }
        case ValueTag::Float32Array: {
            const std::uint32_t n = in.u32();
            in.require(std::size_t{n} * 4);
            Float32Array a(n);
            for (float& f : a) f = in.f32();
            return Value(std::move(a));
        }
        case ValueTag::Map: {
            const std::uint32_t n = in.u32();
            // every member needs at least a key length and a tag
            in.require(std::size_t{n} * 5);
            ValueMap m;
            const std::string* previous = nullptr;
            for (std::uint32_t i = 0; i < n; ++i) {
                std::string key = in.string32();
                if (!valid_utf8(key)) throw CodecError(CodecError::Kind::InvalidUtf8, "map key is not valid UTF-8");
                if (previous && !(*previous < key)) {
                    throw CodecError(CodecError::Kind::KeyOrder, "map keys must be unique and ascending");
                }
                Value member = decode_at(in, level + 1);
                auto it = m.emplace_hint(m.end(), std::move(key), std::move(member));
                previous = &it->first;
            }
            return Value(std::move(m));
        }
    }
    throw CodecError(CodecError::Kind::UnknownTag, "unknown value tag " + std::to_string(tag));
}

}  // namespace

void encode_value(const Value& v, std::vector<std::uint8_t>& out) { encode_into(v, out, 1); }

std::vector<std::uint8_t> encode_value(const Value& v) {
    std::vector<std::uint8_t> out;
    out.reserve(size_of(v));
    encode_into(v, out, 1);
    return out;
}

std::size_t encoded_size(const Value& v) { return size_of(v); }

Value decode_value_prefix(std::span<const std::uint8_t> bytes, std::size_t& offset) {
    wire::Reader in(bytes, offset);
    Value v = decode_at(in, 1);
    offset = in.offset();
    return v;
}

Value decode_value(std::span<const std::uint8_t> bytes) {
    std::size_t offset = 0;
    Value v = decode_value_prefix(bytes, offset);
    if (offset != bytes.size()) {
        throw CodecError(CodecError::Kind::TrailingBytes,
                         std::to_string(bytes.size() - offset) + " trailing bytes after value");
    }
    return v;
}

}  // namespace stage::bus
