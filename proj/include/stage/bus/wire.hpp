#pragma once

#include <bit>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stage/bus/value.hpp"

// Little-endian primitives shared by the value and envelope codecs.
namespace stage::bus::wire {

inline std::uint32_t checked_u32(std::size_t n) {
    if (n > std::numeric_limits<std::uint32_t>::max()) {
        throw CodecError(CodecError::Kind::TooLarge, "length does not fit in 32 bits");
    }
    return static_cast<std::uint32_t>(n);
}

template <typename UInt>
void put_le(std::vector<std::uint8_t>& out, UInt v) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) { put_le(out, v); }
inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) { put_le(out, v); }
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) { put_le(out, v); }
inline void put_f32(std::vector<std::uint8_t>& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::vector<std::uint8_t>& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_string32(std::vector<std::uint8_t>& out, std::string_view s) {
    put_u32(out, checked_u32(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes, std::size_t offset = 0) : bytes_(bytes), at_(offset) {}

    std::size_t offset() const { return at_; }
    std::size_t remaining() const { return bytes_.size() - at_; }

    void require(std::size_t n) const {
        if (n > remaining()) {
            throw CodecError(CodecError::Kind::Truncated, "need " + std::to_string(n) + " bytes at offset " +
                                                              std::to_string(at_) + ", have " +
                                                              std::to_string(remaining()));
        }
    }

    template <typename UInt>
    UInt le() {
        require(sizeof(UInt));
        UInt v = 0;
        for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(bytes_[at_ + i]) << (8 * i);
        at_ += sizeof(UInt);
        return v;
    }

    std::uint8_t u8() { return le<std::uint8_t>(); }
    std::uint16_t u16() { return le<std::uint16_t>(); }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::string bytes(std::size_t n) {
        require(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + at_), n);
        at_ += n;
        return s;
    }
    std::string string32() { return bytes(u32()); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t at_;
};

}  // namespace stage::bus::wire
