#include "stage/capture/device_frame.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace stage::capture {

namespace {

template <typename UInt>
UInt read_le(std::span<const std::uint8_t> bytes, std::size_t at) {
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(bytes[at + i]) << (8 * i);
    return v;
}

double read_f32(std::span<const std::uint8_t> bytes, std::size_t at) {
    return static_cast<double>(std::bit_cast<float>(read_le<std::uint32_t>(bytes, at)));
}

}  // namespace

DeviceFrame decode_device_frame(std::span<const std::uint8_t> bytes) {
    using Code = FrameError::Code;
    if (bytes.size() < kDeviceMagic.size()) {
        throw FrameError(Code::Truncated, "datagram of " + std::to_string(bytes.size()) + " bytes has no magic");
    }
    if (!std::equal(kDeviceMagic.begin(), kDeviceMagic.end(), bytes.begin())) {
        throw FrameError(Code::BadMagic, "bad magic");
    }
    if (bytes.size() < kDeviceHeaderSize) {
        throw FrameError(Code::Truncated, "datagram of " + std::to_string(bytes.size()) + " bytes is shorter than the header");
    }
    if (bytes[4] != kDeviceVersion) {
        throw FrameError(Code::BadVersion, "unsupported version " + std::to_string(bytes[4]));
    }

    DeviceFrame frame;
    for (std::size_t i = 0; i < kDeviceStreamIdSize; ++i) {
        const auto c = bytes[5 + i];
        if (c < 0x20 || c > 0x7E) throw FrameError(Code::BadStreamId, "stream id is not printable ASCII");
        frame.stream_id.push_back(static_cast<char>(c));
    }
    while (!frame.stream_id.empty() && frame.stream_id.back() == ' ') frame.stream_id.pop_back();
    if (frame.stream_id.empty()) throw FrameError(Code::BadStreamId, "stream id is blank");

    const std::size_t joints = read_le<std::uint16_t>(bytes, 13);
    if (joints == 0 || joints > kMaxDeviceJoints) {
        throw FrameError(Code::BadJointCount,
                         "joint count " + std::to_string(joints) + " outside 1.." + std::to_string(kMaxDeviceJoints));
    }
    const std::size_t expected = kDeviceHeaderSize + joints * kDeviceQuatSize;
    if (bytes.size() < expected) {
        throw FrameError(Code::Truncated, "header declares " + std::to_string(expected) + " bytes, datagram has " +
                                              std::to_string(bytes.size()));
    }
    if (bytes.size() > expected) {
        throw FrameError(Code::TrailingBytes, std::to_string(bytes.size() - expected) + " bytes after the last joint");
    }

    frame.sequence = read_le<std::uint64_t>(bytes, 15);
    frame.timestamp = std::bit_cast<double>(read_le<std::uint64_t>(bytes, 23));
    frame.root_translation = {read_f32(bytes, 31), read_f32(bytes, 35), read_f32(bytes, 39)};
    if (!std::isfinite(frame.timestamp) || !std::isfinite(frame.root_translation.x) ||
        !std::isfinite(frame.root_translation.y) || !std::isfinite(frame.root_translation.z)) {
        throw FrameError(Code::Truncated, "non-finite header value");
    }

    frame.local_rotations.reserve(joints);
    for (std::size_t j = 0; j < joints; ++j) {
        const std::size_t at = kDeviceHeaderSize + j * kDeviceQuatSize;
        Quat q{read_f32(bytes, at + 12), read_f32(bytes, at), read_f32(bytes, at + 4), read_f32(bytes, at + 8)};
        const double n = q.norm();
        if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-3) {
            throw FrameError(Code::NonUnitQuaternion, "joint " + std::to_string(j) + " quaternion norm " + std::to_string(n));
        }
        // f32 rounding of a unit quaternion leaves |n^2 - 1| below ~3e-7
        if (std::abs(q.dot(q) - 1.0) > 1e-6) q = q.normalized();
        frame.local_rotations.push_back(q);
    }
    return frame;
}

}  // namespace stage::capture
