#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stage/core/math.hpp"

namespace stage::capture {

// Wire layout of one device datagram (little-endian):
//   0-3    magic "AKN1"
//   4      version (1)
//   5-12   stream id, 8 ASCII bytes, space padded
//   13-14  joint count (u16, 1..32)
//   15-22  sequence (u64)
//   23-30  timestamp seconds (f64)
//   31-42  root translation, 3 x f32 meters
//   43-    joint count x quaternion (x, y, z, w as 4 x f32)
inline constexpr std::array<std::uint8_t, 4> kDeviceMagic = {'A', 'K', 'N', '1'};
inline constexpr std::uint8_t kDeviceVersion = 1;
inline constexpr std::size_t kDeviceHeaderSize = 43;
inline constexpr std::size_t kDeviceQuatSize = 16;
inline constexpr std::size_t kMaxDeviceJoints = 32;
inline constexpr std::size_t kDeviceStreamIdSize = 8;
inline constexpr std::size_t kMaxDeviceFrameSize = kDeviceHeaderSize + kMaxDeviceJoints * kDeviceQuatSize;

struct DeviceFrame {
    std::string stream_id;  // trailing padding removed
    std::vector<Quat> local_rotations;
    Vec3 root_translation;
    std::uint64_t sequence = 0;
    double timestamp = 0.0;

    std::size_t joint_count() const { return local_rotations.size(); }

    friend bool operator==(const DeviceFrame&, const DeviceFrame&) = default;
};

class FrameError : public std::runtime_error {
public:
    enum class Code { BadMagic, BadVersion, Truncated, TrailingBytes, BadJointCount, BadStreamId, NonUnitQuaternion };

    FrameError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

// Quaternions within 1e-3 of unit norm are accepted; those not already unit at
// f32 precision are renormalized. Anything further off is rejected.
DeviceFrame decode_device_frame(std::span<const std::uint8_t> bytes);

}  // namespace stage::capture
