#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "stage/bus/value.hpp"
#include "stage/server/stage.hpp"

namespace stage::server {

// Full packet: pose rotations as a Float32Array of (w, x, y, z) per joint and the
// root as a 3-element Float32Array, plus every metadata field.
bus::Value packet_to_value(const FramePacket& packet);

// The bus/console summary: everything but the pose.
bus::Value packet_summary(const FramePacket& packet);

bus::Value result_to_value(const CommandResult& result);

// Packet log: a sequence of [u32 little-endian length][encoded Value] records.
class PacketLogWriter {
public:
    // Throws std::runtime_error when the file cannot be created.
    explicit PacketLogWriter(const std::filesystem::path& path);
    void write(const FramePacket& packet);
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
    std::vector<std::uint8_t> buffer_;
};

// Throws bus::CodecError on a truncated or corrupt log.
std::vector<bus::Value> read_packet_log(const std::filesystem::path& path);

}  // namespace stage::server
