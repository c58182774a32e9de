#include "stage/server/packet.hpp"

#include <cstdio>
#include <iterator>

#include "stage/bus/wire.hpp"

namespace stage::server {

using bus::Float32Array;
using bus::Value;
using bus::ValueMap;

namespace {

Value vec3(const Vec3& v) {
    return Value(Float32Array{static_cast<float>(v.x), static_cast<float>(v.y), static_cast<float>(v.z)});
}

std::string_view source_name(CommandSource s) {
    switch (s) {
        case CommandSource::Script: return "script";
        case CommandSource::Console: return "console";
        case CommandSource::Bus: return "bus";
        case CommandSource::Local: return "local";
    }
    return "local";
}

ValueMap summary_map(const FramePacket& p) {
    ValueMap m;
    m["tick"] = Value(static_cast<std::int64_t>(p.tick));
    m["time"] = Value(p.time);
    m["owner"] = Value(std::string(pathfind::to_string(p.owner)));
    m["disposition"] = Value(ValueMap{{"x", Value(p.disposition.position.x)},
                                      {"z", Value(p.disposition.position.z)},
                                      {"yaw", Value(p.disposition.yaw_deg)}});

    const CompositionState& c = p.composition;
    ValueMap lights;
    for (const Light& l : c.lights) {
        lights[l.id] = Value(ValueMap{{"position", vec3(l.position)}, {"intensity", Value(l.intensity)}});
    }
    ValueMap params;
    for (const auto& [name, value] : c.params) params[name] = Value(value);
    m["composition"] = Value(ValueMap{
        {"mode", Value(std::string(to_string(c.mode)))},
        {"camera", Value(ValueMap{{"position", vec3(c.camera.position)},
                                  {"yaw", Value(c.camera.yaw_deg)},
                                  {"pitch", Value(c.camera.pitch_deg)},
                                  {"fov", Value(c.camera.fov_deg)}})},
        {"lights", Value(std::move(lights))},
        {"params", Value(std::move(params))},
    });

    ValueMap health;
    for (const auto& [id, h] : p.health) health[id] = Value(std::string(to_string(h)));
    m["health"] = Value(std::move(health));

    if (p.path) {
        m["path"] = Value(ValueMap{{"progress", Value(p.path->progress)},
                                   {"total", Value(p.path->total)},
                                   {"complete", Value(p.path->complete)}});
    }
    if (!p.results.empty()) {
        ValueMap results;
        char key[16];
        for (std::size_t i = 0; i < p.results.size(); ++i) {
            std::snprintf(key, sizeof key, "%04zu", i);
            results[key] = result_to_value(p.results[i]);
        }
        m["results"] = Value(std::move(results));
    }
    return m;
}

}  // namespace

Value result_to_value(const CommandResult& r) {
    ValueMap m{{"tick", Value(static_cast<std::int64_t>(r.tick))},
               {"station", Value(static_cast<std::int64_t>(r.station))},
               {"source", Value(std::string(source_name(r.source)))},
               {"seq", Value(r.seq)},
               {"topic", Value(r.topic)},
               {"ok", Value(r.ok)}};
    if (!r.ok) {
        m["code"] = Value(r.code);
        m["message"] = Value(r.message);
    }
    return Value(std::move(m));
}

Value packet_summary(const FramePacket& packet) { return Value(summary_map(packet)); }

Value packet_to_value(const FramePacket& packet) {
    ValueMap m = summary_map(packet);
    Float32Array rotations;
    rotations.reserve(packet.avatar_pose.local_rotations.size() * 4);
    for (const Quat& q : packet.avatar_pose.local_rotations) {
        rotations.insert(rotations.end(), {static_cast<float>(q.w), static_cast<float>(q.x), static_cast<float>(q.y),
                                           static_cast<float>(q.z)});
    }
    m["pose"] = Value(ValueMap{{"rotations", Value(std::move(rotations))},
                               {"root", vec3(packet.avatar_pose.root_translation)}});
    return Value(std::move(m));
}

PacketLogWriter::PacketLogWriter(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot create packet log " + path.string());
}

void PacketLogWriter::write(const FramePacket& packet) {
    buffer_.clear();
    buffer_.resize(4);
    bus::encode_value(packet_to_value(packet), buffer_);
    const auto len = bus::wire::checked_u32(buffer_.size() - 4);
    for (std::size_t i = 0; i < 4; ++i) buffer_[i] = static_cast<std::uint8_t>(len >> (8 * i));
    out_.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
    if (!out_) throw std::runtime_error("packet log write failed");
}

std::vector<Value> read_packet_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open packet log " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::vector<Value> out;
    bus::wire::Reader reader(bytes);
    while (reader.remaining() > 0) {
        const std::uint32_t len = reader.u32();
        reader.require(len);
        const std::size_t at = reader.offset();
        out.push_back(bus::decode_value(std::span(bytes).subspan(at, len)));
        reader.bytes(len);
    }
    return out;
}

}  // namespace stage::server
