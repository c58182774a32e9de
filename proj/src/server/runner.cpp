#include "stage/server/runner.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "stage/server/json_bridge.hpp"
#include "stage/server/network.hpp"
#include "stage/server/packet.hpp"
#include "stage/server/stage.hpp"

namespace stage::server {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

constexpr const char* kCommandPatterns[] = {"pathfind/takeover", "pathfind/release", "preset/apply", "space/*",
                                            "composition/*",     "puppeteer/config", "gamepad/axes"};

}  // namespace

RunSummary run_server(const ServerOptions& options, const std::atomic<bool>& stop) {
    SceneConfig scene = options.scene ? load_scene(*options.scene) : default_scene();
    if (options.tick_rate) scene.tick_rate = *options.tick_rate;
    if (options.smooth_alpha) scene.smoothing_alpha = *options.smooth_alpha;
    if (options.listen_mocap) scene.network.mocap = options.listen_mocap;
    if (options.listen_bus) scene.network.bus = options.listen_bus;
    if (options.listen_console) scene.network.console = options.listen_console;
    scene.network.peers.insert(scene.network.peers.end(), options.peers.begin(), options.peers.end());

    Stage stage(scene);
    if (options.replay) {
        try {
            stage.attach_replay(options.replay_as, capture::parse_bvh(read_file(*options.replay)));
        } catch (const capture::BvhError& e) {
            throw std::runtime_error(options.replay->string() + ": " + e.what());
        }
    }

    std::vector<ScriptedCommand> script;
    if (options.script) script = parse_script(read_file(*options.script));
    std::map<Role, std::uint32_t> script_stations;
    for (const ScriptedCommand& c : script) {
        if (script_stations.contains(c.role)) continue;
        const auto existing = stage.stations().with_role(c.role);
        script_stations[c.role] =
            existing ? existing->id : stage.stations().register_station(c.role, "script-" + std::string(bus::to_string(c.role)));
    }

    std::optional<PacketLogWriter> record;
    if (options.record) record.emplace(*options.record);

    std::unique_ptr<bus::Session> session;
    if (scene.network.bus || !scene.network.peers.empty()) {
        bus::SessionOptions so;
        so.self = {scene.network.station_id, Role::Server};
        so.listen = scene.network.bus;
        so.peers = scene.network.peers;
        session = bus::join_session(so);
        spdlog::info("bus: station {} listening on port {}", so.self.id, session->listen_port());
        bus::Session* s = session.get();
        for (const char* pattern : kCommandPatterns) {
            s->subscribe(pattern, [&stage, s](const bus::EventEnvelope& e) {
                if (e.sender == s->self().id) return;
                Role role = Role::Console;
                for (const bus::PeerInfo& p : s->peers()) {
                    if (p.id == e.sender) role = p.role;
                }
                stage.submit({e.sender, role, e.topic, e.payload, static_cast<std::int64_t>(e.seq), CommandSource::Bus});
            });
        }
    }
    std::unique_ptr<MocapListener> mocap;
    if (scene.network.mocap) {
        mocap = std::make_unique<MocapListener>(stage, *scene.network.mocap);
        spdlog::info("mocap: listening on udp port {}", mocap->port());
    }
    std::unique_ptr<ConsoleGateway> console;
    if (scene.network.console) {
        console = std::make_unique<ConsoleGateway>(stage, *scene.network.console, scene.network.decimation);
        spdlog::info("console: listening on ws port {}", console->port());
    }

    const bool live = session || mocap || console;
    const bool paced = live || options.realtime;
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(stage.dt()));
    auto next = std::chrono::steady_clock::now();

    RunSummary summary;
    std::size_t script_at = 0;
    while (!stop) {
        if (options.ticks && summary.ticks >= *options.ticks) break;
        const bool scripted_done = script_at == script.size();
        if (!live && !options.ticks && scripted_done && stage.replays_finished() &&
            (options.replay || options.script)) {
            break;
        }
        if (!live && !options.ticks && !options.replay && !options.script) {
            spdlog::warn("nothing to run: no replay, script, listener or tick count");
            break;
        }

        while (script_at < script.size() && script[script_at].tick <= stage.next_tick()) {
            const ScriptedCommand& c = script[script_at++];
            stage.submit({script_stations.at(c.role), c.role, c.topic, c.payload, static_cast<std::int64_t>(c.line),
                          CommandSource::Script});
        }

        const FramePacket packet = stage.run_tick();
        ++summary.ticks;
        for (const CommandResult& r : packet.results) {
            if (r.ok) continue;
            ++summary.failed_commands;
            spdlog::info("tick {}: {} rejected: {} ({})", r.tick, r.topic, r.code, r.message);
        }
        if (record) record->write(packet);
        if (console) console->on_tick(packet);
        if (session) {
            try {
                session->publish("tick/frame", packet_summary(packet));
                for (const auto& [topic, value] : packet.events) session->publish(topic, value);
                for (const CommandResult& r : packet.results) {
                    if (r.source == CommandSource::Bus) session->publish("command/ack", result_to_value(r));
                }
            } catch (const bus::BusError& e) {
                spdlog::warn("bus: {}", e.what());
            }
        }

        if (paced) {
            next += period;
            const auto now = std::chrono::steady_clock::now();
            if (next > now) {
                std::this_thread::sleep_until(next);
            } else if (now - next > 10 * period) {
                next = now;  // fell far behind; do not try to catch up in a burst
            }
        }
    }
    if (record) record->flush();
    return summary;
}

}  // namespace stage::server
