#include <atomic>
#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "stage/server/runner.hpp"
#include "stage/server/scene.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
    using stage::server::ServerOptions;
    ServerOptions opts;
    std::string scene, replay, script, record, mocap, bus, console;
    std::vector<std::string> peers;
    double tick_rate = 0.0;
    double smooth_alpha = -1.0;
    std::uint64_t ticks = 0;
    bool verbose = false;

    CLI::App app{"Live stage server: mocap ingest, retargeting, puppeteering and avatar control"};
    app.add_option("--scene", scene, "scene file (built-in default stage when omitted)")->check(CLI::ExistingFile);
    app.add_option("--tick-rate", tick_rate, "ticks per second, overrides the scene")->check(CLI::Range(10.0, 240.0));
    app.add_option("--replay", replay, "BVH clip to replay as an acting input")->check(CLI::ExistingFile);
    app.add_option("--replay-as", opts.replay_as, "input id of the replay")->capture_default_str();
    app.add_option("--smooth-alpha", smooth_alpha, "device smoothing weight of the incoming frame, 1 disables smoothing")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--listen-mocap", mocap, "UDP host:port for device frames");
    app.add_option("--listen-bus", bus, "TCP host:port for bus peers");
    app.add_option("--peer", peers, "bus peer host:port (repeatable)");
    app.add_option("--listen-console", console, "WebSocket host:port for operator consoles");
    app.add_option("--script", script, "tick-indexed command script")->check(CLI::ExistingFile);
    app.add_option("--record", record, "packet log to write");
    app.add_option("--ticks", ticks, "stop after this many ticks");
    app.add_flag("--realtime", opts.realtime, "pace ticks in real time even without listeners");
    app.add_flag("-v,--verbose", verbose, "debug logging");
    CLI11_PARSE(app, argc, argv);

    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
    try {
        if (!scene.empty()) opts.scene = scene;
        if (tick_rate > 0.0) opts.tick_rate = tick_rate;
        if (smooth_alpha >= 0.0) opts.smooth_alpha = smooth_alpha;
        if (!replay.empty()) opts.replay = replay;
        if (!script.empty()) opts.script = script;
        if (!record.empty()) opts.record = record;
        if (!mocap.empty()) opts.listen_mocap = stage::bus::parse_endpoint(mocap);
        if (!bus.empty()) opts.listen_bus = stage::bus::parse_endpoint(bus);
        if (!console.empty()) opts.listen_console = stage::bus::parse_endpoint(console);
        for (const auto& p : peers) opts.peers.push_back(stage::bus::parse_endpoint(p));
        if (app.count("--ticks")) opts.ticks = ticks;

        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        const auto summary = stage::server::run_server(opts, g_stop);
        spdlog::info("ran {} ticks, {} commands rejected", summary.ticks, summary.failed_commands);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
