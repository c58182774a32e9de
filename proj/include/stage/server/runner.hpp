#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stage/bus/session.hpp"

namespace stage::server {

struct ServerOptions {
    std::optional<std::filesystem::path> scene;  // built-in default scene when absent
    std::optional<double> tick_rate;             // overrides the scene
    std::optional<double> smooth_alpha;          // overrides the scene
    std::optional<std::filesystem::path> replay;
    std::string replay_as = "replay";
    std::optional<bus::Endpoint> listen_mocap;
    std::optional<bus::Endpoint> listen_bus;
    std::optional<bus::Endpoint> listen_console;
    std::vector<bus::Endpoint> peers;
    std::optional<std::filesystem::path> script;
    std::optional<std::filesystem::path> record;
    std::optional<std::uint64_t> ticks;  // stop after this many ticks
    bool realtime = false;               // pace offline runs too
};

struct RunSummary {
    std::uint64_t ticks = 0;
    std::uint64_t failed_commands = 0;
};

// Runs the tick loop until `stop` is set, --ticks is reached, or, for a session
// without network listeners, the replay and script are both exhausted. Ticks are
// paced at the tick rate whenever a listener is active or realtime is set.
RunSummary run_server(const ServerOptions& options, const std::atomic<bool>& stop);

}  // namespace stage::server
