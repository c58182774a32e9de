#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stage/bus/envelope.hpp"

namespace stage::bus {

enum class Role { Mocaptor, Manipulator, DigitalArtist, Director, Server, Console };

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view name);

struct StationDescriptor {
    std::uint32_t id = 0;
    Role role = Role::Server;
};

// host:port; port 0 on the listen address picks a free port.
struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    std::string to_string() const { return host + ":" + std::to_string(port); }
};

// Parses "host:port" or ":port". Throws std::invalid_argument.
Endpoint parse_endpoint(std::string_view text);

struct SessionOptions {
    StationDescriptor self;
    std::optional<Endpoint> listen;  // none: outbound connections only
    std::vector<Endpoint> peers;
    std::chrono::milliseconds connect_timeout{1000};
    // Counts handlers that run for 1 ms or longer.
    bool watchdog = false;
};

struct PeerInfo {
    std::uint32_t id = 0;
    Role role = Role::Server;
    std::vector<std::string> patterns;
    std::optional<double> latency_s;  // last measured round trip
};

using Handler = std::function<void(const EventEnvelope&)>;
using SubscriptionId = std::uint64_t;

// One station's membership in the bus mesh. Each station connects directly to its
// peers; there is no broker. Local handlers run synchronously inside publish(),
// remote envelopes are dispatched on the session's network thread, and no two
// handlers of one session ever run at the same time.
class Session {
public:
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    const StationDescriptor& self() const;
    // Actual listening port, 0 when not listening.
    std::uint16_t listen_port() const;

    // Sends to every peer subscribed to the topic and runs matching local handlers.
    // Throws BusError(PayloadTooLarge) before anything is sent, BusError(NotJoined)
    // after leave().
    void publish(std::string_view topic, Value payload);

    // Throws BusError(BadPattern).
    SubscriptionId subscribe(std::string_view pattern, Handler handler);
    void unsubscribe(SubscriptionId id);

    std::vector<PeerInfo> peers() const;
    // One line per peer that could not be reached at join time.
    std::vector<std::string> warnings() const;

    // True once some peer has announced a subscription matching `topic`.
    bool peer_subscribed(std::string_view topic) const;
    bool wait_for_peer_subscription(std::string_view topic, std::chrono::milliseconds timeout) const;
    bool wait_for_peers(std::size_t count, std::chrono::milliseconds timeout) const;

    // Sends a ping to every peer; round trips are reported through peers() and the hook.
    void measure_latency();
    void on_latency(std::function<void(std::uint32_t peer, double seconds)> hook);

    std::uint64_t slow_handlers() const;
    std::uint64_t published() const;
    std::uint64_t received() const;

    void leave();

    friend std::unique_ptr<Session> join_session(const SessionOptions& options);

private:
    struct Impl;
    explicit Session(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

// Connects to every listed peer. Unreachable peers are reported through warnings()
// and the session carries on with the rest.
std::unique_ptr<Session> join_session(const SessionOptions& options);

}  // namespace stage::bus
