#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

#include "stage/bus/session.hpp"
#include "stage/server/stage.hpp"

namespace stage::server {

// Receives device datagrams on UDP and deposits decoded frames into the stage's
// mailboxes. Runs its own network thread.
class MocapListener {
public:
    MocapListener(Stage& stage, const bus::Endpoint& listen);
    ~MocapListener();
    MocapListener(const MocapListener&) = delete;
    MocapListener& operator=(const MocapListener&) = delete;

    std::uint16_t port() const;
    std::uint64_t accepted() const;
    std::uint64_t rejected() const;  // undecodable, unknown stream or out of order

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// WebSocket JSON gateway for operator consoles. Every message is
// {"topic": string, "seq": number, "payload": json}. A connection must open with
// station/register {"role": ...}; afterwards its messages become stage commands.
// Results come back as command/ack, and tick/frame summaries stream every
// `decimation` ticks.
class ConsoleGateway {
public:
    ConsoleGateway(Stage& stage, const bus::Endpoint& listen, std::size_t decimation);
    ~ConsoleGateway();
    ConsoleGateway(const ConsoleGateway&) = delete;
    ConsoleGateway& operator=(const ConsoleGateway&) = delete;

    std::uint16_t port() const;
    std::size_t clients() const;

    // Called by the tick loop after each tick.
    void on_tick(const FramePacket& packet);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace stage::server
