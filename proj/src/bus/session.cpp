#include "stage/bus/session.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <future>
#include <map>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <spdlog/spdlog.h>

namespace stage::bus {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;

namespace {

constexpr std::string_view kHello = "_bus/hello";
constexpr std::string_view kSubs = "_bus/subs";
constexpr std::string_view kPing = "_bus/ping";

constexpr std::array<std::string_view, 6> kRoleNames = {"Mocaptor", "Manipulator", "DigitalArtist",
                                                        "Director", "Server",      "Console"};

double wall_seconds() {
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

struct Connection {
    explicit Connection(tcp::socket s) : socket(std::move(s)) {}

    tcp::socket socket;
    std::mutex write_mutex;
    std::array<std::uint8_t, 4> header{};
    std::vector<std::uint8_t> body;
    std::optional<std::uint32_t> peer;
    std::atomic<bool> open{true};

    bool write(std::span<const std::uint8_t> frame) {
        std::lock_guard lock(write_mutex);
        if (!open) return false;
        boost::system::error_code ec;
        asio::write(socket, asio::buffer(frame.data(), frame.size()), ec);
        if (ec) {
            open = false;
            return false;
        }
        return true;
    }
};

struct PeerState {
    PeerInfo info;
    std::shared_ptr<Connection> send;
};

}  // namespace

std::string_view to_string(Role role) { return kRoleNames[static_cast<std::size_t>(role)]; }

std::optional<Role> role_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kRoleNames.size(); ++i) {
        if (kRoleNames[i] == name) return static_cast<Role>(i);
    }
    return std::nullopt;
}

Endpoint parse_endpoint(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("endpoint '" + std::string(text) + "' needs host:port");
    Endpoint ep;
    if (colon > 0) ep.host = std::string(text.substr(0, colon));
    const std::string port(text.substr(colon + 1));
    std::size_t used = 0;
    unsigned long value = 0;
    try {
        value = std::stoul(port, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (port.empty() || used != port.size() || value > 65535) {
        throw std::invalid_argument("bad port in endpoint '" + std::string(text) + "'");
    }
    ep.port = static_cast<std::uint16_t>(value);
    return ep;
}

struct Session::Impl {
    SessionOptions options;
    asio::io_context io;
    std::optional<asio::executor_work_guard<asio::io_context::executor_type>> work;
    std::optional<tcp::acceptor> acceptor;
    std::thread thread;
    std::uint16_t port = 0;

    // Serializes publishing and dispatch: handlers never overlap, seq order equals send order.
    std::recursive_mutex bus_mutex;
    struct Subscription {
        SubscriptionId id;
        std::string pattern;
        std::shared_ptr<Handler> handler;
    };
    std::vector<Subscription> subscriptions;
    SubscriptionId next_subscription = 1;
    std::uint64_t seq = 0;
    std::function<void(std::uint32_t, double)> latency_hook;

    mutable std::mutex state_mutex;
    mutable std::condition_variable state_changed;
    std::vector<std::shared_ptr<Connection>> connections;
    std::map<std::uint32_t, PeerState> peers;
    std::vector<std::string> warnings;

    std::atomic<bool> joined{true};
    std::atomic<std::uint64_t> slow{0};
    std::atomic<std::uint64_t> published{0};
    std::atomic<std::uint64_t> received{0};

    explicit Impl(SessionOptions opts) : options(std::move(opts)) {}

    std::vector<std::uint8_t> control_frame(std::string_view topic, Value payload) const {
        EventEnvelope e{std::string(topic), options.self.id, 0, wall_seconds(), std::move(payload)};
        return encode_envelope(e);
    }

    // Caller holds bus_mutex.
    Value subscription_table() const {
        ValueMap patterns;
        for (const auto& s : subscriptions) patterns[s.pattern] = Value(true);
        return Value(ValueMap{{"patterns", Value(std::move(patterns))}});
    }

    void handshake(const std::shared_ptr<Connection>& c) {
        ValueMap hello{{"id", Value(static_cast<std::int64_t>(options.self.id))},
                       {"role", Value(std::string(to_string(options.self.role)))}};
        std::vector<std::uint8_t> subs;
        {
            std::lock_guard lock(bus_mutex);
            subs = control_frame(kSubs, subscription_table());
        }
        c->write(control_frame(kHello, Value(std::move(hello))));
        c->write(subs);
    }

    void broadcast_subscriptions() {
        const auto frame = control_frame(kSubs, subscription_table());
        std::vector<std::shared_ptr<Connection>> all;
        {
            std::lock_guard lock(state_mutex);
            all = connections;
        }
        for (const auto& c : all) c->write(frame);
    }

    void add_connection(tcp::socket socket) {
        boost::system::error_code ec;
        socket.set_option(tcp::no_delay(true), ec);
        auto c = std::make_shared<Connection>(std::move(socket));
        {
            std::lock_guard lock(state_mutex);
            connections.push_back(c);
        }
        handshake(c);
        read_header(c);
    }

    void drop(const std::shared_ptr<Connection>& c) {
        {
            std::lock_guard write_lock(c->write_mutex);
            c->open = false;
            boost::system::error_code ec;
            c->socket.close(ec);
        }
        std::lock_guard lock(state_mutex);
        std::erase(connections, c);
        if (c->peer) {
            auto it = peers.find(*c->peer);
            if (it != peers.end() && it->second.send == c) {
                it->second.send.reset();
                for (const auto& other : connections) {
                    if (other->peer == c->peer && other->open) {
                        it->second.send = other;
                        break;
                    }
                }
            }
        }
        state_changed.notify_all();
    }

    void read_header(const std::shared_ptr<Connection>& c) {
        asio::async_read(c->socket, asio::buffer(c->header), [this, c](boost::system::error_code ec, std::size_t) {
            if (ec) return drop(c);
            const std::uint32_t len = static_cast<std::uint32_t>(c->header[0]) |
                                      static_cast<std::uint32_t>(c->header[1]) << 8 |
                                      static_cast<std::uint32_t>(c->header[2]) << 16 |
                                      static_cast<std::uint32_t>(c->header[3]) << 24;
            if (len > kMaxEnvelopeSize) {
                spdlog::warn("bus: peer sent a {}-byte envelope, closing the link", len);
                return drop(c);
            }
            c->body.resize(len);
            read_body(c);
        });
    }

    void read_body(const std::shared_ptr<Connection>& c) {
        asio::async_read(c->socket, asio::buffer(c->body), [this, c](boost::system::error_code ec, std::size_t) {
            if (ec) return drop(c);
            try {
                handle(c, decode_envelope_body(c->body));
            } catch (const std::exception& e) {
                spdlog::warn("bus: malformed envelope ({}), closing the link", e.what());
                return drop(c);
            }
            read_header(c);
        });
    }

    void handle(const std::shared_ptr<Connection>& c, const EventEnvelope& e) {
        if (e.topic == kHello) {
            const Value* id = e.payload.find("id");
            const Value* role = e.payload.find("role");
            if (!id || !id->is<std::int64_t>()) throw std::runtime_error("hello without id");
            const auto peer_id = static_cast<std::uint32_t>(id->as<std::int64_t>());
            std::lock_guard lock(state_mutex);
            c->peer = peer_id;
            PeerState& p = peers[peer_id];
            p.info.id = peer_id;
            if (role && role->is<std::string>()) p.info.role = role_from_string(role->as<std::string>()).value_or(Role::Server);
            if (!p.send || !p.send->open) p.send = c;
            state_changed.notify_all();
            return;
        }
        if (e.topic == kSubs) {
            std::vector<std::string> patterns;
            if (const Value* table = e.payload.find("patterns"); table && table->is<ValueMap>()) {
                for (const auto& [pattern, flag] : table->as<ValueMap>()) patterns.push_back(pattern);
            }
            std::lock_guard lock(state_mutex);
            peers[e.sender].info.patterns = std::move(patterns);
            state_changed.notify_all();
            return;
        }
        if (e.topic == kPing) {
            const Value* pong = e.payload.find("pong");
            const Value* sent = e.payload.find("t");
            if (!sent || !sent->is<double>()) return;
            if (!pong || !pong->is<bool>() || !pong->as<bool>()) {
                ValueMap reply{{"t", *sent}, {"pong", Value(true)}};
                c->write(control_frame(kPing, Value(std::move(reply))));
                return;
            }
            const double rtt = wall_seconds() - sent->as<double>();
            std::function<void(std::uint32_t, double)> hook;
            {
                std::lock_guard lock(state_mutex);
                peers[e.sender].info.latency_s = rtt;
            }
            {
                std::lock_guard lock(bus_mutex);
                hook = latency_hook;
            }
            if (hook) hook(e.sender, rtt);
            return;
        }
        ++received;
        dispatch(e);
    }

    void dispatch(const EventEnvelope& e) {
        std::lock_guard lock(bus_mutex);
        std::vector<Subscription> matching;
        for (const auto& s : subscriptions) {
            if (topic_matches(s.pattern, e.topic)) matching.push_back(s);
        }
        for (const auto& s : matching) {
            const bool live = std::any_of(subscriptions.begin(), subscriptions.end(),
                                          [&](const Subscription& x) { return x.id == s.id; });
            if (!live) continue;
            if (options.watchdog) {
                const auto t0 = std::chrono::steady_clock::now();
                (*s.handler)(e);
                if (std::chrono::steady_clock::now() - t0 >= std::chrono::milliseconds(1)) ++slow;
            } else {
                (*s.handler)(e);
            }
        }
    }

    void accept() {
        acceptor->async_accept([this](boost::system::error_code ec, tcp::socket socket) {
            if (ec) return;  // acceptor closed
            add_connection(std::move(socket));
            accept();
        });
    }

    bool connect(const Endpoint& ep) {
        try {
            tcp::resolver resolver(io);
            const auto targets = resolver.resolve(ep.host, std::to_string(ep.port));
            tcp::socket socket(io);
            std::promise<boost::system::error_code> done;
            auto result = done.get_future();
            asio::async_connect(socket, targets,
                                [&done](boost::system::error_code ec, const tcp::endpoint&) { done.set_value(ec); });
            if (result.wait_for(options.connect_timeout) != std::future_status::ready) {
                asio::post(io, [&socket] {
                    boost::system::error_code ignored;
                    socket.cancel(ignored);
                });
                result.wait();
                warnings.push_back("peer " + ep.to_string() + ": connection timed out");
                return false;
            }
            if (const auto ec = result.get()) {
                warnings.push_back("peer " + ep.to_string() + ": " + ec.message());
                return false;
            }
            asio::post(io, [this, s = std::make_shared<tcp::socket>(std::move(socket))]() mutable {
                add_connection(std::move(*s));
            });
            return true;
        } catch (const std::exception& e) {
            warnings.push_back("peer " + ep.to_string() + ": " + e.what());
            return false;
        }
    }
};

Session::Session(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

Session::~Session() { leave(); }

std::unique_ptr<Session> join_session(const SessionOptions& options) {
    auto impl = std::make_unique<Session::Impl>(options);
    Session::Impl& s = *impl;
    s.work.emplace(s.io.get_executor());
    if (options.listen) {
        tcp::resolver resolver(s.io);
        const tcp::endpoint ep = *resolver.resolve(options.listen->host, std::to_string(options.listen->port)).begin();
        s.acceptor.emplace(s.io);
        s.acceptor->open(ep.protocol());
        s.acceptor->set_option(tcp::acceptor::reuse_address(true));
        s.acceptor->bind(ep);
        s.acceptor->listen();
        s.port = s.acceptor->local_endpoint().port();
        s.accept();
    }
    s.thread = std::thread([&s] { s.io.run(); });

    std::size_t connected = 0;
    for (const Endpoint& ep : options.peers) {
        if (s.connect(ep)) ++connected;
    }
    for (const std::string& w : s.warnings) spdlog::warn("bus: {}", w);

    auto session = std::unique_ptr<Session>(new Session(std::move(impl)));
    // wait for the hello of every reachable peer so subscriptions are known on return
    session->wait_for_peers(connected, options.connect_timeout);
    return session;
}

const StationDescriptor& Session::self() const { return impl_->options.self; }

std::uint16_t Session::listen_port() const { return impl_->port; }

void Session::publish(std::string_view topic, Value payload) {
    Impl& s = *impl_;
    if (!s.joined) throw BusError(BusError::Code::NotJoined, "session has left the bus");
    if (topic.starts_with("_bus/")) throw BusError(BusError::Code::BadTopic, "topics under _bus/ are reserved");

    std::lock_guard lock(s.bus_mutex);
    EventEnvelope e{std::string(topic), s.options.self.id, s.seq + 1, wall_seconds(), std::move(payload)};
    const std::vector<std::uint8_t> frame = encode_envelope(e);  // size check happens here
    ++s.seq;
    ++s.published;

    std::vector<std::shared_ptr<Connection>> targets;
    {
        std::lock_guard state(s.state_mutex);
        for (const auto& [id, peer] : s.peers) {
            if (!peer.send) continue;
            const auto& pats = peer.info.patterns;
            if (std::any_of(pats.begin(), pats.end(), [&](const std::string& p) { return topic_matches(p, e.topic); })) {
                targets.push_back(peer.send);
            }
        }
    }
    for (const auto& c : targets) c->write(frame);
    s.dispatch(e);
}

SubscriptionId Session::subscribe(std::string_view pattern, Handler handler) {
    if (!valid_pattern(pattern)) {
        throw BusError(BusError::Code::BadPattern, "malformed subscription pattern '" + std::string(pattern) + "'");
    }
    if (!impl_->joined) throw BusError(BusError::Code::NotJoined, "session has left the bus");
    std::lock_guard lock(impl_->bus_mutex);
    const SubscriptionId id = impl_->next_subscription++;
    impl_->subscriptions.push_back({id, std::string(pattern), std::make_shared<Handler>(std::move(handler))});
    impl_->broadcast_subscriptions();
    return id;
}

void Session::unsubscribe(SubscriptionId id) {
    std::lock_guard lock(impl_->bus_mutex);
    std::erase_if(impl_->subscriptions, [id](const Impl::Subscription& s) { return s.id == id; });
    if (impl_->joined) impl_->broadcast_subscriptions();
}

std::vector<PeerInfo> Session::peers() const {
    std::lock_guard lock(impl_->state_mutex);
    std::vector<PeerInfo> out;
    for (const auto& [id, p] : impl_->peers) out.push_back(p.info);
    return out;
}

std::vector<std::string> Session::warnings() const {
    std::lock_guard lock(impl_->state_mutex);
    return impl_->warnings;
}

bool Session::peer_subscribed(std::string_view topic) const {
    std::lock_guard lock(impl_->state_mutex);
    for (const auto& [id, p] : impl_->peers) {
        for (const auto& pattern : p.info.patterns) {
            if (p.send && topic_matches(pattern, topic)) return true;
        }
    }
    return false;
}

bool Session::wait_for_peer_subscription(std::string_view topic, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(impl_->state_mutex);
    return impl_->state_changed.wait_for(lock, timeout, [&] {
        for (const auto& [id, p] : impl_->peers) {
            for (const auto& pattern : p.info.patterns) {
                if (p.send && topic_matches(pattern, topic)) return true;
            }
        }
        return false;
    });
}

bool Session::wait_for_peers(std::size_t count, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(impl_->state_mutex);
    return impl_->state_changed.wait_for(lock, timeout, [&] {
        return static_cast<std::size_t>(std::count_if(impl_->peers.begin(), impl_->peers.end(),
                                                      [](const auto& kv) { return kv.second.send != nullptr; })) >= count;
    });
}

void Session::measure_latency() {
    Impl& s = *impl_;
    const auto frame = s.control_frame(kPing, Value(ValueMap{{"t", Value(wall_seconds())}, {"pong", Value(false)}}));
    std::vector<std::shared_ptr<Connection>> targets;
    {
        std::lock_guard lock(s.state_mutex);
        for (const auto& [id, p] : s.peers) {
            if (p.send) targets.push_back(p.send);
        }
    }
    for (const auto& c : targets) c->write(frame);
}

void Session::on_latency(std::function<void(std::uint32_t, double)> hook) {
    std::lock_guard lock(impl_->bus_mutex);
    impl_->latency_hook = std::move(hook);
}

std::uint64_t Session::slow_handlers() const { return impl_->slow; }
std::uint64_t Session::published() const { return impl_->published; }
std::uint64_t Session::received() const { return impl_->received; }

void Session::leave() {
    Impl& s = *impl_;
    if (!s.joined.exchange(false)) return;
    asio::post(s.io, [&s] {
        boost::system::error_code ec;
        if (s.acceptor) s.acceptor->close(ec);
        std::vector<std::shared_ptr<Connection>> all;
        {
            std::lock_guard lock(s.state_mutex);
            all = s.connections;
        }
        for (const auto& c : all) {
            std::lock_guard write_lock(c->write_mutex);
            c->open = false;
            c->socket.close(ec);
        }
    });
    s.work.reset();
    if (s.thread.joinable()) s.thread.join();
    std::lock_guard lock(s.state_mutex);
    s.connections.clear();
    for (auto& [id, p] : s.peers) p.send.reset();
}

}  // namespace stage::bus
