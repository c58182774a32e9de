#include "stage/server/network.hpp"

#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "stage/server/json_bridge.hpp"
#include "stage/server/packet.hpp"

namespace stage::server {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using udp = asio::ip::udp;

namespace {

template <typename Protocol>
typename Protocol::endpoint resolve(asio::io_context& io, const bus::Endpoint& ep) {
    typename Protocol::resolver resolver(io);
    return *resolver.resolve(ep.host, std::to_string(ep.port)).begin();
}

}  // namespace

struct MocapListener::Impl {
    Stage& stage;
    asio::io_context io;
    udp::socket socket{io};
    udp::endpoint from;
    std::array<std::uint8_t, capture::kMaxDeviceFrameSize + 1> buffer{};
    std::thread thread;
    std::atomic<std::uint64_t> accepted{0};
    std::atomic<std::uint64_t> rejected{0};

    Impl(Stage& s, const bus::Endpoint& listen) : stage(s) {
        const auto ep = resolve<udp>(io, listen);
        socket.open(ep.protocol());
        socket.bind(ep);
        receive();
        thread = std::thread([this] { io.run(); });
    }

    void receive() {
        socket.async_receive_from(asio::buffer(buffer), from, [this](boost::system::error_code ec, std::size_t n) {
            if (ec == asio::error::operation_aborted) return;
            if (!ec) {
                try {
                    auto frame = capture::decode_device_frame(std::span(buffer.data(), n));
                    if (stage.offer_device_frame(std::move(frame))) {
                        ++accepted;
                    } else {
                        ++rejected;
                    }
                } catch (const capture::FrameError& e) {
                    ++rejected;
                    spdlog::debug("mocap: dropped datagram: {}", e.what());
                }
            }
            receive();
        });
    }

    ~Impl() {
        asio::post(io, [this] {
            boost::system::error_code ignored;
            socket.close(ignored);
        });
        if (thread.joinable()) thread.join();
    }
};

MocapListener::MocapListener(Stage& stage, const bus::Endpoint& listen) : impl_(std::make_unique<Impl>(stage, listen)) {}
MocapListener::~MocapListener() = default;
std::uint16_t MocapListener::port() const { return impl_->socket.local_endpoint().port(); }
std::uint64_t MocapListener::accepted() const { return impl_->accepted; }
std::uint64_t MocapListener::rejected() const { return impl_->rejected; }

namespace {

class ConsoleSession : public std::enable_shared_from_this<ConsoleSession> {
public:
    ConsoleSession(tcp::socket socket, Stage& stage, std::function<void(std::shared_ptr<ConsoleSession>)> on_close)
        : ws_(std::move(socket)), stage_(stage), on_close_(std::move(on_close)) {}

    void start() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (ec) return self->close();
            self->read();
        });
    }

    std::optional<std::uint32_t> station() const {
        std::lock_guard lock(station_mutex_);
        return station_;
    }

    // Thread-safe; messages are written in order on the socket's executor.
    void send(std::string text) {
        asio::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
            self->outbox_.push_back(std::move(text));
            if (self->outbox_.size() == 1) self->write_next();
        });
    }

    void shutdown() {
        asio::post(ws_.get_executor(), [self = shared_from_this()] {
            beast::error_code ignored;
            beast::get_lowest_layer(self->ws_).socket().close(ignored);
        });
    }

private:
    void read() {
        ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return self->close();
            const std::string text = beast::buffers_to_string(self->in_.data());
            self->in_.consume(self->in_.size());
            self->handle(text);
            self->read();
        });
    }

    void write_next() {
        ws_.text(true);
        ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return self->close();
            self->outbox_.pop_front();
            if (!self->outbox_.empty()) self->write_next();
        });
    }

    void reply(std::string_view topic, std::int64_t seq, nlohmann::json payload) {
        send(nlohmann::json{{"topic", topic}, {"seq", seq}, {"payload", std::move(payload)}}.dump());
    }

    void refuse(std::string_view topic, std::int64_t seq, std::string_view code, std::string_view message) {
        reply("command/ack", seq,
              {{"topic", topic}, {"seq", seq}, {"ok", false}, {"code", code}, {"message", message}});
    }

    void handle(const std::string& text) {
        nlohmann::json msg;
        std::int64_t seq = 0;
        std::string topic;
        try {
            msg = nlohmann::json::parse(text);
            topic = msg.at("topic").get<std::string>();
            if (msg.contains("seq")) seq = msg.at("seq").get<std::int64_t>();
        } catch (const std::exception& e) {
            return refuse(topic, seq, "BadPayload", e.what());
        }
        const nlohmann::json payload = msg.contains("payload") ? msg["payload"] : nlohmann::json::object();

        if (topic == "station/register") {
            if (station()) return refuse(topic, seq, "AlreadyRegistered", "this connection already has a station");
            try {
                const auto role = bus::role_from_string(payload.at("role").get<std::string>());
                if (!role) return refuse(topic, seq, "BadPayload", "unknown role");
                const std::uint32_t id = stage_.stations().register_station(*role);
                {
                    std::lock_guard lock(station_mutex_);
                    station_ = id;
                    role_ = *role;
                }
                reply("station/registered", seq, {{"id", id}, {"role", bus::to_string(*role)}});
            } catch (const StationError& e) {
                refuse(topic, seq, "RoleTaken", e.what());
            } catch (const std::exception& e) {
                refuse(topic, seq, "BadPayload", e.what());
            }
            return;
        }
        const auto id = station();
        if (!id) return refuse(topic, seq, "NotRegistered", "send station/register first");
        Command c;
        c.station = *id;
        c.role = role_;
        c.topic = topic;
        c.seq = seq;
        c.source = CommandSource::Console;
        try {
            c.payload = value_from_json(payload);
        } catch (const JsonBridgeError& e) {
            return refuse(topic, seq, "BadPayload", e.what());
        }
        stage_.submit(std::move(c));
    }

    void close() {
        if (closed_.exchange(true)) return;
        if (const auto id = station()) {
            try {
                stage_.stations().unregister(*id);
            } catch (const StationError&) {
            }
        }
        on_close_(shared_from_this());
    }

    websocket::stream<beast::tcp_stream> ws_;
    Stage& stage_;
    std::function<void(std::shared_ptr<ConsoleSession>)> on_close_;
    beast::flat_buffer in_;
    std::deque<std::string> outbox_;
    mutable std::mutex station_mutex_;
    std::optional<std::uint32_t> station_;
    Role role_ = Role::Console;
    std::atomic<bool> closed_{false};
};

}  // namespace

struct ConsoleGateway::Impl {
    Stage& stage;
    std::size_t decimation;
    asio::io_context io;
    tcp::acceptor acceptor{io};
    std::thread thread;
    mutable std::mutex mutex;
    std::vector<std::shared_ptr<ConsoleSession>> sessions;

    Impl(Stage& s, const bus::Endpoint& listen, std::size_t every) : stage(s), decimation(std::max<std::size_t>(1, every)) {
        const auto ep = resolve<tcp>(io, listen);
        acceptor.open(ep.protocol());
        acceptor.set_option(tcp::acceptor::reuse_address(true));
        acceptor.bind(ep);
        acceptor.listen();
        accept();
        thread = std::thread([this] { io.run(); });
    }

    void accept() {
        acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
            if (ec) return;
            auto session = std::make_shared<ConsoleSession>(std::move(socket), stage, [this](auto closed) {
                std::lock_guard lock(mutex);
                std::erase(sessions, closed);
            });
            {
                std::lock_guard lock(mutex);
                sessions.push_back(session);
            }
            session->start();
            accept();
        });
    }

    ~Impl() {
        std::vector<std::shared_ptr<ConsoleSession>> all;
        {
            std::lock_guard lock(mutex);
            all = sessions;
        }
        asio::post(io, [this] {
            boost::system::error_code ignored;
            acceptor.close(ignored);
        });
        for (const auto& s : all) s->shutdown();
        asio::post(io, [this] { io.stop(); });
        if (thread.joinable()) thread.join();
    }
};

ConsoleGateway::ConsoleGateway(Stage& stage, const bus::Endpoint& listen, std::size_t decimation)
    : impl_(std::make_unique<Impl>(stage, listen, decimation)) {}
ConsoleGateway::~ConsoleGateway() = default;

std::uint16_t ConsoleGateway::port() const { return impl_->acceptor.local_endpoint().port(); }

std::size_t ConsoleGateway::clients() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->sessions.size();
}

void ConsoleGateway::on_tick(const FramePacket& packet) {
    std::vector<std::shared_ptr<ConsoleSession>> all;
    {
        std::lock_guard lock(impl_->mutex);
        all = impl_->sessions;
    }
    if (all.empty()) return;
    for (const CommandResult& r : packet.results) {
        if (r.source != CommandSource::Console) continue;
        const std::string text =
            nlohmann::json{{"topic", "command/ack"}, {"seq", r.seq}, {"payload", value_to_json(result_to_value(r))}}.dump();
        for (const auto& s : all) {
            if (s->station() == r.station) s->send(text);
        }
    }
    if (packet.tick % impl_->decimation != 0) return;
    const std::string summary = nlohmann::json{{"topic", "tick/frame"},
                                               {"seq", static_cast<std::int64_t>(packet.tick)},
                                               {"payload", value_to_json(packet_summary(packet))}}
                                    .dump();
    for (const auto& s : all) {
        if (s->station()) s->send(summary);
    }
}

}  // namespace stage::server
