#include <doctest.h>

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "stage/bus/envelope.hpp"
#include "stage/bus/session.hpp"
#include "stage/bus/value.hpp"
#include "support/fixtures.hpp"

using namespace stage;
using namespace stage::bus;
using namespace std::chrono_literals;
using stage::testing::Rng;

namespace {

CodecError::Kind decode_error(std::vector<std::uint8_t> bytes) {
    try {
        decode_value(bytes);
    } catch (const CodecError& e) {
        return e.kind();
    }
    FAIL("expected a CodecError");
    return CodecError::Kind::Truncated;
}

// Payload whose envelope body is exactly `body` bytes on `topic`.
EventEnvelope envelope_of_size(std::size_t body, const std::string& topic = "t/x") {
    EventEnvelope e{topic, 7, 1, 0.5, Value(std::string())};
    const std::size_t fixed = envelope_body_size(e);
    e.payload = Value(std::string(body - fixed, 'a'));
    return e;
}

Value nest(int levels) {
    Value v(std::int64_t{1});
    for (int i = 1; i < levels; ++i) v = Value(ValueMap{{"k", v}});
    return v;
}

struct Inbox {
    std::mutex m;
    std::condition_variable cv;
    std::vector<EventEnvelope> got;
    void push(const EventEnvelope& e) {
        std::lock_guard l(m);
        got.push_back(e);
        cv.notify_all();
    }
    bool wait_for(std::size_t n, std::chrono::milliseconds t = 5000ms) {
        std::unique_lock l(m);
        return cv.wait_for(l, t, [&] { return got.size() >= n; });
    }
};

}  // namespace

TEST_CASE("codec: fixed byte layout") {
    CHECK(encode_value(Value(true)) == std::vector<std::uint8_t>{0x03, 0x01});
    CHECK(encode_value(Value(std::int64_t{-2})) ==
          std::vector<std::uint8_t>{0x02, 0xFE, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF});
    CHECK(encode_value(Value("hi")) == std::vector<std::uint8_t>{0x04, 2, 0, 0, 0, 'h', 'i'});
    CHECK(encode_value(Value(1.0)) == std::vector<std::uint8_t>{0x01, 0, 0, 0, 0, 0, 0, 0xF0, 0x3F});
    CHECK(encode_value(Value(Float32Array{1.0f})) == std::vector<std::uint8_t>{0x05, 1, 0, 0, 0, 0, 0, 0x80, 0x3F});
    CHECK(encode_value(Value(ValueMap{{"b", Value(false)}, {"a", Value(true)}})) ==
          std::vector<std::uint8_t>{0x06, 2, 0, 0, 0, 1, 0, 0, 0, 'a', 0x03, 1, 1, 0, 0, 0, 'b', 0x03, 0});
}

TEST_CASE("codec: random values round-trip to identical bytes") {
    Rng rng(50);
    for (int i = 0; i < 2000; ++i) {
        const Value v = testing::random_value(rng, kMaxValueDepth);
        REQUIRE(depth(v) <= kMaxValueDepth);
        const auto bytes = encode_value(v);
        CHECK(bytes.size() == encoded_size(v));
        const Value back = decode_value(bytes);
        CHECK(back == v);
        CHECK(encode_value(back) == bytes);
    }
}

TEST_CASE("codec: NaN compares equal to itself by bits") {
    const Value nan(std::numeric_limits<double>::quiet_NaN());
    CHECK(nan == nan);
    CHECK_FALSE(Value(0.0) == Value(-0.0));
    CHECK_FALSE(Value(std::int64_t{1}) == Value(1.0));
}

TEST_CASE("codec: depth limit") {
    CHECK(depth(nest(8)) == 8);
    CHECK_NOTHROW(encode_value(nest(8)));
    try {
        encode_value(nest(9));
        FAIL("expected DepthExceeded");
    } catch (const CodecError& e) {
        CHECK(e.kind() == CodecError::Kind::DepthExceeded);
    }
    // hand-built 9-deep bytes
    std::vector<std::uint8_t> b;
    for (int i = 0; i < 8; ++i) b.insert(b.end(), {0x06, 1, 0, 0, 0, 1, 0, 0, 0, 'k'});
    b.insert(b.end(), {0x03, 0x01});
    CHECK(decode_error(b) == CodecError::Kind::DepthExceeded);
}

TEST_CASE("codec: malformed input") {
    CHECK(decode_error({}) == CodecError::Kind::Truncated);
    CHECK(decode_error({0x07}) == CodecError::Kind::UnknownTag);
    CHECK(decode_error({0x00}) == CodecError::Kind::UnknownTag);
    CHECK(decode_error({0x03, 0x02}) == CodecError::Kind::BadBool);
    CHECK(decode_error({0x03, 0x01, 0x00}) == CodecError::Kind::TrailingBytes);
    CHECK(decode_error({0x04, 5, 0, 0, 0, 'a'}) == CodecError::Kind::Truncated);
    CHECK(decode_error({0x04, 2, 0, 0, 0, 0xC0, 0x80}) == CodecError::Kind::InvalidUtf8);
    CHECK(decode_error({0x05, 0xFF, 0xFF, 0xFF, 0x7F}) == CodecError::Kind::Truncated);
    // keys out of order, and duplicated
    CHECK(decode_error({0x06, 2, 0, 0, 0, 1, 0, 0, 0, 'b', 0x03, 1, 1, 0, 0, 0, 'a', 0x03, 0}) ==
          CodecError::Kind::KeyOrder);
    CHECK(decode_error({0x06, 2, 0, 0, 0, 1, 0, 0, 0, 'a', 0x03, 1, 1, 0, 0, 0, 'a', 0x03, 0}) ==
          CodecError::Kind::KeyOrder);
}

TEST_CASE("codec: every truncation of a valid encoding is rejected") {
    Rng rng(51);
    for (int i = 0; i < 200; ++i) {
        const auto bytes = encode_value(testing::random_value(rng, 4));
        for (std::size_t n = 0; n < bytes.size(); ++n) {
            CHECK_THROWS_AS(decode_value(std::span(bytes.data(), n)), CodecError);
        }
    }
}

TEST_CASE("codec: random garbage never crashes") {
    Rng rng(52);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int i = 0; i < 5000; ++i) {
        std::vector<std::uint8_t> b(std::uniform_int_distribution<std::size_t>(0, 40)(rng));
        for (auto& x : b) x = static_cast<std::uint8_t>(byte(rng));
        if (!b.empty()) b[0] = static_cast<std::uint8_t>(1 + byte(rng) % 6);
        try {
            const Value v = decode_value(b);
            CHECK(encode_value(v) == b);  // anything accepted is canonical
        } catch (const CodecError&) {
        }
    }
}

TEST_CASE("utf-8 validation") {
    CHECK(valid_utf8("plain"));
    CHECK(valid_utf8("\xc3\xa9\xe2\x82\xac\xf0\x9f\x8e\xad"));
    CHECK_FALSE(valid_utf8("\xc3"));
    CHECK_FALSE(valid_utf8("\xc0\xaf"));              // overlong
    CHECK_FALSE(valid_utf8("\xed\xa0\x80"));          // surrogate
    CHECK_FALSE(valid_utf8("\xf4\x90\x80\x80"));      // above U+10FFFF
    CHECK_FALSE(valid_utf8("\xe2\x82"));
}

TEST_CASE("envelopes: layout, cap and round trip") {
    const EventEnvelope e{"pathfind/takeover", 3, 42, 1.25, Value(ValueMap{{"goal", Value(Float32Array{1, 2})}})};
    const auto frame = encode_envelope(e);
    const std::uint32_t len = frame[0] | frame[1] << 8 | frame[2] << 16 | frame[3] << 24;
    CHECK(len == frame.size() - 4);
    CHECK(len == envelope_body_size(e));
    CHECK(decode_envelope_body(std::span(frame).subspan(4)) == e);

    CHECK(encode_envelope(envelope_of_size(kMaxEnvelopeSize)).size() == kMaxEnvelopeSize + 4);
    try {
        encode_envelope(envelope_of_size(kMaxEnvelopeSize + 1));
        FAIL("expected PayloadTooLarge");
    } catch (const BusError& err) {
        CHECK(err.code() == BusError::Code::PayloadTooLarge);
    }
    CHECK_THROWS_AS(encode_envelope({"bad topic", 1, 1, 0.0, {}}), BusError);
    auto trailing = frame;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_envelope_body(std::span(trailing).subspan(4)), CodecError);
}

TEST_CASE("topics and patterns") {
    CHECK(valid_topic("tick/frame"));
    CHECK_FALSE(valid_topic(""));
    CHECK_FALSE(valid_topic("a b"));
    CHECK_FALSE(valid_topic("a/*"));
    CHECK(valid_pattern("a/*"));
    CHECK_FALSE(valid_pattern("*"));
    CHECK_FALSE(valid_pattern("a/*/b"));
    CHECK(topic_matches("pathfind/*", "pathfind/takeover"));
    CHECK(topic_matches("pathfind/*", "pathfind/a/b"));
    CHECK_FALSE(topic_matches("pathfind/*", "pathfind"));
    CHECK_FALSE(topic_matches("pathfind/*", "pathfinder/x"));
    CHECK(topic_matches("tick/frame", "tick/frame"));
    CHECK_FALSE(topic_matches("tick/frame", "tick/frames"));
}

TEST_CASE("endpoints and roles") {
    CHECK(parse_endpoint("10.0.0.2:9000").host == "10.0.0.2");
    CHECK(parse_endpoint(":9000").port == 9000);
    CHECK(parse_endpoint(":9000").host == "127.0.0.1");
    CHECK_THROWS_AS(parse_endpoint("nohost"), std::invalid_argument);
    CHECK_THROWS_AS(parse_endpoint("h:70000"), std::invalid_argument);
    for (Role r : {Role::Mocaptor, Role::Manipulator, Role::DigitalArtist, Role::Director, Role::Server, Role::Console}) {
        CHECK(role_from_string(to_string(r)) == r);
    }
}

TEST_CASE("session: local delivery, patterns and unsubscribe") {
    auto s = join_session({{1, Role::Server}, std::nullopt, {}, 1000ms, false});
    std::vector<std::string> seen;
    const auto all = s->subscribe("a/*", [&](const EventEnvelope& e) { seen.push_back("all:" + e.topic); });
    s->subscribe("a/b", [&](const EventEnvelope& e) { seen.push_back("one:" + e.topic); });
    s->publish("a/b", Value(1));
    s->publish("a/c", Value(2));
    s->publish("b/c", Value(3));
    CHECK(seen == std::vector<std::string>{"all:a/b", "one:a/b", "all:a/c"});
    s->unsubscribe(all);
    s->publish("a/c", Value(4));
    CHECK(seen.size() == 3);
    CHECK_THROWS_AS(s->subscribe("*", [](const EventEnvelope&) {}), BusError);
    CHECK_THROWS_AS(s->publish("_bus/hello", Value(1)), BusError);
    CHECK_THROWS_AS(s->publish("a/b", Value(std::string(kMaxEnvelopeSize, 'x'))), BusError);
    s->leave();
    CHECK_THROWS_AS(s->publish("a/b", Value(1)), BusError);
}

TEST_CASE("session: two stations on loopback") {
    auto a = join_session({{1, Role::Server}, Endpoint{"127.0.0.1", 0}, {}, 1000ms, false});
    auto b = join_session({{2, Role::Manipulator}, std::nullopt, {Endpoint{"127.0.0.1", a->listen_port()}}, 1000ms, false});
    REQUIRE(a->wait_for_peers(1, 2000ms));
    REQUIRE(b->wait_for_peers(1, 2000ms));
    CHECK(a->peers().front().role == Role::Manipulator);
    CHECK(b->peers().front().id == 1);

    Inbox at_b, at_a;
    b->subscribe("tick/*", [&](const EventEnvelope& e) { at_b.push(e); });
    a->subscribe("pathfind/takeover", [&](const EventEnvelope& e) { at_a.push(e); });
    REQUIRE(a->wait_for_peer_subscription("tick/frame", 2000ms));
    REQUIRE(b->wait_for_peer_subscription("pathfind/takeover", 2000ms));
    CHECK_FALSE(a->peer_subscribed("other/topic"));

    for (int i = 0; i < 100; ++i) a->publish("tick/frame", Value(ValueMap{{"tick", Value(i)}}));
    b->publish("pathfind/takeover", Value(ValueMap{{"goal", Value(Float32Array{1.0f, 2.0f})}}));
    a->publish("unwatched/topic", Value(1));
    REQUIRE(at_b.wait_for(100));
    REQUIRE(at_a.wait_for(1));
    for (int i = 0; i < 100; ++i) {
        CHECK(at_b.got[i].sender == 1);
        CHECK(at_b.got[i].payload.find("tick")->as<std::int64_t>() == i);
        if (i > 0) CHECK(at_b.got[i].seq > at_b.got[i - 1].seq);
    }
    CHECK(at_a.got[0].sender == 2);

    std::atomic<int> pongs{0};
    a->on_latency([&](std::uint32_t, double s) {
        CHECK(s >= 0.0);
        ++pongs;
    });
    a->measure_latency();
    for (int i = 0; i < 200 && pongs == 0; ++i) std::this_thread::sleep_for(10ms);
    CHECK(pongs == 1);
    CHECK(a->peers().front().latency_s.has_value());
}

TEST_CASE("session: unreachable peers become warnings") {
    // Bind then release a port so nothing listens there.
    auto probe = join_session({{9, Role::Console}, Endpoint{"127.0.0.1", 0}, {}, 1000ms, false});
    const std::uint16_t dead = probe->listen_port();
    probe.reset();
    auto s = join_session({{1, Role::Server}, std::nullopt, {Endpoint{"127.0.0.1", dead}}, 300ms, false});
    CHECK(s->warnings().size() == 1);
    CHECK(s->peers().empty());
    CHECK_NOTHROW(s->publish("a/b", Value(1)));
}
