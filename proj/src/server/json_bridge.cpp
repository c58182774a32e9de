#include "stage/server/json_bridge.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "stage/bus/envelope.hpp"

namespace stage::server {

using bus::Value;

namespace {

Value from_json_at(const nlohmann::json& j, std::size_t level) {
    if (level > bus::kMaxValueDepth) throw JsonBridgeError("payload nests deeper than 8 levels");
    switch (j.type()) {
        case nlohmann::json::value_t::boolean: return Value(j.get<bool>());
        case nlohmann::json::value_t::number_integer: return Value(j.get<std::int64_t>());
        case nlohmann::json::value_t::number_unsigned: {
            const auto u = j.get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
                throw JsonBridgeError("integer " + std::to_string(u) + " does not fit in 64 signed bits");
            }
            return Value(static_cast<std::int64_t>(u));
        }
        case nlohmann::json::value_t::number_float: return Value(j.get<double>());
        case nlohmann::json::value_t::string: {
            std::string s = j.get<std::string>();
            if (!bus::valid_utf8(s)) throw JsonBridgeError("string is not valid UTF-8");
            return Value(std::move(s));
        }
        case nlohmann::json::value_t::array: {
            bus::Float32Array out;
            out.reserve(j.size());
            for (const auto& e : j) {
                if (!e.is_number()) throw JsonBridgeError("arrays may only hold numbers");
                out.push_back(static_cast<float>(e.get<double>()));
            }
            return Value(std::move(out));
        }
        case nlohmann::json::value_t::object: {
            bus::ValueMap m;
            for (const auto& [key, member] : j.items()) m.emplace(key, from_json_at(member, level + 1));
            return Value(std::move(m));
        }
        default: throw JsonBridgeError("null and binary values have no payload equivalent");
    }
}

}  // namespace

Value value_from_json(const nlohmann::json& j) { return from_json_at(j, 1); }

nlohmann::json value_to_json(const Value& v) {
    return std::visit(
        [](const auto& x) -> nlohmann::json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, bus::Float32Array>) {
                nlohmann::json a = nlohmann::json::array();
                for (float f : x) a.push_back(static_cast<double>(f));
                return a;
            } else if constexpr (std::is_same_v<T, bus::ValueMap>) {
                nlohmann::json o = nlohmann::json::object();
                for (const auto& [key, member] : x) o[key] = value_to_json(member);
                return o;
            } else {
                return nlohmann::json(x);
            }
        },
        v.data);
}

std::vector<ScriptedCommand> parse_script(std::string_view text) {
    std::vector<ScriptedCommand> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        auto skip_space = [&] {
            while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
        };
        auto word = [&] {
            skip_space();
            const auto n = std::min(line.find_first_of(" \t"), line.size());
            std::string_view w = line.substr(0, n);
            line.remove_prefix(n);
            return w;
        };
        skip_space();
        if (line.empty() || line.front() == '#') continue;

        ScriptedCommand cmd;
        cmd.line = line_no;
        const std::string_view tick = word();
        auto [ptr, ec] = std::from_chars(tick.data(), tick.data() + tick.size(), cmd.tick);
        if (ec != std::errc{} || ptr != tick.data() + tick.size()) {
            throw ScriptError(line_no, "bad tick '" + std::string(tick) + "'");
        }
        const std::string_view role = word();
        const auto parsed_role = bus::role_from_string(role);
        if (!parsed_role) throw ScriptError(line_no, "unknown role '" + std::string(role) + "'");
        cmd.role = *parsed_role;
        cmd.topic = std::string(word());
        if (!bus::valid_topic(cmd.topic)) throw ScriptError(line_no, "bad topic '" + cmd.topic + "'");
        skip_space();
        try {
            cmd.payload = line.empty() ? Value(bus::ValueMap{}) : value_from_json(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw ScriptError(line_no, std::string("bad payload: ") + e.what());
        } catch (const JsonBridgeError& e) {
            throw ScriptError(line_no, std::string("bad payload: ") + e.what());
        }
        out.push_back(std::move(cmd));
        if (end == text.size()) break;
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ScriptedCommand& a, const ScriptedCommand& b) { return a.tick < b.tick; });
    return out;
}

}  // namespace stage::server
