#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stage/bus/session.hpp"
#include "stage/bus/value.hpp"

namespace stage::server {

class JsonBridgeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// JSON <-> Value: integers map to Int64, other numbers to Float64, arrays of numbers to
// Float32Array, objects to Map. null and mixed arrays are rejected.
bus::Value value_from_json(const nlohmann::json& j);
nlohmann::json value_to_json(const bus::Value& v);

// One line of a command script: "<tick> <role> <topic> <json payload>".
struct ScriptedCommand {
    std::uint64_t tick = 0;
    bus::Role role = bus::Role::Manipulator;
    std::string topic;
    bus::Value payload;
    std::size_t line = 0;
};

class ScriptError : public std::runtime_error {
public:
    ScriptError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Blank lines and lines starting with '#' are skipped. Commands come back ordered by
// tick, keeping file order within a tick.
std::vector<ScriptedCommand> parse_script(std::string_view text);

}  // namespace stage::server
