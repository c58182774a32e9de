#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "stage/bus/session.hpp"

namespace stage::server {

using bus::Role;

struct Station {
    std::uint32_t id = 0;
    Role role = Role::Console;
    std::string name;
};

class StationError : public std::runtime_error {
public:
    enum class Code { RoleTaken, UnknownStation };

    StationError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

// Thread-safe: consoles register from the gateway thread while the tick loop reads.
class StationRegistry {
public:
    // Ids start at `first_id`. Throws StationError(RoleTaken) for a second Director.
    explicit StationRegistry(std::uint32_t first_id = 100) : next_id_(first_id) {}

    std::uint32_t register_station(Role role, std::string name = {});
    void unregister(std::uint32_t id);
    std::optional<Station> find(std::uint32_t id) const;
    // First station holding `role`, if any.
    std::optional<Station> with_role(Role role) const;
    std::vector<Station> stations() const;

private:
    mutable std::mutex mutex_;
    std::map<std::uint32_t, Station> stations_;
    std::uint32_t next_id_;
};

// Which roles may issue each group of commands.
enum class CommandGroup { Composition, Camera, Lights, Params, Pathfind, Preset, RefMove, Calibration, Puppeteer };

std::string_view to_string(CommandGroup group);
std::optional<CommandGroup> command_group_from_string(std::string_view name);

class RoleGates {
public:
    // Composition/camera/lights/params: DigitalArtist, Director. Pathfind, presets and
    // ref-moves: Manipulator. Calibration and puppeteer routing: Director, Manipulator.
    RoleGates();

    bool allowed(CommandGroup group, Role role) const;
    void set(CommandGroup group, std::set<Role> roles) { gates_[group] = std::move(roles); }
    const std::set<Role>& roles(CommandGroup group) const { return gates_.at(group); }

private:
    std::map<CommandGroup, std::set<Role>> gates_;
};

}  // namespace stage::server
