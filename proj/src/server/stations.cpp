#include "stage/server/stations.hpp"

#include <array>

namespace stage::server {

std::uint32_t StationRegistry::register_station(Role role, std::string name) {
    std::lock_guard lock(mutex_);
    if (role == Role::Director) {
        for (const auto& [id, s] : stations_) {
            if (s.role == Role::Director) {
                throw StationError(StationError::Code::RoleTaken, "station " + std::to_string(id) + " is already the Director");
            }
        }
    }
    const std::uint32_t id = next_id_++;
    if (name.empty()) name = std::string(bus::to_string(role)) + "-" + std::to_string(id);
    stations_[id] = {id, role, std::move(name)};
    return id;
}

void StationRegistry::unregister(std::uint32_t id) {
    std::lock_guard lock(mutex_);
    if (stations_.erase(id) == 0) {
        throw StationError(StationError::Code::UnknownStation, "no station " + std::to_string(id));
    }
}

std::optional<Station> StationRegistry::find(std::uint32_t id) const {
    std::lock_guard lock(mutex_);
    auto it = stations_.find(id);
    if (it == stations_.end()) return std::nullopt;
    return it->second;
}

std::optional<Station> StationRegistry::with_role(Role role) const {
    std::lock_guard lock(mutex_);
    for (const auto& [id, s] : stations_) {
        if (s.role == role) return s;
    }
    return std::nullopt;
}

std::vector<Station> StationRegistry::stations() const {
    std::lock_guard lock(mutex_);
    std::vector<Station> out;
    for (const auto& [id, s] : stations_) out.push_back(s);
    return out;
}

namespace {

constexpr std::array<std::string_view, 9> kGroupNames = {"composition", "camera",      "lights",
                                                         "params",      "pathfind",    "preset",
                                                         "ref_move",    "calibration", "puppeteer"};

}  // namespace

std::string_view to_string(CommandGroup group) { return kGroupNames[static_cast<std::size_t>(group)]; }

std::optional<CommandGroup> command_group_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kGroupNames.size(); ++i) {
        if (kGroupNames[i] == name) return static_cast<CommandGroup>(i);
    }
    return std::nullopt;
}

RoleGates::RoleGates() {
    const std::set<Role> artists{Role::DigitalArtist, Role::Director};
    gates_[CommandGroup::Composition] = artists;
    gates_[CommandGroup::Camera] = artists;
    gates_[CommandGroup::Lights] = artists;
    gates_[CommandGroup::Params] = artists;
    gates_[CommandGroup::Pathfind] = {Role::Manipulator};
    gates_[CommandGroup::Preset] = {Role::Manipulator};
    gates_[CommandGroup::RefMove] = {Role::Manipulator};
    gates_[CommandGroup::Calibration] = {Role::Director, Role::Manipulator};
    gates_[CommandGroup::Puppeteer] = {Role::Director, Role::Manipulator};
}

bool RoleGates::allowed(CommandGroup group, Role role) const {
    auto it = gates_.find(group);
    return it != gates_.end() && it->second.contains(role);
}

}  // namespace stage::server
