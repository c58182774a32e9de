#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "stage/core/skeleton.hpp"
#include "stage/pathfind/navmesh.hpp"

namespace stage::pathfind {

inline constexpr double kDefaultWalkSpeed = 1.2;  // m/s

enum class Owner { MocaptorFull, PathfinderLocomotion };

std::string_view to_string(Owner owner);

// Root placement on the floor plan of D.
struct Placement {
    Vec2 position;
    double yaw_deg = 0.0;

    friend bool operator==(const Placement&, const Placement&) = default;
};

// active_path is present iff the pathfinder owns the avatar root.
struct ControlState {
    Owner owner = Owner::MocaptorFull;
    std::optional<Path> active_path;
    double progress = 0.0;  // meters along the path
    double speed = kDefaultWalkSpeed;
    Placement current;      // last locomotion output
    bool complete = false;

    bool consistent() const { return active_path.has_value() == (owner == Owner::PathfinderLocomotion); }
};

class ControlError : public std::runtime_error {
public:
    enum class Code { AlreadyOwned, WrongOwner, NoPath };

    ControlError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

struct LocomotionStep {
    ControlState state;
    Vec2 position;
    double yaw_deg = 0.0;
    bool path_complete = false;
};

// Advances along the active path by speed*dt, clamped at its end. The owner does not
// change when the end is reached. Throws ControlError(WrongOwner) in MocaptorFull.
LocomotionStep step_locomotion(const ControlState& state, double speed, double dt);

struct Preset {
    std::string name;
    Vec2 position;
    double yaw_deg = 0.0;
};

struct TakeOver {
    Vec2 goal;
    std::optional<double> speed;
};

struct Release {
    std::optional<Preset> preset;
};

using ControlCommand = std::variant<TakeOver, Release>;

struct TransitionContext {
    const NavMesh* mesh = nullptr;
    Placement avatar;  // where the avatar root currently stands in D
};

struct TransitionResult {
    ControlState state;
    std::optional<Placement> snap;  // set on release: where the root must land
};

// TakeOver plans a path from the avatar to the goal; a goal that cannot be reached
// (including one on an obstacle) raises ControlError(NoPath). Release hands the root
// back, snapping to the preset or keeping the pathfinder's last transform.
TransitionResult control_transition(const ControlState& state, const ControlCommand& command,
                                    const TransitionContext& context);

// Limbs always follow the mocaptor. Under the pathfinder the root's floor position and
// yaw come from locomotion; root height stays with the mocaptor.
Pose compose_final_pose(const ControlState& state, const Pose& mocaptor_pose, const Placement& locomotion);

class PresetTable {
public:
    // Throws std::invalid_argument on a duplicate or empty name.
    void add(Preset preset);
    const Preset* find(std::string_view name) const;
    const std::vector<Preset>& presets() const { return presets_; }

private:
    std::vector<Preset> presets_;
};

struct Zone {
    std::string id;
    Rect in_b;
    Rect in_d;
    double release_yaw_deg = 0.0;
};

class ZoneMap {
public:
    // Throws std::invalid_argument on a duplicate id or a degenerate rectangle.
    void add(Zone zone);
    const Zone* find(std::string_view id) const;
    const Zone* zone_in_b(Vec2 p) const;
    const Zone* zone_in_d(Vec2 p) const;
    const std::vector<Zone>& zones() const { return zones_; }

    // Landing placement for a zone: the center of its D rectangle at the release yaw.
    static Preset landing(const Zone& zone) { return {zone.id, zone.in_d.center(), zone.release_yaw_deg}; }

private:
    std::vector<Zone> zones_;
};

}  // namespace stage::pathfind
