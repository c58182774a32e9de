#include "stage/pathfind/control.hpp"

#include <algorithm>

namespace stage::pathfind {

std::string_view to_string(Owner owner) {
    return owner == Owner::MocaptorFull ? "MocaptorFull" : "PathfinderLocomotion";
}

namespace {

// Point and segment yaw at arc length `s` along the polyline.
Placement along(const std::vector<Vec2>& pts, double s, double fallback_yaw) {
    Placement out{pts.front(), fallback_yaw};
    double walked = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Vec2 seg = pts[i + 1] - pts[i];
        const double len = seg.length();
        if (len == 0.0) continue;
        out.yaw_deg = yaw_of(seg);
        if (s < walked + len) {
            out.position = pts[i] + ((s - walked) / len) * seg;
            return out;
        }
        walked += len;
        out.position = pts[i + 1];
    }
    return out;
}

}  // namespace

LocomotionStep step_locomotion(const ControlState& state, double speed, double dt) {
    if (state.owner != Owner::PathfinderLocomotion || !state.active_path) {
        throw ControlError(ControlError::Code::WrongOwner, "locomotion needs the pathfinder to own the avatar");
    }
    const Path& path = *state.active_path;
    LocomotionStep step;
    step.state = state;
    step.state.progress = std::min(state.progress + speed * dt, path.total_cost);
    if (step.state.progress >= path.total_cost) {
        const Placement end = along(path.waypoints, path.total_cost, state.current.yaw_deg);
        step.position = path.waypoints.back();
        step.yaw_deg = end.yaw_deg;
        step.path_complete = true;
    } else {
        const Placement p = along(path.waypoints, step.state.progress, state.current.yaw_deg);
        step.position = p.position;
        step.yaw_deg = p.yaw_deg;
    }
    step.state.current = {step.position, step.yaw_deg};
    step.state.complete = step.path_complete;
    return step;
}

TransitionResult control_transition(const ControlState& state, const ControlCommand& command,
                                    const TransitionContext& context) {
    TransitionResult result{state, std::nullopt};
    if (const auto* take = std::get_if<TakeOver>(&command)) {
        if (state.owner == Owner::PathfinderLocomotion) {
            throw ControlError(ControlError::Code::AlreadyOwned, "the pathfinder already owns the avatar");
        }
        if (!context.mesh) throw ControlError(ControlError::Code::NoPath, "no navmesh for this stage");
        Path path;
        try {
            path = find_path(*context.mesh, context.avatar.position, take->goal);
        } catch (const PathError& e) {
            throw ControlError(ControlError::Code::NoPath, e.what());
        }
        ControlState next;
        next.owner = Owner::PathfinderLocomotion;
        next.active_path = std::move(path);
        next.speed = take->speed.value_or(kDefaultWalkSpeed);
        next.current = context.avatar;
        result.state = std::move(next);
        return result;
    }

    const auto& release = std::get<Release>(command);
    if (state.owner != Owner::PathfinderLocomotion) {
        throw ControlError(ControlError::Code::WrongOwner, "the mocaptor already owns the avatar");
    }
    result.state = ControlState{};
    result.state.speed = state.speed;
    if (release.preset) {
        result.snap = Placement{release.preset->position, release.preset->yaw_deg};
    } else {
        result.snap = state.current;
    }
    result.state.current = *result.snap;
    return result;
}

Pose compose_final_pose(const ControlState& state, const Pose& mocaptor_pose, const Placement& locomotion) {
    if (state.owner == Owner::MocaptorFull || mocaptor_pose.local_rotations.empty()) return mocaptor_pose;
    Pose out = mocaptor_pose;
    out.root_translation.x = locomotion.position.x;
    out.root_translation.z = locomotion.position.z;
    out.local_rotations[0] = Quat::from_yaw(locomotion.yaw_deg);
    return out;
}

void PresetTable::add(Preset preset) {
    if (preset.name.empty()) throw std::invalid_argument("preset name must not be empty");
    if (find(preset.name)) throw std::invalid_argument("duplicate preset '" + preset.name + "'");
    presets_.push_back(std::move(preset));
}

const Preset* PresetTable::find(std::string_view name) const {
    auto it = std::find_if(presets_.begin(), presets_.end(), [&](const Preset& p) { return p.name == name; });
    return it == presets_.end() ? nullptr : &*it;
}

void ZoneMap::add(Zone zone) {
    if (zone.id.empty()) throw std::invalid_argument("zone id must not be empty");
    if (find(zone.id)) throw std::invalid_argument("duplicate zone '" + zone.id + "'");
    if (zone.in_b.degenerate() || zone.in_d.degenerate()) {
        throw std::invalid_argument("zone '" + zone.id + "' has a degenerate rectangle");
    }
    zones_.push_back(std::move(zone));
}

const Zone* ZoneMap::find(std::string_view id) const {
    auto it = std::find_if(zones_.begin(), zones_.end(), [&](const Zone& z) { return z.id == id; });
    return it == zones_.end() ? nullptr : &*it;
}

const Zone* ZoneMap::zone_in_b(Vec2 p) const {
    for (const Zone& z : zones_) {
        if (z.in_b.contains(p)) return &z;
    }
    return nullptr;
}

const Zone* ZoneMap::zone_in_d(Vec2 p) const {
    for (const Zone& z : zones_) {
        if (z.in_d.contains(p)) return &z;
    }
    return nullptr;
}

}  // namespace stage::pathfind
