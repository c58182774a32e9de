#include "stage/server/composition.hpp"

#include <algorithm>
#include <cmath>

namespace stage::server {

std::string_view to_string(CompositionMode mode) { return mode == CompositionMode::Fixed ? "Fixed" : "Manipulated"; }

std::optional<CompositionMode> composition_mode_from_string(std::string_view name) {
    if (name == "Fixed") return CompositionMode::Fixed;
    if (name == "Manipulated") return CompositionMode::Manipulated;
    return std::nullopt;
}

namespace {

void require_unlocked(const CompositionState& state) {
    if (state.mode == CompositionMode::Fixed) {
        throw CompositionError(CompositionError::Code::CompositionLocked, "composition is fixed");
    }
}

bool fov_ok(double fov) { return fov > kMinFov && fov < kMaxFov; }

}  // namespace

bool set_composition_mode(CompositionState& state, CompositionMode mode) {
    if (state.mode == mode) return false;
    state.mode = mode;
    return true;
}

void move_camera(CompositionState& state, const CameraDelta& delta) {
    require_unlocked(state);
    Camera next = state.camera;
    next.position = next.position + delta.position;
    next.yaw_deg = wrap_degrees(next.yaw_deg + delta.yaw_deg);
    next.pitch_deg = std::clamp(next.pitch_deg + delta.pitch_deg, -90.0, 90.0);
    next.fov_deg += delta.fov_deg;
    if (!fov_ok(next.fov_deg)) {
        throw CompositionError(CompositionError::Code::OutOfRange,
                               "fov " + std::to_string(next.fov_deg) + " outside (10, 170)");
    }
    state.camera = next;
}

void change_light(CompositionState& state, const LightChange& change) {
    require_unlocked(state);
    auto it = std::find_if(state.lights.begin(), state.lights.end(), [&](const Light& l) { return l.id == change.id; });
    if (it == state.lights.end()) {
        throw CompositionError(CompositionError::Code::UnknownLight, "no light '" + change.id + "'");
    }
    if (change.intensity && !(*change.intensity >= 0.0)) {
        throw CompositionError(CompositionError::Code::OutOfRange, "light intensity must be >= 0");
    }
    if (change.position) it->position = *change.position;
    if (change.intensity) it->intensity = *change.intensity;
}

void set_param(CompositionState& state, const std::string& name, double value) {
    require_unlocked(state);
    if (!std::isfinite(value)) throw CompositionError(CompositionError::Code::OutOfRange, "parameter must be finite");
    state.params[name] = value;
}

void validate(const CompositionState& state) {
    if (!fov_ok(state.camera.fov_deg)) {
        throw CompositionError(CompositionError::Code::OutOfRange, "camera fov outside (10, 170)");
    }
    for (const Light& l : state.lights) {
        if (!(l.intensity >= 0.0)) {
            throw CompositionError(CompositionError::Code::OutOfRange, "light '" + l.id + "' has negative intensity");
        }
    }
}

}  // namespace stage::server
