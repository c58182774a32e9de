#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stage/core/math.hpp"

namespace stage::server {

enum class CompositionMode { Fixed, Manipulated };

std::string_view to_string(CompositionMode mode);
std::optional<CompositionMode> composition_mode_from_string(std::string_view name);

struct Camera {
    Vec3 position{0.0, 1.6, -6.0};
    double yaw_deg = 90.0;
    double pitch_deg = 0.0;
    double fov_deg = 50.0;

    friend bool operator==(const Camera&, const Camera&) = default;
};

struct Light {
    std::string id;
    Vec3 position;
    double intensity = 1.0;

    friend bool operator==(const Light&, const Light&) = default;
};

// Camera, lights and free scalar parameters (potentiometer-style sliders) of the shot.
// Nothing but the mode may change while the mode is Fixed.
struct CompositionState {
    CompositionMode mode = CompositionMode::Manipulated;
    Camera camera;
    std::vector<Light> lights;
    std::map<std::string, double, std::less<>> params;

    friend bool operator==(const CompositionState&, const CompositionState&) = default;
};

class CompositionError : public std::runtime_error {
public:
    enum class Code { CompositionLocked, OutOfRange, UnknownLight };

    CompositionError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

struct CameraDelta {
    Vec3 position;
    double yaw_deg = 0.0;
    double pitch_deg = 0.0;
    double fov_deg = 0.0;
};

struct LightChange {
    std::string id;
    std::optional<Vec3> position;
    std::optional<double> intensity;
};

inline constexpr double kMinFov = 10.0;
inline constexpr double kMaxFov = 170.0;

// Returns false when the mode was already `mode`.
bool set_composition_mode(CompositionState& state, CompositionMode mode);

// All of these leave the state untouched when they throw.
void move_camera(CompositionState& state, const CameraDelta& delta);
void change_light(CompositionState& state, const LightChange& change);
void set_param(CompositionState& state, const std::string& name, double value);

// Throws CompositionError(OutOfRange) on fov outside (10, 170) or a negative intensity.
void validate(const CompositionState& state);

}  // namespace stage::server
