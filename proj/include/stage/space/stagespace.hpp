#pragma once

#include <stdexcept>

#include "stage/core/skeleton.hpp"

// Floor-plan geometry of the stage spaces: A (physical actors), B (the mocaptor's
// capture area) and D (the avatar's digital stage). Spaces C and E carry no geometry.
namespace stage::space {

// p' = scale * R(yaw) * p + offset
struct Similarity2 {
    double scale = 1.0;
    double yaw_deg = 0.0;
    Vec2 offset;

    Vec2 apply(Vec2 p) const;
    Vec2 inverse_apply(Vec2 p) const;

    friend bool operator==(const Similarity2&, const Similarity2&) = default;
};

struct SpaceCalibration {
    Similarity2 b_to_d;
    Similarity2 a_to_d;

    friend bool operator==(const SpaceCalibration&, const SpaceCalibration&) = default;
};

class CalibrationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Throws CalibrationError unless both scales are positive and finite.
void validate(const SpaceCalibration& calibration);

struct Disposition {
    Vec2 position;         // in D, meters
    double yaw_deg = 0.0;  // facing, (-180, 180]
};

Vec2 map_point_B_to_D(Vec2 p, const SpaceCalibration& cal);
Vec2 map_point_A_to_D(Vec2 p, const SpaceCalibration& cal);

// Rotates the root position about `pivot` in the floor plane and pre-multiplies the
// root rotation by the yaw. Non-root rotations are copied untouched.
Pose rotate_space_B(const Pose& pose, double theta_deg, Vec2 pivot);

class DegenerateGeometry : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Facing that points the avatar at the actor. Throws DegenerateGeometry when the
// two positions are less than 1 mm apart.
double solve_disposition(Vec2 avatar, Vec2 actor_in_d);

// Minimal signed rotation taking `current` to `target`, in (-180, 180].
double disposition_correction(double current_deg, double target_deg);

// Root position and facing of a pose.
Disposition disposition_of(const Pose& pose);

// Accumulated manipulation of space B: a yaw about the B origin followed by an offset.
struct SpaceBAdjust {
    double yaw_deg = 0.0;
    Vec2 offset;

    // The adjustment equivalent to applying this one, then rotate_space_B(theta, pivot).
    SpaceBAdjust rotated(double theta_deg, Vec2 pivot) const;

    friend bool operator==(const SpaceBAdjust&, const SpaceBAdjust&) = default;
};

Pose apply_adjust(const Pose& pose, const SpaceBAdjust& adjust);

// Carries a B-space pose into D: root position through b_to_d, root facing turned
// by the calibration yaw. Vertical position is left alone.
Pose map_pose_B_to_D(const Pose& pose, const SpaceCalibration& cal);

// The adjustment that lands a raw B-space root at `target` in D.
SpaceBAdjust adjust_for_placement(Vec2 raw_root, double raw_facing_deg, const SpaceCalibration& cal,
                                  const Disposition& target);

}  // namespace stage::space
