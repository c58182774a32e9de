#include "stage/space/stagespace.hpp"

#include <cmath>
#include <string>

namespace stage::space {

Vec2 Similarity2::apply(Vec2 p) const { return scale * rotate_yaw(p, yaw_deg) + offset; }

Vec2 Similarity2::inverse_apply(Vec2 p) const { return rotate_yaw((1.0 / scale) * (p - offset), -yaw_deg); }

void validate(const SpaceCalibration& calibration) {
    for (const Similarity2* s : {&calibration.b_to_d, &calibration.a_to_d}) {
        if (!(s->scale > 0.0) || !std::isfinite(s->scale)) {
            throw CalibrationError("calibration scale " + std::to_string(s->scale) + " must be positive");
        }
        if (!std::isfinite(s->yaw_deg) || !std::isfinite(s->offset.x) || !std::isfinite(s->offset.z)) {
            throw CalibrationError("calibration values must be finite");
        }
    }
}

Vec2 map_point_B_to_D(Vec2 p, const SpaceCalibration& cal) { return cal.b_to_d.apply(p); }

Vec2 map_point_A_to_D(Vec2 p, const SpaceCalibration& cal) { return cal.a_to_d.apply(p); }

namespace {

void set_planar(Vec3& v, Vec2 p) {
    v.x = p.x;
    v.z = p.z;
}

}  // namespace

Pose rotate_space_B(const Pose& pose, double theta_deg, Vec2 pivot) {
    if (theta_deg == 0.0 || pose.local_rotations.empty()) return pose;
    Pose out = pose;
    set_planar(out.root_translation, rotate_yaw(pose.root_translation.planar() - pivot, theta_deg) + pivot);
    out.local_rotations[0] = (Quat::from_yaw(theta_deg) * pose.local_rotations[0]).normalized();
    return out;
}

double solve_disposition(Vec2 avatar, Vec2 actor_in_d) {
    const Vec2 d = actor_in_d - avatar;
    if (d.length() < 1e-3) throw DegenerateGeometry("avatar and actor positions coincide");
    return yaw_of(d);
}

double disposition_correction(double current_deg, double target_deg) { return wrap_degrees(target_deg - current_deg); }

Disposition disposition_of(const Pose& pose) {
    Disposition d;
    d.position = pose.root_translation.planar();
    d.yaw_deg = pose.local_rotations.empty() ? 0.0 : facing_yaw(pose.local_rotations[0]);
    return d;
}

SpaceBAdjust SpaceBAdjust::rotated(double theta_deg, Vec2 pivot) const {
    return {yaw_deg + theta_deg, rotate_yaw(offset - pivot, theta_deg) + pivot};
}

Pose apply_adjust(const Pose& pose, const SpaceBAdjust& adjust) {
    Pose out = rotate_space_B(pose, adjust.yaw_deg, {});
    out.root_translation.x += adjust.offset.x;
    out.root_translation.z += adjust.offset.z;
    return out;
}

Pose map_pose_B_to_D(const Pose& pose, const SpaceCalibration& cal) {
    if (cal.b_to_d == Similarity2{}) return pose;
    Pose out = pose;
    set_planar(out.root_translation, cal.b_to_d.apply(pose.root_translation.planar()));
    if (cal.b_to_d.yaw_deg != 0.0 && !out.local_rotations.empty()) {
        out.local_rotations[0] = (Quat::from_yaw(cal.b_to_d.yaw_deg) * pose.local_rotations[0]).normalized();
    }
    return out;
}

SpaceBAdjust adjust_for_placement(Vec2 raw_root, double raw_facing_deg, const SpaceCalibration& cal,
                                  const Disposition& target) {
    SpaceBAdjust a;
    a.yaw_deg = wrap_degrees(target.yaw_deg - cal.b_to_d.yaw_deg - raw_facing_deg);
    a.offset = cal.b_to_d.inverse_apply(target.position) - rotate_yaw(raw_root, a.yaw_deg);
    return a;
}

}  // namespace stage::space
