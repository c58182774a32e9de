#include "stage/core/math.hpp"

namespace stage {

Quat slerp(const Quat& from, const Quat& to, double t) {
    // exact endpoints keep blends of equal inputs bit-stable
    if (t <= 0.0 || from == to) return from;
    if (t >= 1.0) return to;

    Quat target = to;
    double cos_theta = from.dot(to);
    if (cos_theta < 0.0) {
        target = to.negated();
        cos_theta = -cos_theta;
    }

    double wa;
    double wb;
    if (cos_theta > 0.9995) {
        // nearly parallel: nlerp is accurate and avoids dividing by sin(~0)
        wa = 1.0 - t;
        wb = t;
    } else {
        const double theta = std::acos(cos_theta);
        const double sin_theta = std::sin(theta);
        wa = std::sin((1.0 - t) * theta) / sin_theta;
        wb = std::sin(t * theta) / sin_theta;
    }
    const Quat r{
        wa * from.w + wb * target.w,
        wa * from.x + wb * target.x,
        wa * from.y + wb * target.y,
        wa * from.z + wb * target.z,
    };
    return r.normalized();
}

double facing_yaw(const Quat& q) {
    const Vec3 forward = q.rotate({1.0, 0.0, 0.0});
    if (std::abs(forward.x) < 1e-12 && std::abs(forward.z) < 1e-12) return 0.0;
    return yaw_of(forward.planar());
}

}  // namespace stage
