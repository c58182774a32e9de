#pragma once

#include <cmath>
#include <numbers>

// Frame convention used everywhere in the project:
//   right-handed, Y up, meters.
//   Floor-plan quantities are 2-vectors (x, z).
//   Yaw is measured in the (x, z) chart, 0 deg along +X, +90 deg along +Z.
//   A character faces its local +X axis.

namespace stage {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
constexpr double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

// Wraps an angle in degrees into (-180, 180].
inline double wrap_degrees(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r <= -180.0) r += 360.0;
    else if (r > 180.0) r -= 360.0;
    return r;
}

struct Vec2 {
    double x = 0.0;
    double z = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
    friend constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.z}; }
    friend constexpr Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.z}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;

    double length() const { return std::hypot(x, z); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).length(); }

// Rotates a floor-plan vector by yaw degrees (+X towards +Z).
inline Vec2 rotate_yaw(Vec2 v, double yaw_deg) {
    const double r = deg_to_rad(yaw_deg);
    const double c = std::cos(r);
    const double s = std::sin(r);
    return {c * v.x - s * v.z, s * v.x + c * v.z};
}

// Yaw of a floor-plan direction, in (-180, 180].
inline double yaw_of(Vec2 dir) { return wrap_degrees(rad_to_deg(std::atan2(dir.z, dir.x))); }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend constexpr Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
    friend constexpr Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
    friend constexpr Vec3 operator*(const Vec3& v, double s) { return s * v; }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double length() const { return std::sqrt(dot(*this)); }

    constexpr Vec2 planar() const { return {x, z}; }
};

inline Vec3 lerp(const Vec3& a, const Vec3& b, double t) { return a + t * (b - a); }

// Unit quaternion (w + xi + yj + zk) representing a rotation.
struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static constexpr Quat identity() { return {}; }

    // Right-handed rotation of `angle_rad` about `axis` (need not be unit).
    static Quat from_axis_angle(const Vec3& axis, double angle_rad) {
        const double len = axis.length();
        if (len == 0.0) return identity();
        const double h = 0.5 * angle_rad;
        const double s = std::sin(h) / len;
        return {std::cos(h), axis.x * s, axis.y * s, axis.z * s};
    }

    // Pure yaw in the floor-plan convention: maps +X towards +Z for positive degrees,
    // which is a right-handed rotation of -yaw about +Y.
    static Quat from_yaw(double yaw_deg) { return from_axis_angle({0.0, 1.0, 0.0}, -deg_to_rad(yaw_deg)); }

    friend constexpr Quat operator*(const Quat& a, const Quat& b) {
        return {
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        };
    }
    friend constexpr bool operator==(const Quat&, const Quat&) = default;

    constexpr Quat conjugate() const { return {w, -x, -y, -z}; }
    constexpr Quat negated() const { return {-w, -x, -y, -z}; }
    constexpr double dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }

    Quat normalized() const {
        const double n = norm();
        if (n == 0.0) return identity();
        return {w / n, x / n, y / n, z / n};
    }

    constexpr Vec3 rotate(const Vec3& v) const {
        // v' = v + 2w(u x v) + 2u x (u x v)
        const Vec3 u{x, y, z};
        const Vec3 t = 2.0 * u.cross(v);
        return v + w * t + u.cross(t);
    }
};

// Same rotation (q and -q are equal as rotations) within `tol` per component.
inline bool same_rotation(const Quat& a, const Quat& b, double tol) {
    auto close = [tol](const Quat& p, const Quat& q) {
        return std::abs(p.w - q.w) <= tol && std::abs(p.x - q.x) <= tol && std::abs(p.y - q.y) <= tol &&
               std::abs(p.z - q.z) <= tol;
    };
    return close(a, b) || close(a, b.negated());
}

// Shortest-arc spherical interpolation; result is renormalized.
Quat slerp(const Quat& from, const Quat& to, double t);

// Yaw of the rotated local +X axis projected on the floor plane.
// Returns 0 when the axis is vertical.
double facing_yaw(const Quat& q);

}  // namespace stage
