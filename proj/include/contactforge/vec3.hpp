#pragma once

#include <cmath>

namespace contactforge {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
    constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
constexpr double squared_norm(const Vec3& v) { return dot(v, v); }

inline Vec3 normalized(const Vec3& v) { return v / norm(v); }

inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// Row-major 3x3 rotation plus translation.
struct RigidTransform {
    double r[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    Vec3 t;

    Vec3 rotate(const Vec3& v) const {
        return {r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
                r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
                r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z};
    }
    Vec3 apply(const Vec3& p) const { return rotate(p) + t; }

    // Rotation of `angle` radians about a unit axis (Rodrigues).
    static RigidTransform from_axis_angle(const Vec3& axis, double angle, const Vec3& translation = {}) {
        const Vec3 k = normalized(axis);
        const double c = std::cos(angle), s = std::sin(angle), v = 1.0 - c;
        RigidTransform tr;
        tr.r[0][0] = c + k.x * k.x * v;
        tr.r[0][1] = k.x * k.y * v - k.z * s;
        tr.r[0][2] = k.x * k.z * v + k.y * s;
        tr.r[1][0] = k.y * k.x * v + k.z * s;
        tr.r[1][1] = c + k.y * k.y * v;
        tr.r[1][2] = k.y * k.z * v - k.x * s;
        tr.r[2][0] = k.z * k.x * v - k.y * s;
        tr.r[2][1] = k.z * k.y * v + k.x * s;
        tr.r[2][2] = c + k.z * k.z * v;
        tr.t = translation;
        return tr;
    }
};

}  // namespace contactforge
