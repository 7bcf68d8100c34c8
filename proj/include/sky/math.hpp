#pragma once

// Minimal 3D vector / quaternion math for the NED world frame.
// Double precision throughout; the determinism contract forbids
// fast-math style reassociation, so keep expressions explicit.

#include <cmath>
#include <cstdint>

namespace sky {

struct Vec3 {
  double x{0.0}, y{0.0}, z{0.0};

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  // Component-wise product (drag coefficients etc.)
  constexpr Vec3 cwise(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  constexpr double norm_sq() const { return x * x + y * y + z * z; }
  double norm_xy() const { return std::sqrt(x * x + y * y); }

  Vec3 normalized() const {
    const double n = norm();
    return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
  }

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Unit quaternion, body -> world (NED) rotation. Hamilton convention.
struct Quat {
  double w{1.0}, x{0.0}, y{0.0}, z{0.0};

  constexpr Quat() = default;
  constexpr Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  static Quat from_axis_angle(const Vec3& axis, double angle) {
    const double h = 0.5 * angle;
    const double s = std::sin(h);
    const Vec3 a = axis.normalized();
    return {std::cos(h), a.x * s, a.y * s, a.z * s};
  }

  static Quat from_yaw(double yaw) {
    return {std::cos(0.5 * yaw), 0.0, 0.0, std::sin(0.5 * yaw)};
  }

  Quat operator*(const Quat& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
  }

  constexpr Quat conjugate() const { return {w, -x, -y, -z}; }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quat normalized() const {
    const double n = norm();
    if (n <= 0.0) return Quat{};
    return {w / n, x / n, y / n, z / n};
  }

  // Rotate a body-frame vector into the world frame.
  Vec3 rotate(const Vec3& v) const {
    // v' = v + 2*q_vec x (q_vec x v + w*v)
    const Vec3 qv{x, y, z};
    const Vec3 t = qv.cross(v) * 2.0;
    return v + t * w + qv.cross(t);
  }

  Vec3 rotate_inverse(const Vec3& v) const { return conjugate().rotate(v); }

  // Yaw of the body x axis projected on the horizontal plane.
  double yaw() const {
    return std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
  }

  bool finite() const {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline double clampd(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

// Wrap an angle to (-pi, pi].
inline double wrap_pi(double a) {
  const double two_pi = 2.0 * M_PI;
  a = std::fmod(a + M_PI, two_pi);
  if (a < 0.0) a += two_pi;
  return a - M_PI;
}

constexpr double kGravity = 9.81;  // m/s^2, NED down positive

}  // namespace sky
