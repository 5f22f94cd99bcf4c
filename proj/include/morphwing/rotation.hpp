#pragma once

#include "morphwing/common.hpp"

#include <algorithm>

namespace morphwing {

struct EulerAngles {
    double roll = 0;
    double pitch = 0;
    double yaw = 0;
    bool gimbal = false; // |pitch| > 89 deg; yaw is then a convention
};

/// Z-Y-X (yaw, pitch, roll) angles of a body-to-inertial unit quaternion.
inline EulerAngles euler_angles(const Quat& q) {
    const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
    EulerAngles e;
    e.roll = std::atan2(2 * (w * x + y * z), 1 - 2 * (x * x + y * y));
    e.pitch = std::asin(std::clamp(2 * (w * y - z * x), -1.0, 1.0));
    e.yaw = std::atan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z));
    e.gimbal = std::abs(e.pitch) > deg2rad(89.0);
    if (std::abs(2 * (w * y - z * x)) >= 1.0 - 1e-12) {
        // at the singularity only roll -/+ yaw is observable: yaw := 0
        const Mat3 R = q.toRotationMatrix();
        e.roll = std::atan2(-R(1, 2), R(1, 1));
        e.yaw = 0;
    }
    return e;
}

inline Quat quaternion_from_euler(double roll, double pitch, double yaw) {
    return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                Eigen::AngleAxisd(roll, Vec3::UnitX()));
}

/// dq/dt for body-frame angular velocity: 1/2 q (x) (0, omega).
inline Eigen::Vector4d quaternion_rate(const Quat& q, const Vec3& omega) {
    const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
    const double p = omega.x(), r = omega.y(), s = omega.z();
    // stored as (w, x, y, z)
    return 0.5 * Eigen::Vector4d(-x * p - y * r - z * s,
                                 w * p + y * s - z * r,
                                 w * r - x * s + z * p,
                                 w * s + x * r - y * p);
}

} // namespace morphwing
