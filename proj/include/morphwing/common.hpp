#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace morphwing {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Invalid or inconsistent configuration. `field()` names the offending entry.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Non-finite values, ill-conditioned solves or diverging trajectories.
/// `index()` carries the station or knot that triggered the failure, or -1.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, int index = -1)
        : std::runtime_error(what), index_(index) {}

    int index() const noexcept { return index_; }

private:
    int index_;
};

inline bool all_finite(const Eigen::Ref<const VecX>& v) { return v.allFinite(); }

} // namespace morphwing
