#pragma once

#include "morphwing/common.hpp"

namespace morphwing {

/// One classical fourth-order Runge-Kutta step of dx/dt = f(t, x).
template <typename Rhs>
VecX rk4(Rhs&& f, double t, const VecX& x, double dt) {
    const VecX k1 = f(t, x);
    const VecX k2 = f(t + 0.5 * dt, x + (0.5 * dt) * k1);
    const VecX k3 = f(t + 0.5 * dt, x + (0.5 * dt) * k2);
    const VecX k4 = f(t + dt, x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace morphwing
