#pragma once

/**
 * Approximate shed-wake reconstruction from a run trace.
 *
 * Each trace sample sheds gamma = -(Gamma_i - Gamma_{i-1}) per station from the
 * station's trailing edge. The shed element then drifts straight downstream
 * (body -x) at the reference airspeed until the last sample. Positions are in
 * the body frame at shedding time; the wake is not rolled up or induced.
 */

#include "morphwing/dynamics.hpp"
#include "morphwing/kinematics.hpp"
#include "morphwing/trace.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace morphwing {

inline std::vector<std::string> wake_channels() { return {"t_shed", "station", "x", "y", "z", "gamma"}; }

/// Returns a table with one row per (sample after the first, station).
inline Trace export_wake(const Trace& trace, const VehicleConfig& vehicle) {
    const int m = vehicle.aero.m;
    const int nu = vehicle.gait.regulator_count();
    const auto t = trace.column("t");
    std::vector<std::vector<double>> gamma(static_cast<std::size_t>(m)), u(static_cast<std::size_t>(nu));
    for (int k = 0; k < m; ++k) gamma[static_cast<std::size_t>(k)] = trace.column("gamma" + std::to_string(k));
    for (int j = 0; j < nu; ++j)
        u[static_cast<std::size_t>(j)] =
            trace.column("u_" + std::string(to_string(vehicle.gait.regulator_channels[static_cast<std::size_t>(j)])));

    Trace out;
    out.channels = wake_channels();
    if (t.size() < 2) return out;
    const double t_end = t.back();
    VecX inputs(nu);
    for (std::size_t i = 1; i < t.size(); ++i) {
        for (int j = 0; j < nu; ++j) inputs[j] = u[static_cast<std::size_t>(j)][i];
        const WingState ws = gait_joint_state(vehicle.gait, t[i], inputs);
        const auto stations = station_geometry(ws, vehicle.span, m);
        const double drift = vehicle.aero.U * (t_end - t[i]);
        for (int k = 0; k < m; ++k) {
            const auto& st = stations[static_cast<std::size_t>(k)];
            const Vec3 te = st.position_body - 0.75 * st.chord * st.chord_body;
            const auto& g = gamma[static_cast<std::size_t>(k)];
            const double shed = -(g[i] - g[i - 1]);
            out.append({t[i], static_cast<double>(k), te.x() - drift, te.y(), te.z(), shed});
        }
    }
    return out;
}

/// Integrated |gamma| per half-span. asymmetry = (right - left) / (right + left), 0 when both vanish.
struct WakeAsymmetry {
    double left = 0;
    double right = 0;
    double asymmetry = 0;
};

inline WakeAsymmetry wake_asymmetry(const Trace& wake, double t_from = -1e300) {
    const int ys = wake.index("y"), gs = wake.index("gamma"), ts = wake.index("t_shed");
    WakeAsymmetry a;
    for (std::size_t r = 0; r < wake.rows(); ++r) {
        if (wake.at(r, static_cast<std::size_t>(ts)) < t_from) continue;
        const double y = wake.at(r, static_cast<std::size_t>(ys));
        const double g = std::abs(wake.at(r, static_cast<std::size_t>(gs)));
        if (y > 0) a.right += g;
        else if (y < 0) a.left += g;
    }
    const double total = a.left + a.right;
    a.asymmetry = total > 0 ? (a.right - a.left) / total : 0.0;
    return a;
}

} // namespace morphwing
