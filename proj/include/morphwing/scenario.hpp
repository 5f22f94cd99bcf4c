#pragma once

/**
 * Closed-loop scenario execution.
 *
 * The vehicle is stepped with RK4 at sim_dt. Every control_dt the receding
 * horizon controller is re-solved from the current state and its first input
 * is held until the next update.
 */

#include "morphwing/collocation.hpp"
#include "morphwing/dynamics.hpp"
#include "morphwing/rotation.hpp"
#include "morphwing/trace.hpp"

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace morphwing {

/// Attitude reference: constant pitch, roll stepping once at switch_time.
struct ReferenceSchedule {
    double pitch = deg2rad(-15);
    double roll_initial = 0;
    double roll_final = deg2rad(15);
    double switch_time = 1.0;

    VecX operator()(double t) const {
        VecX z = VecX::Zero(5);
        z[0] = t < switch_time ? roll_initial : roll_final;
        z[1] = pitch;
        return z;
    }
};

struct InitialCondition {
    double speed = 4.0; // horizontal, along the initial heading, m/s
    double roll = 0;
    double pitch = deg2rad(-15);
    double yaw = 0;
};

/// Seeded perturbation of the initial attitude and body rates (standard deviations).
struct Perturbation {
    double attitude = 0; // rad
    double rate = 0;     // rad/s
};

struct ScenarioConfig {
    double sim_dt = 1e-4;
    double control_dt = 5e-3;
    double duration = 5.0;
    VehicleConfig vehicle;
    ControllerConfig controller;
    bool controller_enabled = true;
    ReferenceSchedule reference;
    InitialCondition initial;
    std::uint64_t rng_seed = 0;
    Perturbation perturbation;
    int decimation = 10;        // record every k-th simulation step
    double abort_threshold = 1e6;

    int steps_per_control() const { return static_cast<int>(std::lround(control_dt / sim_dt)); }

    void validate() const {
        if (!(sim_dt > 0)) throw ConfigError("sim_dt", "must be > 0");
        if (!(control_dt > 0)) throw ConfigError("control_dt", "must be > 0");
        if (!(duration >= 0)) throw ConfigError("duration", "must be >= 0");
        const double ratio = control_dt / sim_dt;
        if (ratio < 1 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
            throw ConfigError("control_dt", "must be an integer multiple of sim_dt");
        if (decimation < 1) throw ConfigError("output.decimation", "must be >= 1");
        if (!(perturbation.attitude >= 0 && perturbation.rate >= 0))
            throw ConfigError("perturbation", "standard deviations must be >= 0");
        vehicle.validate();
        controller.validate();
    }
};

enum class ScenarioStatus { Completed, Aborted };

struct SolveRecord {
    double t = 0;
    ControllerOutput output;
};

struct RunResult {
    Trace trace;
    ScenarioStatus status = ScenarioStatus::Completed;
    std::string diagnostic;
    FullState final_state;
    std::vector<SolveRecord> solves;
    int solver_failures = 0;
    int controller_faults = 0;

    bool completed() const { return status == ScenarioStatus::Completed; }
};

inline std::vector<std::string> trace_channels(const VehicleConfig& v) {
    std::vector<std::string> c = {"t",  "x",  "y",  "z",    "qw",    "qx",  "qy",  "qz",  "vx",  "vy",
                                  "vz", "p",  "q",  "r",    "roll",  "pitch", "yaw", "Fx", "Fy", "Fz",
                                  "Mx", "My", "Mz", "roll_ref", "pitch_ref", "p_ref", "q_ref", "r_ref"};
    for (auto ch : v.gait.regulator_channels) c.push_back("u_" + std::string(to_string(ch)));
    for (int k = 0; k < v.aero.m; ++k) c.push_back("gamma" + std::to_string(k));
    for (const char* s : {"solver_status", "solver_iterations", "solver_objective", "solver_defect", "controller_status"})
        c.emplace_back(s);
    return c;
}

namespace detail {

inline double max_abs_state(const FullState& s) {
    return pack_state(s).cwiseAbs().maxCoeff();
}

inline bool state_finite(const FullState& s) { return pack_state(s).allFinite(); }

} // namespace detail

inline FullState scenario_initial_state(const ScenarioConfig& cfg) {
    std::mt19937_64 rng(cfg.rng_seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    const auto& ic = cfg.initial;
    double roll = ic.roll, pitch = ic.pitch, yaw = ic.yaw;
    Vec3 omega = Vec3::Zero();
    if (cfg.perturbation.attitude > 0) {
        roll += cfg.perturbation.attitude * n01(rng);
        pitch += cfg.perturbation.attitude * n01(rng);
        yaw += cfg.perturbation.attitude * n01(rng);
    }
    if (cfg.perturbation.rate > 0)
        for (int i = 0; i < 3; ++i) omega[i] = cfg.perturbation.rate * n01(rng);
    BodyState b;
    b.q = quaternion_from_euler(roll, pitch, yaw);
    b.v = Vec3(ic.speed * std::cos(yaw), ic.speed * std::sin(yaw), 0);
    b.omega = omega;
    return make_initial_state(b, cfg.vehicle.aero.m);
}

/// Runs the scenario. Per-solve diagnostics go to `log` when given.
inline RunResult run_scenario(const ScenarioConfig& cfg, std::ostream* log = nullptr) {
    cfg.validate();
    const Vehicle vehicle(cfg.vehicle);
    ControllerConfig cc = cfg.controller;
    cc.control_period = cfg.control_dt;
    RecedingHorizonController controller(vehicle, cc);

    const int nu = vehicle.regulator_count();
    const int m = vehicle.fourier_terms();
    const int per_control = cfg.steps_per_control();
    const auto steps = static_cast<long>(std::llround(cfg.duration / cfg.sim_dt));
    std::vector<double> thetas(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) thetas[static_cast<std::size_t>(k)] = station_theta(k, m);

    RunResult res;
    res.trace.channels = trace_channels(cfg.vehicle);
    FullState s = scenario_initial_state(cfg);
    VecX u = VecX::Zero(nu);
    ControllerOutput last;
    last.inputs = u;
    bool have_solve = false;

    auto record = [&](const FullState& st) {
        const VecX x = pack_state(st);
        const DynamicsEvaluation ev = vehicle.evaluate(st.t, x, u);
        const EulerAngles e = euler_angles(st.body.q);
        const VecX z = cfg.reference(st.t);
        std::vector<double> row;
        row.reserve(res.trace.width());
        row.push_back(st.t);
        for (int i = 0; i < 3; ++i) row.push_back(st.body.p[i]);
        row.insert(row.end(), {st.body.q.w(), st.body.q.x(), st.body.q.y(), st.body.q.z()});
        for (int i = 0; i < 3; ++i) row.push_back(st.body.v[i]);
        for (int i = 0; i < 3; ++i) row.push_back(st.body.omega[i]);
        row.insert(row.end(), {e.roll, e.pitch, e.yaw});
        for (int i = 0; i < 3; ++i) row.push_back(ev.aero.F[i]);
        for (int i = 0; i < 3; ++i) row.push_back(ev.aero.M[i]);
        for (int i = 0; i < 5; ++i) row.push_back(z[i]);
        for (int i = 0; i < nu; ++i) row.push_back(u[i]);
        for (double th : thetas) row.push_back(circulation(st.aero.a, cfg.vehicle.aero, th));
        row.push_back(have_solve ? static_cast<double>(last.solver_status) : -1.0);
        row.push_back(have_solve ? last.iterations : 0);
        row.push_back(have_solve ? last.objective : 0.0);
        row.push_back(have_solve ? last.max_defect : 0.0);
        row.push_back(static_cast<double>(last.status));
        res.trace.append(row);
    };

    for (long k = 0; k <= steps; ++k) {
        if (!detail::state_finite(s) || detail::max_abs_state(s) > cfg.abort_threshold) {
            res.status = ScenarioStatus::Aborted;
            res.diagnostic = "state magnitude exceeded " + format_double(cfg.abort_threshold) + " at t=" +
                             format_double(s.t);
            if (log) *log << "abort " << res.diagnostic << '\n';
            break;
        }
        if (cfg.controller_enabled && k % per_control == 0 && k < steps) {
            last = controller.step(s, cfg.reference);
            have_solve = true;
            u = last.inputs;
            res.solves.push_back({s.t, last});
            if (last.status != ControllerStatus::Ok) ++res.solver_failures;
            if (last.status == ControllerStatus::Fault) ++res.controller_faults;
            if (log) {
                *log << "solve t=" << format_double(s.t) << " status=" << to_string(last.solver_status)
                     << " controller=" << to_string(last.status) << " iterations=" << last.iterations
                     << " J=" << format_double(last.objective) << " defect=" << format_double(last.max_defect)
                     << " ineq=" << format_double(last.max_inequality_violation) << " u=";
                for (int i = 0; i < nu; ++i) *log << (i ? "," : "") << format_double(u[i]);
                *log << '\n';
            }
        }
        if (k % cfg.decimation == 0) record(s);
        if (k == steps) break;
        try {
            s = rk4_step(s, u, cfg.sim_dt, vehicle);
        } catch (const NumericalError& e) {
            res.status = ScenarioStatus::Aborted;
            res.diagnostic = std::string("dynamics failure at t=") + format_double(s.t) + ": " + e.what();
            if (log) *log << "abort " << res.diagnostic << '\n';
            break;
        }
        s.t = static_cast<double>(k + 1) * cfg.sim_dt;
    }
    res.final_state = s;
    return res;
}

} // namespace morphwing
