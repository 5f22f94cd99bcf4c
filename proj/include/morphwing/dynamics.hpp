#pragma once

/**
 * Coupled rigid-body, lifting-line and gait dynamics.
 *
 * The state is packed into one vector so that body and aerodynamic lag states
 * advance inside the same Runge-Kutta stages:
 *
 *     [ p(3) | q(4: w x y z) | v(3) | omega(3) | a(m) | z1(m) | z2(m) | t_norm(m) | phase ]
 *
 * The first 13 + 3m entries form the prediction state used by the controller;
 * normalized time and gait phase are bookkeeping that nothing feeds back on.
 * Inertial frame is north-east-down, so gravity acts along +z.
 */

#include "morphwing/aero.hpp"
#include "morphwing/kinematics.hpp"
#include "morphwing/rk4.hpp"
#include "morphwing/rotation.hpp"

#include <vector>

namespace morphwing {

struct InertiaConfig {
    double mass = 0.040;                             // kg, airframe plus wings
    Mat3 inertia = Eigen::Vector3d(2e-4, 1e-4, 2.5e-4).asDiagonal(); // kg m^2
    double gravity = 9.81;                           // m/s^2
    bool recoil = true;                              // wing inertial reaction on the body
    double humerus_mass = 0.002;                     // kg per side, lumped at segment midpoint
    double radius_mass = 0.001;                      // kg per side

    void validate() const {
        if (!(mass > 0)) throw ConfigError("inertia.mass", "must be > 0");
        if (!inertia.isApprox(inertia.transpose(), 1e-12))
            throw ConfigError("inertia.inertia", "must be symmetric");
        Eigen::LLT<Mat3> llt(inertia);
        if (llt.info() != Eigen::Success) throw ConfigError("inertia.inertia", "must be positive-definite");
        const Vec3 principal = Eigen::SelfAdjointEigenSolver<Mat3>(inertia).eigenvalues();
        if (principal[2] > (principal[0] + principal[1]) * (1 + 1e-12))
            throw ConfigError("inertia.inertia", "principal moments violate the triangle inequality");
        if (!(gravity >= 0)) throw ConfigError("inertia.gravity", "must be >= 0");
        if (!(humerus_mass >= 0 && radius_mass >= 0))
            throw ConfigError("inertia.humerus_mass", "segment masses must be >= 0");
    }
};

struct VehicleConfig {
    GaitConfig gait;
    SpanConfig span;
    AeroConfig aero;
    WagnerCoefficients wagner;
    InertiaConfig inertia;
    bool aero_enabled = true;

    void validate() const {
        gait.validate();
        span.validate();
        aero.validate();
        wagner.validate();
        inertia.validate();
        if (aero.S != span.span) throw ConfigError("wing.span", "aero and wing span disagree");
        if (aero.c0 != span.root_chord) throw ConfigError("wing.root_chord", "aero and wing root chord disagree");
    }
};

struct BodyState {
    Vec3 p = Vec3::Zero();
    Quat q = Quat::Identity();
    Vec3 v = Vec3::Zero();
    Vec3 omega = Vec3::Zero();
};

struct FullState {
    BodyState body;
    AeroState aero;
    double wing_phase = 0;
    double t = 0;
};

/// Index layout of the packed state for `m` Fourier terms.
struct StateLayout {
    int m = 0;
    static constexpr int kP = 0, kQ = 3, kV = 7, kW = 10, kAero = 13;
    int a() const { return kAero; }
    int z1() const { return kAero + m; }
    int z2() const { return kAero + 2 * m; }
    int t_norm() const { return kAero + 3 * m; }
    int phase() const { return kAero + 4 * m; }
    int prediction_size() const { return kAero + 3 * m; }
    int full_size() const { return kAero + 4 * m + 1; }
};

inline VecX pack_state(const FullState& s) {
    const int m = static_cast<int>(s.aero.a.size());
    const StateLayout L{m};
    VecX x(L.full_size());
    x.segment<3>(L.kP) = s.body.p;
    x.segment<4>(L.kQ) << s.body.q.w(), s.body.q.x(), s.body.q.y(), s.body.q.z();
    x.segment<3>(L.kV) = s.body.v;
    x.segment<3>(L.kW) = s.body.omega;
    x.segment(L.a(), m) = s.aero.a;
    x.segment(L.z1(), m) = s.aero.lag.col(0);
    x.segment(L.z2(), m) = s.aero.lag.col(1);
    x.segment(L.t_norm(), m) = s.aero.t_norm;
    x[L.phase()] = s.wing_phase;
    return x;
}

inline FullState unpack_state(const VecX& x, int m, double t) {
    const StateLayout L{m};
    FullState s;
    s.body.p = x.segment<3>(L.kP);
    s.body.q = Quat(x[L.kQ], x[L.kQ + 1], x[L.kQ + 2], x[L.kQ + 3]);
    s.body.v = x.segment<3>(L.kV);
    s.body.omega = x.segment<3>(L.kW);
    s.aero.a = x.segment(L.a(), m);
    s.aero.lag.resize(m, 2);
    s.aero.lag.col(0) = x.segment(L.z1(), m);
    s.aero.lag.col(1) = x.segment(L.z2(), m);
    if (x.size() >= L.full_size()) {
        s.aero.t_norm = x.segment(L.t_norm(), m);
        s.wing_phase = x[L.phase()];
    } else {
        s.aero.t_norm = VecX::Zero(m);
    }
    s.t = t;
    return s;
}

/// Everything computed during one evaluation of the full dynamics.
struct DynamicsEvaluation {
    VecX derivative;
    ForceMoment aero;
    ForceMoment recoil;
    WingState wing;
    std::vector<StationGeometry> stations;
    AeroRates rates;
};

class Vehicle {
public:
    explicit Vehicle(VehicleConfig config)
        : config_(std::move(config)), layout_{config_.aero.m},
          basis_(LiftingLineBasis::uniform(config_.aero.m)) {
        config_.validate();
        inertia_inv_ = config_.inertia.inertia.inverse();
    }

    const VehicleConfig& config() const { return config_; }
    const StateLayout& layout() const { return layout_; }
    const LiftingLineBasis& basis() const { return basis_; }
    int fourier_terms() const { return config_.aero.m; }
    int regulator_count() const { return config_.gait.regulator_count(); }

    /**
     * Time derivative of a packed state (prediction-sized or full-sized; the
     * derivative has the same length as `x`).
     */
    DynamicsEvaluation evaluate(double t, const Eigen::Ref<const VecX>& x, const Eigen::Ref<const VecX>& inputs) const {
        const int m = layout_.m;
        const bool full = x.size() == layout_.full_size();
        if (!full && x.size() != layout_.prediction_size())
            throw DomainError("Vehicle::evaluate: state has wrong dimension");

        DynamicsEvaluation ev;
        ev.derivative = VecX::Zero(x.size());

        Quat q(x[StateLayout::kQ], x[StateLayout::kQ + 1], x[StateLayout::kQ + 2], x[StateLayout::kQ + 3]);
        const double qn = q.norm();
        if (!(qn > 0) || !std::isfinite(qn)) throw NumericalError("Vehicle::evaluate: degenerate attitude quaternion");
        const Mat3 R = q.normalized().toRotationMatrix();
        const Vec3 v = x.segment<3>(StateLayout::kV);
        const Vec3 omega = x.segment<3>(StateLayout::kW);

        AeroState aero;
        aero.a = x.segment(layout_.a(), m);
        aero.lag.resize(m, 2);
        aero.lag.col(0) = x.segment(layout_.z1(), m);
        aero.lag.col(1) = x.segment(layout_.z2(), m);

        ev.wing = gait_joint_state(config_.gait, std::max(t, 0.0), inputs);
        BodyMotion motion{R.transpose() * v, omega};
        ev.stations = station_geometry(ev.wing, config_.span, m, motion);

        VecX upwash(m);
        for (int k = 0; k < m; ++k) upwash[k] = ev.stations[static_cast<std::size_t>(k)].w_motion;
        ev.rates = aero_rhs(aero, ev.stations, upwash, config_.aero, config_.wagner, basis_);
        if (config_.aero_enabled) ev.aero = integrate_wrench(ev.stations, aero.a, ev.rates.a_dot, config_.aero);

        for (int k = 0; k < m; ++k) {
            if (!std::isfinite(ev.rates.a_dot[k]) || !ev.rates.lag_rates.row(k).allFinite())
                throw NumericalError("non-finite aerodynamic rate at station " + std::to_string(k), k);
        }
        if (!ev.aero.F.allFinite() || !ev.aero.M.allFinite())
            throw NumericalError("non-finite aerodynamic wrench");

        if (config_.inertia.recoil) ev.recoil = recoil_wrench(ev.wing);

        const auto& in = config_.inertia;
        const Vec3 F = ev.aero.F + ev.recoil.F;
        const Vec3 M = ev.aero.M + ev.recoil.M;
        auto& d = ev.derivative;
        d.segment<3>(StateLayout::kP) = v;
        d.segment<4>(StateLayout::kQ) = quaternion_rate(q, omega);
        d.segment<3>(StateLayout::kV) = R * F / in.mass + Vec3(0, 0, in.gravity);
        d.segment<3>(StateLayout::kW) = inertia_inv_ * (M - omega.cross(in.inertia * omega));
        d.segment(layout_.a(), m) = ev.rates.a_dot;
        d.segment(layout_.z1(), m) = ev.rates.lag_rates.col(0);
        d.segment(layout_.z2(), m) = ev.rates.lag_rates.col(1);
        if (full) {
            d.segment(layout_.t_norm(), m) = ev.rates.t_norm_rate;
            d[layout_.phase()] = 2 * kPi * config_.gait.flap_frequency;
        }
        return ev;
    }

    VecX rhs(double t, const Eigen::Ref<const VecX>& x, const Eigen::Ref<const VecX>& inputs) const {
        return evaluate(t, x, inputs).derivative;
    }

    /// Reaction of the lumped wing-segment masses on the body (body frame).
    ForceMoment recoil_wrench(const WingState& wing) const {
        const auto& in = config_.inertia;
        const double half = 0.5 * config_.span.span;
        const double l1 = config_.span.humerus_fraction * half;
        const double l2 = half - l1;
        ForceMoment fm;
        for (int side : {kLeft, kRight}) {
            const std::pair<double, double> pts[2] = {{0.5 * l1, in.humerus_mass}, {l1 + 0.5 * l2, in.radius_mass}};
            for (const auto& [arc, mass] : pts) {
                if (mass == 0) continue;
                const auto lp = linkage_point(wing, config_.span, side, arc);
                const Vec3 f = -mass * lp.acceleration;
                fm.F += f;
                fm.M += lp.position.cross(f);
            }
        }
        return fm;
    }

private:
    VehicleConfig config_;
    StateLayout layout_;
    LiftingLineBasis basis_;
    Mat3 inertia_inv_;
};

/// Structured time derivative of a FullState.
struct FullStateRate {
    Vec3 p_dot;
    Eigen::Vector4d q_dot; // (w, x, y, z)
    Vec3 v_dot;
    Vec3 omega_dot;
    VecX a_dot;
    MatX lag_dot;
    VecX t_norm_dot;
    double phase_dot = 0;
    ForceMoment aero;
};

/// Kinematics -> stations -> lifting line -> wrench -> Newton-Euler.
inline FullStateRate full_dynamics(const FullState& state, const Eigen::Ref<const VecX>& inputs, const Vehicle& vehicle) {
    const auto ev = vehicle.evaluate(state.t, pack_state(state), inputs);
    const auto& L = vehicle.layout();
    const auto& d = ev.derivative;
    FullStateRate r;
    r.p_dot = d.segment<3>(L.kP);
    r.q_dot = d.segment<4>(L.kQ);
    r.v_dot = d.segment<3>(L.kV);
    r.omega_dot = d.segment<3>(L.kW);
    r.a_dot = d.segment(L.a(), L.m);
    r.lag_dot.resize(L.m, 2);
    r.lag_dot.col(0) = d.segment(L.z1(), L.m);
    r.lag_dot.col(1) = d.segment(L.z2(), L.m);
    r.t_norm_dot = d.segment(L.t_norm(), L.m);
    r.phase_dot = d[L.phase()];
    r.aero = ev.aero;
    return r;
}

/// Classical RK4 over the packed state, then quaternion renormalization and
/// phase wrap.
inline FullState rk4_step(const FullState& state, const Eigen::Ref<const VecX>& inputs, double dt, const Vehicle& vehicle) {
    if (!(dt > 0)) throw DomainError("rk4_step: dt must be > 0");
    const VecX u = inputs;
    auto f = [&](double t, const VecX& x) { return vehicle.rhs(t, x, u); };
    const VecX x1 = rk4(f, state.t, pack_state(state), dt);
    FullState next = unpack_state(x1, vehicle.fourier_terms(), state.t + dt);
    next.body.q.normalize();
    next.wing_phase = std::fmod(next.wing_phase, 2 * kPi);
    if (next.wing_phase < 0) next.wing_phase += 2 * kPi;
    return next;
}

/// Initial state at rest aerodynamically (zero circulation and lag states).
inline FullState make_initial_state(const BodyState& body, int m, double t = 0) {
    FullState s;
    s.body = body;
    s.body.q.normalize();
    s.aero = AeroState::zero(m);
    s.t = t;
    return s;
}

} // namespace morphwing
