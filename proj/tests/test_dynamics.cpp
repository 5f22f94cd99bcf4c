#include "morphwing/checks.hpp"
#include "morphwing/dynamics.hpp"
#include "morphwing/rk4.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace morphwing;

namespace {

VehicleConfig inert_vehicle() {
    VehicleConfig v;
    v.aero.m = 4;
    v.aero_enabled = false;
    v.inertia.recoil = false;
    return v;
}

} // namespace

TEST(State, PackUnpackRoundTrip) {
    std::mt19937 rng(1);
    std::normal_distribution<double> n(0, 1);
    const int m = 6;
    FullState s;
    s.body.p = Vec3(n(rng), n(rng), n(rng));
    s.body.q = Quat(0.5, 0.5, -0.5, 0.5);
    s.body.v = Vec3(n(rng), n(rng), n(rng));
    s.body.omega = Vec3(n(rng), n(rng), n(rng));
    s.aero = AeroState::zero(m);
    for (int k = 0; k < m; ++k) {
        s.aero.a[k] = n(rng);
        s.aero.lag(k, 0) = n(rng);
        s.aero.lag(k, 1) = n(rng);
        s.aero.t_norm[k] = k;
    }
    s.wing_phase = 1.25;
    const VecX x = pack_state(s);
    EXPECT_EQ(x.size(), StateLayout{m}.full_size());
    EXPECT_EQ(pack_state(unpack_state(x, m, 0.0)), x);
}

TEST(Dynamics, FreeFallIsExactUnderRk4) {
    const Vehicle veh(inert_vehicle());
    FullState s = make_initial_state(BodyState{}, 4);
    const VecX u = VecX::Zero(veh.regulator_count());
    const double dt = 1e-3;
    for (int k = 0; k < 500; ++k) s = rk4_step(s, u, dt, veh);
    const double t = 0.5, g = veh.config().inertia.gravity;
    EXPECT_NEAR(s.t, t, 1e-12);
    EXPECT_NEAR(s.body.v.z(), g * t, 1e-12);
    EXPECT_NEAR(s.body.p.z(), 0.5 * g * t * t, 1e-12);
    EXPECT_NEAR(s.body.p.x(), 0.0, 1e-15);
}

TEST(Dynamics, QuaternionRateIsOrthogonalAlongTrajectories) {
    VehicleConfig cfg;
    cfg.aero.m = 6;
    const Vehicle veh(cfg);
    BodyState b;
    b.q = quaternion_from_euler(0.2, -0.3, 0.4);
    b.v = Vec3(4, 0.1, 0.2);
    b.omega = Vec3(0.5, -1.0, 0.3);
    FullState s = make_initial_state(b, 6);
    const VecX u = (VecX(2) << 0.1, -0.05).finished();
    for (int k = 0; k < 200; ++k) {
        const auto r = full_dynamics(s, u, veh);
        const Eigen::Vector4d q(s.body.q.w(), s.body.q.x(), s.body.q.y(), s.body.q.z());
        EXPECT_NEAR(r.q_dot.dot(q), 0.0, 1e-12);
        s = rk4_step(s, u, 1e-4, veh);
        EXPECT_NEAR(s.body.q.norm(), 1.0, 1e-15);
    }
}

TEST(Dynamics, TorqueFreeRotationConservesMomentumAndEnergy) {
    VehicleConfig cfg = inert_vehicle();
    cfg.inertia.gravity = 0;
    cfg.inertia.inertia << 2e-4, 1e-5, 0, 1e-5, 1e-4, 0, 0, 0, 2.5e-4;
    const Vehicle veh(cfg);
    BodyState b;
    b.omega = Vec3(3.0, 0.5, -1.0);
    FullState s = make_initial_state(b, 4);
    const Mat3& I = cfg.inertia.inertia;
    auto momentum = [&](const FullState& st) -> Vec3 { return st.body.q.toRotationMatrix() * (I * st.body.omega); };
    auto energy = [&](const FullState& st) { return 0.5 * st.body.omega.dot(I * st.body.omega); };
    const Vec3 h0 = momentum(s);
    const double e0 = energy(s);
    const VecX u = VecX::Zero(2);
    for (int k = 0; k < 2000; ++k) s = rk4_step(s, u, 5e-4, veh);
    EXPECT_LT((momentum(s) - h0).norm() / h0.norm(), 1e-8);
    EXPECT_LT(std::abs(energy(s) - e0) / e0, 1e-8);
}

TEST(Dynamics, RecoilOfASymmetricGaitStaysInThePlane) {
    VehicleConfig cfg;
    const Vehicle veh(cfg);
    for (double t : {0.0, 0.03, 0.11, 0.2}) {
        const auto fm = veh.recoil_wrench(gait_joint_state(cfg.gait, t, VecX::Zero(2)));
        EXPECT_LT(std::abs(fm.F.y()), 1e-15);
        EXPECT_LT(std::abs(fm.M.x()), 1e-15);
        EXPECT_LT(std::abs(fm.M.z()), 1e-15);
    }
    cfg.inertia.humerus_mass = cfg.inertia.radius_mass = 0;
    const Vehicle massless(cfg);
    const auto fm = massless.recoil_wrench(gait_joint_state(cfg.gait, 0.05, VecX::Zero(2)));
    EXPECT_EQ(fm.F.norm() + fm.M.norm(), 0.0);
}

TEST(Dynamics, RecoilAveragesOutOverACycle) {
    // a periodic gait has a periodic linkage velocity, so the mean reaction force vanishes
    VehicleConfig cfg;
    const Vehicle veh(cfg);
    const int n = 2000;
    const double T = 1.0 / cfg.gait.flap_frequency;
    Vec3 mean = Vec3::Zero();
    for (int k = 0; k < n; ++k) mean += veh.recoil_wrench(gait_joint_state(cfg.gait, k * T / n, VecX::Zero(2))).F / n;
    EXPECT_LT(mean.norm(), 1e-10);
}

TEST(Dynamics, PredictionStateOmitsBookkeeping) {
    VehicleConfig cfg;
    cfg.aero.m = 5;
    const Vehicle veh(cfg);
    const auto& L = veh.layout();
    BodyState b;
    b.v = Vec3(4, 0, 0);
    const VecX full = pack_state(make_initial_state(b, 5));
    const VecX u = VecX::Zero(2);
    const VecX df = veh.rhs(0.01, full, u);
    const VecX dp = veh.rhs(0.01, full.head(L.prediction_size()), u);
    EXPECT_EQ(dp.size(), L.prediction_size());
    EXPECT_EQ(dp, df.head(L.prediction_size()));
    EXPECT_THROW(veh.rhs(0.0, full.head(10), u), DomainError);
}

TEST(Dynamics, DegenerateQuaternionIsANumericalError) {
    const Vehicle veh(inert_vehicle());
    VecX x = pack_state(make_initial_state(BodyState{}, 4));
    x.segment<4>(StateLayout::kQ).setZero();
    EXPECT_THROW(veh.rhs(0.0, x, VecX::Zero(2)), NumericalError);
}

TEST(Dynamics, ConfigurationIsValidated) {
    VehicleConfig cfg;
    cfg.aero.S = 0.5;
    EXPECT_THROW(Vehicle{cfg}, ConfigError);
    cfg = VehicleConfig{};
    cfg.inertia.inertia(0, 1) = 1.0;
    EXPECT_THROW(Vehicle{cfg}, ConfigError);
    cfg = VehicleConfig{};
    cfg.inertia.inertia = Vec3(1e-4, 3e-5, 2.5e-4).asDiagonal();
    EXPECT_THROW(Vehicle{cfg}, ConfigError);
    cfg = VehicleConfig{};
    EXPECT_THROW(rk4_step(make_initial_state(BodyState{}, cfg.aero.m), VecX::Zero(2), 0.0, Vehicle(cfg)), DomainError);
}

TEST(Dynamics, PhaseAdvancesAtTheFlapFrequency) {
    const Vehicle veh(inert_vehicle());
    FullState s = make_initial_state(BodyState{}, 4);
    const double dt = 1e-3;
    for (int k = 0; k < 100; ++k) s = rk4_step(s, VecX::Zero(2), dt, veh);
    EXPECT_NEAR(s.wing_phase, std::fmod(2 * kPi * 3.5 * 0.1, 2 * kPi), 1e-9);
}

TEST(Oracles, Rk4GlobalOrder) {
    const auto r = checks::rk4_convergence();
    EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Oracles, SymmetricFlightDefaultVehicle) {
    const auto r = checks::symmetry();
    EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Oracles, SymmetricFlightWithAStationOnTheElbow) {
    VehicleConfig cfg;
    cfg.aero.m = 8;
    cfg.span.planform = Planform::rectangular();
    cfg.span.incidence = deg2rad(25);
    const auto r = checks::symmetry(cfg);
    EXPECT_TRUE(r.passed) << r.detail;
}
