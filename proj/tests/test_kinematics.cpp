#include "morphwing/kinematics.hpp"
#include "morphwing/rotation.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace morphwing;

namespace {

VecX zero_inputs(const GaitConfig& g) { return VecX::Zero(g.regulator_count()); }

} // namespace

TEST(Gait, ZeroInputIsMirrorSymmetric) {
    GaitConfig g;
    for (double t : {0.0, 0.013, 0.1, 0.2857}) {
        const auto ws = gait_joint_state(g, t, zero_inputs(g));
        EXPECT_EQ(ws.shoulder_angle[kLeft], ws.shoulder_angle[kRight]);
        EXPECT_EQ(ws.elbow_angle[kLeft], ws.elbow_angle[kRight]);
        EXPECT_FALSE(ws.saturated);
    }
}

TEST(Gait, PeriodicAtFlapFrequency) {
    GaitConfig g;
    const double T = 1.0 / g.flap_frequency;
    for (double t : {0.01, 0.07, 0.19}) {
        const auto a = gait_joint_state(g, t, zero_inputs(g));
        const auto b = gait_joint_state(g, t + 3 * T, zero_inputs(g));
        EXPECT_NEAR(a.shoulder_angle[0], b.shoulder_angle[0], 1e-12);
        EXPECT_NEAR(a.elbow_angle[1], b.elbow_angle[1], 1e-12);
    }
}

TEST(Gait, RatesMatchFiniteDifferences) {
    GaitConfig g;
    const VecX u = (VecX(2) << 0.1, -0.05).finished();
    const double h = 1e-6;
    for (double t : {0.02, 0.11, 0.23}) {
        const auto a = gait_joint_state(g, t - h, u), b = gait_joint_state(g, t + h, u), c = gait_joint_state(g, t, u);
        for (int s : {kLeft, kRight}) {
            EXPECT_NEAR((b.shoulder_angle[s] - a.shoulder_angle[s]) / (2 * h), c.shoulder_rate[s], 1e-6);
            EXPECT_NEAR((b.elbow_angle[s] - a.elbow_angle[s]) / (2 * h), c.elbow_rate[s], 1e-6);
            EXPECT_NEAR((b.shoulder_rate[s] - a.shoulder_rate[s]) / (2 * h), c.shoulder_accel[s], 1e-4);
            EXPECT_NEAR((b.elbow_rate[s] - a.elbow_rate[s]) / (2 * h), c.elbow_accel[s], 1e-4);
        }
    }
}

TEST(Gait, RegulatorChannelsMoveTheRightJoints) {
    GaitConfig g;
    g.regulator_channels = {RegulatorChannel::DifferentialElbow, RegulatorChannel::SymmetricElbow,
                            RegulatorChannel::DifferentialShoulder, RegulatorChannel::SymmetricShoulder};
    g.asymmetry_gains = VecX::Ones(4);
    g.stroke_limit = VecX::Constant(4, 0.1);
    g.elbow_min = -1;
    const auto base = gait_joint_state(g, 0.05, VecX::Zero(4));
    const auto at = [&](int j) {
        VecX u = VecX::Zero(4);
        u[j] = 0.05;
        return gait_joint_state(g, 0.05, u);
    };
    auto d = at(0);
    EXPECT_NEAR(d.elbow_angle[kLeft] - base.elbow_angle[kLeft], 0.05, 1e-15);
    EXPECT_NEAR(d.elbow_angle[kRight] - base.elbow_angle[kRight], -0.05, 1e-15);
    d = at(1);
    EXPECT_NEAR(d.elbow_angle[kLeft] - base.elbow_angle[kLeft], 0.05, 1e-15);
    EXPECT_NEAR(d.elbow_angle[kRight] - base.elbow_angle[kRight], 0.05, 1e-15);
    d = at(2);
    EXPECT_NEAR(d.shoulder_angle[kLeft] - base.shoulder_angle[kLeft], 0.05, 1e-15);
    EXPECT_NEAR(d.shoulder_angle[kRight] - base.shoulder_angle[kRight], -0.05, 1e-15);
    d = at(3);
    EXPECT_NEAR(d.shoulder_angle[kRight] - base.shoulder_angle[kRight], 0.05, 1e-15);
}

TEST(Gait, InputsClipToStrokeLimitAndFlag) {
    GaitConfig g;
    const VecX u = (VecX(2) << 1.0, 0.0).finished();
    const auto ws = gait_joint_state(g, 0.0, u);
    const auto base = gait_joint_state(g, 0.0, zero_inputs(g));
    EXPECT_TRUE(ws.saturated);
    EXPECT_NEAR(ws.elbow_angle[kLeft] - base.elbow_angle[kLeft], g.stroke_limit[0], 1e-15);
}

TEST(Gait, RejectsBadArguments) {
    GaitConfig g;
    EXPECT_THROW(gait_joint_state(g, -1e-3, zero_inputs(g)), DomainError);
    EXPECT_THROW(gait_joint_state(g, 0.0, VecX::Zero(3)), DomainError);
    g.stroke_limit = VecX::Constant(2, 2.0);
    EXPECT_THROW(g.validate(), ConfigError);
    g = GaitConfig{};
    g.asymmetry_gains = VecX::Ones(3);
    try {
        g.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "gait.asymmetry_gains");
    }
}

TEST(Gait, ChannelNamesRoundTrip) {
    for (auto c : {RegulatorChannel::DifferentialElbow, RegulatorChannel::SymmetricElbow,
                   RegulatorChannel::DifferentialShoulder, RegulatorChannel::SymmetricShoulder})
        EXPECT_EQ(regulator_channel_from_string(to_string(c)), c);
    EXPECT_THROW(regulator_channel_from_string("aileron"), ConfigError);
}

TEST(Linkage, FlatWingLiesAlongTheSpan) {
    WingState ws;
    SpanConfig span;
    const auto p = linkage_point(ws, span, kRight, 0.15);
    EXPECT_NEAR(p.position.y(), 0.15, 1e-15);
    EXPECT_NEAR(p.normal.z(), -1.0, 1e-15);
    const auto q = linkage_point(ws, span, kLeft, 0.15);
    EXPECT_NEAR(q.position.y(), -0.15, 1e-15);
}

TEST(Linkage, VelocityAndAccelerationMatchFiniteDifferences) {
    GaitConfig g;
    SpanConfig span;
    span.incidence = 0.2;
    const VecX u = (VecX(2) << 0.07, 0.03).finished();
    const double h = 1e-6;
    for (double arc : {0.05, 0.15, 0.19})
        for (int side : {kLeft, kRight}) {
            const double t = 0.04;
            const auto a = linkage_point(gait_joint_state(g, t - h, u), span, side, arc);
            const auto b = linkage_point(gait_joint_state(g, t + h, u), span, side, arc);
            const auto c = linkage_point(gait_joint_state(g, t, u), span, side, arc);
            EXPECT_LT(((b.position - a.position) / (2 * h) - c.velocity).norm(), 1e-6);
            EXPECT_LT(((b.velocity - a.velocity) / (2 * h) - c.acceleration).norm(), 1e-4);
        }
}

TEST(Linkage, SegmentLengthsArePreserved) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> ang(-0.8, 0.8);
    SpanConfig span;
    const double l1 = span.humerus_fraction * 0.5 * span.span;
    for (int i = 0; i < 100; ++i) {
        WingState ws;
        for (int s : {0, 1}) {
            ws.shoulder_angle[s] = ang(rng);
            ws.elbow_angle[s] = ang(rng);
        }
        for (int side : {kLeft, kRight}) {
            const auto elbow = linkage_point(ws, span, side, l1);
            const auto tip = linkage_point(ws, span, side, 0.5 * span.span);
            EXPECT_NEAR(elbow.position.norm(), l1, 1e-12);
            EXPECT_NEAR((tip.position - elbow.position).norm(), 0.5 * span.span - l1, 1e-12);
            EXPECT_NEAR(tip.chord.dot(tip.normal), 0.0, 1e-12);
        }
    }
}

TEST(Stations, LayoutFollowsTheCosineMap) {
    const SpanConfig span;
    for (int m : {1, 7, 8, 16}) {
        const auto st = station_geometry(WingState{}, span, m);
        ASSERT_EQ(static_cast<int>(st.size()), m);
        double ds = 0;
        for (int k = 0; k < m; ++k) {
            const auto& s = st[static_cast<std::size_t>(k)];
            EXPECT_NEAR(s.y, 0.5 * span.span * std::cos(s.theta), 1e-15);
            EXPECT_EQ(s.y, -st[static_cast<std::size_t>(m - 1 - k)].y);
            EXPECT_NEAR(s.chord, span.root_chord * std::sin(s.theta), 1e-15);
            if (k > 0) {
                EXPECT_LT(s.y, st[static_cast<std::size_t>(k - 1)].y);
            }
            ds += s.ds;
        }
        // midpoint sum of sin over (0, pi) approaches 2
        EXPECT_NEAR(ds / (0.5 * span.span), 2.0, m == 1 ? 0.5 : 0.05);
    }
}

TEST(Stations, RectangularPlanformHasConstantChord) {
    SpanConfig span;
    span.planform = Planform::rectangular();
    for (const auto& s : station_geometry(WingState{}, span, 9)) EXPECT_EQ(s.chord, span.root_chord);
}

TEST(Stations, TabulatedPlanformInterpolates) {
    Planform p{{0.0, 0.5, 1.0}, {1.0, 0.8, 0.2}};
    EXPECT_NO_THROW(p.validate());
    EXPECT_NEAR(p.ratio(std::acos(0.25)), 0.9, 1e-12);
    EXPECT_NEAR(p.ratio(std::acos(-0.75)), 0.5, 1e-12);
    EXPECT_THROW((Planform{{0.0, 0.4}, {1.0, 1.0}}).validate(), ConfigError);
}

TEST(Stations, MirroredUnderSymmetricGait) {
    GaitConfig g;
    SpanConfig span;
    span.planform = Planform::rectangular();
    for (int m : {8, 16}) {
        for (double t : {0.0, 0.05, 0.17}) {
            const auto st = station_geometry(gait_joint_state(g, t, zero_inputs(g)), span, m, {Vec3(4, 0, 0.5), Vec3::Zero()});
            for (int k = 0; k < m; ++k) {
                const auto& a = st[static_cast<std::size_t>(k)];
                const auto& b = st[static_cast<std::size_t>(m - 1 - k)];
                EXPECT_EQ(a.position_body.y(), -b.position_body.y());
                EXPECT_EQ(a.position_body.x(), b.position_body.x());
                EXPECT_EQ(a.w_motion, b.w_motion);
                EXPECT_EQ(a.v_e, b.v_e);
            }
        }
    }
}

TEST(Stations, BodyMotionEntersTheRelativeVelocity) {
    SpanConfig span;
    const BodyMotion motion{Vec3(4, 0, 0), Vec3(0.5, 0, 0)};
    const auto st = station_geometry(WingState{}, span, 5, motion);
    for (const auto& s : st) {
        const Vec3 expect = motion.velocity + motion.omega.cross(s.position_body);
        EXPECT_LT((s.velocity_body - expect).norm(), 1e-14);
        EXPECT_NEAR(s.u_chord, 4.0, 1e-12);
        EXPECT_NEAR(s.v_e, std::hypot(s.u_chord, s.w_motion), 1e-14);
    }
}

TEST(Rotation, EulerRoundTrip) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> a(-1.4, 1.4);
    for (int i = 0; i < 200; ++i) {
        const double r = 2 * a(rng), p = a(rng), y = 2 * a(rng);
        const auto e = euler_angles(quaternion_from_euler(r, p, y));
        EXPECT_NEAR(e.roll, r, 1e-10);
        EXPECT_NEAR(e.pitch, p, 1e-10);
        EXPECT_NEAR(e.yaw, y, 1e-10);
    }
}

TEST(Rotation, QuaternionRateIsOrthogonalToQ) {
    std::mt19937 rng(12);
    std::normal_distribution<double> n(0, 1);
    for (int i = 0; i < 200; ++i) {
        Quat q(n(rng), n(rng), n(rng), n(rng));
        q.normalize();
        const Vec3 w(n(rng), n(rng), n(rng));
        const Eigen::Vector4d qd = quaternion_rate(q, w);
        EXPECT_NEAR(qd.dot(Eigen::Vector4d(q.w(), q.x(), q.y(), q.z())), 0.0, 1e-14);
    }
}
