#pragma once

/**
 * Flapping-gait generator and articulated-wing geometry.
 *
 * Each half-wing is a two-segment rigid linkage hinged at a shared root
 * point: the humerus rotates about the body x-axis (shoulder plunge) and the
 * outer segment folds aft inside the wing plane about the elbow (flexion).
 * Lifting-line stations are placed uniformly in the spanwise angle
 * theta (y = (S/2) cos theta) and mapped onto the linkage by arc length, so
 * folding changes the station positions and orientations but never the
 * Fourier basis.
 *
 * Body frame: x forward, y right, z down. Index 0 is the left side.
 */

#include "morphwing/common.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace morphwing {

enum Side : int { kLeft = 0, kRight = 1 };

/// Joint pattern driven by one regulator input.
enum class RegulatorChannel {
    DifferentialElbow,    // elbow_L += g*u, elbow_R -= g*u
    SymmetricElbow,       // both elbows += g*u
    DifferentialShoulder, // shoulder_L += g*u, shoulder_R -= g*u
    SymmetricShoulder,    // both shoulders += g*u
};

inline std::string_view to_string(RegulatorChannel c) {
    switch (c) {
    case RegulatorChannel::DifferentialElbow: return "differential_elbow";
    case RegulatorChannel::SymmetricElbow: return "symmetric_elbow";
    case RegulatorChannel::DifferentialShoulder: return "differential_shoulder";
    case RegulatorChannel::SymmetricShoulder: return "symmetric_shoulder";
    }
    return "unknown";
}

inline RegulatorChannel regulator_channel_from_string(std::string_view s) {
    for (auto c : {RegulatorChannel::DifferentialElbow, RegulatorChannel::SymmetricElbow,
                   RegulatorChannel::DifferentialShoulder, RegulatorChannel::SymmetricShoulder}) {
        if (to_string(c) == s) return c;
    }
    throw ConfigError("gait.regulator_channels", "unknown channel '" + std::string(s) + "'");
}

struct GaitConfig {
    double flap_frequency = 3.5;         // Hz
    double plunge_amplitude = 0.35;      // rad
    double flexion_amplitude = 0.3;      // rad
    double flexion_phase_lag = kPi / 2;  // rad, elbow leads shoulder
    double flexion_offset = 0.3;         // rad, mean fold angle
    std::vector<RegulatorChannel> regulator_channels{RegulatorChannel::DifferentialElbow,
                                                     RegulatorChannel::SymmetricElbow};
    VecX asymmetry_gains = VecX::Ones(2); // per input
    VecX stroke_limit = VecX::Constant(2, 0.25);
    double shoulder_limit = 1.2;         // |shoulder| bound, rad
    double elbow_min = -0.6;             // rad
    double elbow_max = 1.4;              // rad

    int regulator_count() const { return static_cast<int>(regulator_channels.size()); }

    void validate() const {
        if (!(flap_frequency > 0)) throw ConfigError("gait.flap_frequency", "must be > 0");
        if (!(plunge_amplitude >= 0 && plunge_amplitude < kPi / 2))
            throw ConfigError("gait.plunge_amplitude", "must lie in [0, pi/2)");
        if (!(flexion_amplitude >= 0 && flexion_amplitude < kPi / 2))
            throw ConfigError("gait.flexion_amplitude", "must lie in [0, pi/2)");
        const auto n = regulator_channels.size();
        if (static_cast<std::size_t>(asymmetry_gains.size()) != n)
            throw ConfigError("gait.asymmetry_gains", "length must equal the number of regulator channels");
        if (static_cast<std::size_t>(stroke_limit.size()) != n)
            throw ConfigError("gait.stroke_limit", "length must equal the number of regulator channels");
        if ((stroke_limit.array() < 0).any()) throw ConfigError("gait.stroke_limit", "must be >= 0");
        double shoulder_reach = plunge_amplitude;
        double elbow_reach = flexion_amplitude;
        for (std::size_t j = 0; j < n; ++j) {
            const double reach = std::abs(asymmetry_gains[j]) * stroke_limit[j];
            if (regulator_channels[j] == RegulatorChannel::DifferentialShoulder ||
                regulator_channels[j] == RegulatorChannel::SymmetricShoulder)
                shoulder_reach += reach;
            else
                elbow_reach += reach;
        }
        if (shoulder_reach > shoulder_limit)
            throw ConfigError("gait.shoulder_limit", "gait plus regulator stroke exceeds the shoulder limit");
        if (flexion_offset - elbow_reach < elbow_min)
            throw ConfigError("gait.elbow_min", "gait plus regulator stroke exceeds the elbow limit");
        if (flexion_offset + elbow_reach > elbow_max)
            throw ConfigError("gait.elbow_max", "gait plus regulator stroke exceeds the elbow limit");
    }
};

/// Joint angles, rates and accelerations for both sides.
struct WingState {
    std::array<double, 2> shoulder_angle{};
    std::array<double, 2> shoulder_rate{};
    std::array<double, 2> shoulder_accel{};
    std::array<double, 2> elbow_angle{};
    std::array<double, 2> elbow_rate{};
    std::array<double, 2> elbow_accel{};
    double phase = 0.0; // gait phase in [0, 2*pi)
    bool saturated = false; // a regulator input was clipped to its stroke limit
};

/**
 * Sinusoidal base gait plus regulator offsets.
 *
 * shoulder = A sin(2 pi f t), elbow = offset + B sin(2 pi f t + lag). Regulator
 * inputs are clipped to the stroke limits (flagged in `saturated`) and added as
 * quasi-static joint offsets. Rates and accelerations are analytic.
 */
inline WingState gait_joint_state(const GaitConfig& config, double t, const Eigen::Ref<const VecX>& inputs) {
    if (!(t >= 0)) throw DomainError("gait_joint_state: t must be >= 0");
    if (inputs.size() != config.regulator_count())
        throw DomainError("gait_joint_state: expected " + std::to_string(config.regulator_count()) +
                          " regulator inputs");
    const double w = 2 * kPi * config.flap_frequency;
    const double arg = w * t;
    const double s = std::sin(arg), c = std::cos(arg);
    const double se = std::sin(arg + config.flexion_phase_lag);
    const double ce = std::cos(arg + config.flexion_phase_lag);

    WingState ws;
    for (int side : {kLeft, kRight}) {
        ws.shoulder_angle[side] = config.plunge_amplitude * s;
        ws.shoulder_rate[side] = config.plunge_amplitude * w * c;
        ws.shoulder_accel[side] = -config.plunge_amplitude * w * w * s;
        ws.elbow_angle[side] = config.flexion_offset + config.flexion_amplitude * se;
        ws.elbow_rate[side] = config.flexion_amplitude * w * ce;
        ws.elbow_accel[side] = -config.flexion_amplitude * w * w * se;
    }

    for (int j = 0; j < inputs.size(); ++j) {
        double u = inputs[j];
        const double lim = config.stroke_limit[j];
        if (std::abs(u) > lim) {
            u = std::clamp(u, -lim, lim);
            ws.saturated = true;
        }
        const double d = config.asymmetry_gains[j] * u;
        switch (config.regulator_channels[j]) {
        case RegulatorChannel::DifferentialElbow:
            ws.elbow_angle[kLeft] += d;
            ws.elbow_angle[kRight] -= d;
            break;
        case RegulatorChannel::SymmetricElbow:
            ws.elbow_angle[kLeft] += d;
            ws.elbow_angle[kRight] += d;
            break;
        case RegulatorChannel::DifferentialShoulder:
            ws.shoulder_angle[kLeft] += d;
            ws.shoulder_angle[kRight] -= d;
            break;
        case RegulatorChannel::SymmetricShoulder:
            ws.shoulder_angle[kLeft] += d;
            ws.shoulder_angle[kRight] += d;
            break;
        }
    }
    ws.phase = std::fmod(arg, 2 * kPi);
    return ws;
}

/// Chord distribution c(eta)/c0 over the normalized span |eta| in [0, 1].
/// An empty table means elliptic: c = c0 * sqrt(1 - eta^2) = c0 * sin(theta).
struct Planform {
    std::vector<double> eta;
    std::vector<double> chord_ratio;

    bool elliptic() const { return eta.empty(); }

    static Planform rectangular() { return Planform{{0.0, 1.0}, {1.0, 1.0}}; }

    void validate() const {
        if (elliptic()) return;
        if (eta.size() != chord_ratio.size() || eta.size() < 2)
            throw ConfigError("wing.planform", "eta and chord_ratio must have equal length >= 2");
        if (eta.front() != 0.0 || eta.back() != 1.0)
            throw ConfigError("wing.planform", "eta table must span [0, 1]");
        for (std::size_t i = 1; i < eta.size(); ++i)
            if (!(eta[i] > eta[i - 1])) throw ConfigError("wing.planform", "eta must be strictly increasing");
        for (std::size_t i = 0; i + 1 < chord_ratio.size(); ++i)
            if (!(chord_ratio[i] > 0)) throw ConfigError("wing.planform", "interior chord must be > 0");
        if (chord_ratio.back() < 0) throw ConfigError("wing.planform", "tip chord must be >= 0");
    }

    double ratio(double theta) const {
        if (elliptic()) return std::sin(theta);
        const double e = std::abs(std::cos(theta));
        auto it = std::upper_bound(eta.begin(), eta.end(), e);
        if (it == eta.end()) return chord_ratio.back();
        const auto i = static_cast<std::size_t>(it - eta.begin());
        const double f = (e - eta[i - 1]) / (eta[i] - eta[i - 1]);
        return chord_ratio[i - 1] + f * (chord_ratio[i] - chord_ratio[i - 1]);
    }
};

struct SpanConfig {
    double span = 0.4;        // unfolded tip-to-tip length S, m
    double root_chord = 0.12; // c0, m
    Planform planform;
    double humerus_fraction = 0.5; // humerus length / half-span
    Vec3 root_position = Vec3::Zero(); // quarter-chord root point relative to the CoM, m
    double incidence = 0.0;   // section pitch relative to body x, nose up, rad

    void validate() const {
        if (!(span > 0)) throw ConfigError("wing.span", "must be > 0");
        if (!(root_chord > 0)) throw ConfigError("wing.root_chord", "must be > 0");
        if (!(humerus_fraction > 0 && humerus_fraction <= 1))
            throw ConfigError("wing.humerus_fraction", "must lie in (0, 1]");
        planform.validate();
    }
};

/// Kinematic quantities of one material point on a half-wing, body frame,
/// relative to the body (no rigid-body motion).
struct LinkagePoint {
    Vec3 position;
    Vec3 velocity;
    Vec3 acceleration;
    Vec3 chord;  // unit, pointing to the leading edge
    Vec3 normal; // unit, lift-positive section normal
};

/// Point at arc length `arc` (m) from the root along one side's linkage.
inline LinkagePoint linkage_point(const WingState& wing, const SpanConfig& span, int side, double arc) {
    const double sgn = side == kRight ? 1.0 : -1.0;
    const double l1 = span.humerus_fraction * 0.5 * span.span;

    Vec3 p(0, arc, 0), dp = Vec3::Zero(), ddp = Vec3::Zero();
    double sweep = 0.0;
    const double phi = wing.elbow_angle[side];
    if (arc > l1) {
        const double r = arc - l1;
        const double sp = std::sin(phi), cp = std::cos(phi);
        p = Vec3(-r * sp, l1 + r * cp, 0);
        dp = Vec3(-r * cp, -r * sp, 0);
        ddp = Vec3(r * sp, -r * cp, 0);
        sweep = phi;
    }
    const double si = std::sin(span.incidence), ci = std::cos(span.incidence);
    const double ss = std::sin(sweep), cs = std::cos(sweep);
    Vec3 chord(ci * cs, ci * ss, -si);
    Vec3 normal(-si * cs, -si * ss, -ci);

    // mirror to the requested side
    p.y() *= sgn;
    dp.y() *= sgn;
    ddp.y() *= sgn;
    chord.y() *= sgn;
    normal.y() *= sgn;

    // shoulder plunge: rotation about body x by alpha = -sgn * beta
    const double alpha = -sgn * wing.shoulder_angle[side];
    const double da = -sgn * wing.shoulder_rate[side];
    const double dda = -sgn * wing.shoulder_accel[side];
    const double sa = std::sin(alpha), ca = std::cos(alpha);
    Mat3 R, dR, ddR;
    R << 1, 0, 0, 0, ca, -sa, 0, sa, ca;
    dR << 0, 0, 0, 0, -sa, -ca, 0, ca, -sa;
    ddR << 0, 0, 0, 0, -ca, sa, 0, -sa, -ca;

    const double dphi = arc > l1 ? wing.elbow_rate[side] : 0.0;
    const double ddphi = arc > l1 ? wing.elbow_accel[side] : 0.0;

    LinkagePoint out;
    out.position = span.root_position + R * p;
    out.velocity = dR * p * da + R * dp * dphi;
    out.acceleration = ddR * p * (da * da) + dR * p * dda + 2.0 * dR * dp * (da * dphi) +
                       R * (ddp * (dphi * dphi) + dp * ddphi);
    out.chord = R * chord;
    out.normal = R * normal;
    return out;
}

/// Rigid-body motion of the airframe relative to still air, body frame.
struct BodyMotion {
    Vec3 velocity = Vec3::Zero();
    Vec3 omega = Vec3::Zero();
};

struct StationGeometry {
    double y = 0;      // lifting-line coordinate (S/2) cos(theta), m
    double theta = 0;  // rad
    double chord = 0;  // m
    double ds = 0;     // quadrature weight (S/2) sin(theta) dtheta, m
    int side = kRight;
    Vec3 position_body = Vec3::Zero(); // quarter-chord point
    Vec3 normal_body = Vec3::UnitZ() * -1.0;
    Vec3 chord_body = Vec3::UnitX();
    Vec3 velocity_body = Vec3::Zero(); // quarter-chord velocity relative to still air
    double u_chord = 0;  // oncoming speed along the chord, m/s
    double w_motion = 0; // motion-induced upwash along the section normal, m/s
    double v_e = 0;      // speed in the section plane, m/s
};

inline double station_theta(int k, int n_stations) { return (k + 1) * kPi / (n_stations + 1); }

/**
 * Lifting-line stations at theta_k = k pi / (m + 1), k = 1..m, mapped onto the
 * current linkage. Station velocities include body translation and rotation,
 * shoulder plunge and elbow flexion.
 */
inline std::vector<StationGeometry> station_geometry(const WingState& wing, const SpanConfig& span,
                                                     int n_stations, const BodyMotion& motion = {}) {
    if (n_stations < 1) throw ConfigError("aero.fourier_terms", "n_stations must be >= 1");
    const double half = 0.5 * span.span;
    const double dtheta = kPi / (n_stations + 1);
    std::vector<StationGeometry> out(static_cast<std::size_t>(n_stations));
    for (int k = 0; k < n_stations; ++k) {
        auto& st = out[static_cast<std::size_t>(k)];
        st.theta = station_theta(k, n_stations);
        // mirrored stations share |eta| bit for bit, so a station on the elbow
        // lands on the same segment on both sides
        const int k_right = std::min(k, n_stations - 1 - k);
        const double eta_abs = std::cos(station_theta(k_right, n_stations));
        const double eta = 2 * k + 1 == n_stations ? 0.0 : (k == k_right ? eta_abs : -eta_abs);
        st.y = half * eta;
        st.chord = span.root_chord * span.planform.ratio(st.theta);
        st.ds = dtheta * half * std::sin(st.theta);

        LinkagePoint lp;
        if (eta == 0.0) {
            // root station shared by both sides
            const auto l = linkage_point(wing, span, kLeft, 0.0);
            const auto r = linkage_point(wing, span, kRight, 0.0);
            lp = r;
            lp.chord = (l.chord + r.chord).normalized();
            lp.normal = (l.normal + r.normal).normalized();
            st.side = kRight;
        } else {
            st.side = eta > 0 ? kRight : kLeft;
            lp = linkage_point(wing, span, st.side, eta_abs * half);
        }
        st.position_body = lp.position;
        st.chord_body = lp.chord;
        st.normal_body = lp.normal;
        st.velocity_body = motion.velocity + motion.omega.cross(lp.position) + lp.velocity;
        st.u_chord = st.velocity_body.dot(st.chord_body);
        st.w_motion = -st.velocity_body.dot(st.normal_body);
        st.v_e = std::hypot(st.u_chord, st.w_motion);
    }
    return out;
}

} // namespace morphwing
