#pragma once

/**
 * Built-in oracle suite. Every check compares the library against an
 * independent reference (closed form, matrix exponential, Riccati recursion
 * or exact algebraic identity) and reports one line.
 */

#include "morphwing/aero.hpp"
#include "morphwing/analysis.hpp"
#include "morphwing/collocation.hpp"
#include "morphwing/dynamics.hpp"
#include "morphwing/rk4.hpp"
#include "morphwing/trace.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace morphwing::checks {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

inline std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

/// Wagner function: Phi(0) = 1/2, strictly increasing, Phi(200) within 1e-4 of 1.
inline CheckResult wagner_function() {
    const WagnerCoefficients w;
    const double p0 = wagner(0.0, w);
    bool increasing = true;
    double prev = p0;
    for (int i = 1; i <= 20000; ++i) {
        const double v = wagner(i * 0.01, w);
        increasing = increasing && v > prev;
        prev = v;
    }
    const double tail = std::abs(wagner(200.0, w) - 1.0);
    return {"wagner function", p0 == 0.5 && increasing && tail < 1e-4,
            fmt("Phi(0)=%.17g |Phi(200)-1|=%.3e", p0, tail) + (increasing ? " increasing" : " NOT increasing")};
}

namespace detail {

/// Frozen flat wing: gait amplitudes and fold removed.
inline VehicleConfig frozen_wing(double span, double root_chord, Planform planform, int m) {
    VehicleConfig v;
    v.gait.plunge_amplitude = 0;
    v.gait.flexion_amplitude = 0;
    v.gait.flexion_offset = 0;
    v.span.span = span;
    v.span.root_chord = root_chord;
    v.span.planform = std::move(planform);
    v.aero.S = span;
    v.aero.c0 = root_chord;
    v.aero.m = m;
    return v;
}

/// Aerodynamic state [a; z1; z2] and its rate for fixed stations and upwash.
struct FrozenAero {
    std::vector<StationGeometry> stations;
    VecX upwash;
    AeroConfig cfg;
    WagnerCoefficients w;
    LiftingLineBasis basis;
    int m;

    VecX rate(const VecX& s) const {
        AeroState st{s.segment(0, m), MatX(m, 2), VecX::Zero(m)};
        st.lag.col(0) = s.segment(m, m);
        st.lag.col(1) = s.segment(2 * m, m);
        const AeroRates r = aero_rhs(st, stations, upwash, cfg, w, basis);
        VecX out(3 * m);
        out << r.a_dot, r.lag_rates.col(0), r.lag_rates.col(1);
        return out;
    }

    /// The rate is affine in the state, so the steady state is one linear solve.
    VecX steady() const {
        const int n = 3 * m;
        const VecX f0 = rate(VecX::Zero(n));
        MatX J(n, n);
        for (int i = 0; i < n; ++i) J.col(i) = rate(VecX::Unit(n, i)) - f0;
        return J.fullPivLu().solve(-f0);
    }
};

inline FrozenAero frozen_aero(const VehicleConfig& v, const Vec3& body_velocity, double upwash) {
    const WingState ws = gait_joint_state(v.gait, 0.0, VecX::Zero(v.gait.regulator_count()));
    auto stations = station_geometry(ws, v.span, v.aero.m, BodyMotion{body_velocity, Vec3::Zero()});
    VecX up = VecX::Constant(v.aero.m, upwash);
    return {stations, up, v.aero, v.wagner, LiftingLineBasis::uniform(v.aero.m), v.aero.m};
}

} // namespace detail

/// Steady elliptic wing, AR 8: lift slope against a0 / (1 + a0 / (pi AR)).
inline CheckResult elliptic_lift_slope() {
    const double S = 0.4, AR = 8.0;
    const double c0 = 4 * S / (kPi * AR); // elliptic area pi S c0 / 4
    const double alpha = deg2rad(1.0);
    VehicleConfig v = detail::frozen_wing(S, c0, Planform{}, 24);
    const double U = v.aero.U;
    const Vec3 vel(U * std::cos(alpha), 0, U * std::sin(alpha));
    const auto fa = detail::frozen_aero(v, vel, U * std::sin(alpha));
    const VecX s = fa.steady();
    const ForceMoment fm = integrate_wrench(fa.stations, s.segment(0, fa.m), VecX::Zero(fa.m), v.aero);
    const Vec3 lift_dir(std::sin(alpha), 0, -std::cos(alpha));
    const double CL = fm.F.dot(lift_dir) / (0.5 * v.aero.rho * U * U * kPi * S * c0 / 4);
    const double slope = CL / alpha;
    const double oracle = v.aero.a0 / (1 + v.aero.a0 / (kPi * AR));
    const double err = std::abs(slope / oracle - 1);
    return {"elliptic lift slope", err < 0.01, fmt("slope=%.5f oracle=%.5f rel.err=%.2e", slope, oracle, err)};
}

/// High-aspect-ratio rectangular wing after a step in downwash: normalized
/// lift against Phi(t~), RMS over t~ in [0, 60].
inline CheckResult step_response() {
    const double c = 0.1, AR = 200.0;
    VehicleConfig v = detail::frozen_wing(AR * c, c, Planform::rectangular(), 48);
    const double U = v.aero.U;
    const double w0 = 0.01 * U;
    const auto fa = detail::frozen_aero(v, Vec3(U, 0, 0), w0);
    const int m = fa.m;
    const double area = AR * c * c;
    auto lift_coefficient = [&](const VecX& s) {
        const VecX rate = fa.rate(s);
        double sum = 0;
        for (int k = 0; k < m; ++k) {
            const auto& st = fa.stations[static_cast<std::size_t>(k)];
            sum += sectional_lift_coefficient(s.segment(0, m), rate.segment(0, m), v.aero, st.theta, st.chord) * st.chord * st.ds;
        }
        return sum / area;
    };
    const double cl_ss = lift_coefficient(fa.steady());
    const double rate_norm = 2 * U / c; // d(t~)/dt
    const double dt = 0.02 / rate_norm;
    VecX s = VecX::Zero(3 * m);
    double sq = 0;
    int n = 0;
    for (double t = 0; t * rate_norm <= 60.0; t += dt) {
        const double e = lift_coefficient(s) / cl_ss - wagner(t * rate_norm, v.wagner);
        sq += e * e;
        ++n;
        s = rk4([&](double, const VecX& x) { return fa.rate(x); }, t, s, dt);
    }
    const double rms = std::sqrt(sq / n);
    return {"wagner step response", rms < 0.02, fmt("RMS(CL/CL_ss - Phi)=%.3e over %g samples", rms, n)};
}

/// Series lift coefficient against 2 Gamma/(U c) + 2 dGamma/dt / U^2.
inline CheckResult dual_form(unsigned seed = 1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> un(-1, 1), pos(0.01, 1), th(0.01, kPi - 0.01);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        AeroConfig cfg;
        cfg.m = 1 + static_cast<int>(pos(rng) * 31);
        cfg.U = 0.5 + 10 * pos(rng);
        cfg.c0 = 0.2 * pos(rng);
        const VecX a = VecX::NullaryExpr(cfg.m, [&] { return un(rng); });
        const VecX ad = VecX::NullaryExpr(cfg.m, [&] { return 50 * un(rng); });
        const double theta = th(rng), chord = 0.2 * pos(rng);
        const double series = sectional_lift_coefficient(a, ad, cfg, theta, chord);
        const double dual = 2 * circulation(a, cfg, theta) / (cfg.U * chord) + 2 * circulation(ad, cfg, theta) / (cfg.U * cfg.U);
        const double scale = std::max({std::abs(series), std::abs(dual), 1e-300});
        worst = std::max(worst, std::abs(series - dual) / scale);
    }
    return {"lift dual form", worst <= 1e-10, fmt("max rel.diff=%.3e over 1000 states", worst)};
}

/// Cubic interpolant end conditions and the closed-form midpoint value and slope.
inline CheckResult hermite_identities(unsigned seed = 2) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> un(-1, 1);
    double worst = 0;
    for (int i = 0; i < 200; ++i) {
        const int n = 4;
        const VecX y0 = VecX::NullaryExpr(n, [&] { return un(rng); }), y1 = VecX::NullaryExpr(n, [&] { return un(rng); });
        const VecX f0 = VecX::NullaryExpr(n, [&] { return un(rng); }), f1 = VecX::NullaryExpr(n, [&] { return un(rng); });
        const double t0 = un(rng), h = 0.01 + std::abs(un(rng));
        const auto c = HermiteCubic::fit(y0, y1, f0, f1, t0, t0 + h);
        const double tm = t0 + 0.5 * h;
        const VecX mid = 0.5 * (y0 + y1) + (h / 8) * (f0 - f1);
        const VecX slope = (-1.5 / h) * (y0 - y1) - 0.25 * (f0 + f1);
        for (const double e : {(c.value(t0) - y0).lpNorm<Eigen::Infinity>(), (c.derivative(t0) - f0).lpNorm<Eigen::Infinity>(),
                               (c.value(t0 + h) - y1).lpNorm<Eigen::Infinity>(),
                               (c.derivative(t0 + h) - f1).lpNorm<Eigen::Infinity>(),
                               (c.value(tm) - mid).lpNorm<Eigen::Infinity>(), (c.derivative(tm) - slope).lpNorm<Eigen::Infinity>()})
            worst = std::max(worst, e / (1 + 1 / h));
    }
    return {"hermite identities", worst < 1e-13, fmt("max scaled error=%.3e", worst)};
}

/// Midpoint defect of the exact solution of dY/dt = A Y under interval halving.
inline double defect_order() {
    Eigen::Matrix3d A;
    A << -0.5, 1.0, 0.2, -1.0, -0.3, 0.4, 0.1, -0.6, -0.8;
    const Eigen::Vector3d y0(1.0, -0.5, 0.25);
    const DynamicsFn f = [&](const VecX& y, const VecX&, double) -> VecX { return A * y; };
    const VecX u = VecX::Zero(1);
    auto defect = [&](double h) {
        const VecX ya = (A * 0.3).exp() * y0;
        const VecX yb = (A * (0.3 + h)).exp() * y0;
        return defect_residual(ya, yb, u, u, 0.3, 0.3 + h, f).norm();
    };
    return std::log2(defect(0.2) / defect(0.1));
}

inline CheckResult defect_convergence() {
    const double p = defect_order();
    return {"defect convergence order", p >= 3.5 && p <= 4.5, fmt("measured order=%.3f", p)};
}

/// Double integrator tracked over five knots against a Riccati recursion on
/// the augmented state [position, velocity, current knot control].
struct LqOracle {
    double h;
    Eigen::Vector2d weights{1.0, 0.1};
    Eigen::Vector2d ref{1.0, 0.0};
    int knots = 5;

    double optimal_cost() const {
        Eigen::Matrix3d A;
        A << 1, h, h * h / 3, 0, 1, h / 2, 0, 0, 0;
        const Eigen::Vector3d B(h * h / 6, h / 2, 1);
        Eigen::Matrix3d Q = Eigen::Matrix3d::Zero();
        Q(0, 0) = weights[0];
        Q(1, 1) = weights[1];
        const Eigen::Vector3d qr(-weights[0] * ref[0], -weights[1] * ref[1], 0);
        const double cr = weights[0] * ref[0] * ref[0] + weights[1] * ref[1] * ref[1];
        // V(x) = x'Px + 2q'x + c
        Eigen::Matrix3d P = Q;
        Eigen::Vector3d q = qr;
        double c = cr;
        for (int j = knots - 2; j >= 0; --j) {
            const double s = B.dot(P * B);
            const Eigen::RowVector3d K = (B.transpose() * P * A) / s;
            const double k0 = B.dot(q) / s;
            const Eigen::Matrix3d Acl = A - B * K;
            const Eigen::Vector3d off = -B * k0;
            const Eigen::Matrix3d Pn = Acl.transpose() * P * Acl;
            const Eigen::Vector3d qn = Acl.transpose() * (P * off + q);
            const double cn = off.dot(P * off) + 2 * q.dot(off) + c;
            P = Q + Pn;
            q = qr + qn;
            c = cr + cn;
        }
        // first control is free; the first knot state is zero
        const double u1 = -q[2] / P(2, 2);
        return P(2, 2) * u1 * u1 + 2 * q[2] * u1 + c;
    }
};

inline CollocationProblem double_integrator_problem(double tf, const Eigen::Vector2d& weights, const Eigen::Vector2d& ref,
                                                    int knots = 5) {
    CollocationProblem p;
    p.knots = knots;
    p.state_dim = 2;
    p.control_dim = 1;
    p.dynamics = [](const VecX& y, const VecX& u, double) {
        VecX d(2);
        d << y[1], u[0];
        return d;
    };
    p.output = [](const VecX& y) { return y; };
    p.cost.weights = weights;
    p.reference.assign(static_cast<std::size_t>(knots), VecX(ref));
    p.init_bounds();
    p.pin_initial_state(VecX::Zero(2));
    p.fix_final_time(tf);
    return p;
}

inline CheckResult lq_oracle() {
    const double tf = 1.0;
    const LqOracle oracle{tf / 4};
    const auto p = double_integrator_problem(tf, oracle.weights, oracle.ref);
    VecX x0 = VecX::Zero(p.decision_size());
    x0[p.tf_index()] = tf;
    const auto sol = solve_nlp(p, x0);
    const double J = oracle.optimal_cost();
    const double err = std::abs(sol.objective - J);
    return {"collocation LQ oracle", sol.converged() && err <= 1e-6,
            fmt("J=%.10f oracle=%.10f |diff|=%.2e", sol.objective, J, err) + " status=" + to_string(sol.status)};
}

/// dy/dt = u, |u| <= 0.1, reference y = 1: the optimum rides the bound.
inline CheckResult clamped_control() {
    CollocationProblem p;
    p.knots = 5;
    p.state_dim = 1;
    p.control_dim = 1;
    p.dynamics = [](const VecX&, const VecX& u, double) { return u; };
    p.output = [](const VecX& y) { return y; };
    p.cost.weights = VecX::Ones(1);
    p.reference.assign(5, VecX::Ones(1));
    p.stroke = VecX::Constant(1, 0.1);
    p.init_bounds();
    p.pin_initial_state(VecX::Zero(1));
    p.fix_final_time(1.0);
    VecX x0 = VecX::Zero(p.decision_size());
    x0[p.tf_index()] = 1.0;
    const auto sol = solve_nlp(p, x0);
    double J = 0, worst_u = 0;
    for (int j = 0; j < 5; ++j) {
        const double t = j / 4.0;
        J += (1 - 0.1 * t) * (1 - 0.1 * t);
        worst_u = std::max(worst_u, std::abs(p.u(sol.decision, j)[0] - 0.1));
    }
    const auto g = stroke_inequalities(p, sol.decision);
    const double active = std::abs(g.minCoeff());
    const bool ok = sol.converged() && worst_u <= 1e-8 && active <= 1e-8 && std::abs(sol.objective - J) <= 1e-6;
    return {"clamped control oracle", ok, fmt("max|u-0.1|=%.2e min g=%.2e |J-J*|=%.2e", worst_u, active, std::abs(sol.objective - J))};
}

/// Global RK4 error on a damped oscillator against the matrix exponential.
inline double rk4_order() {
    Eigen::Matrix2d A;
    A << 0, 1, -4, -0.4;
    const Eigen::Vector2d y0(1, 0);
    const double T = 2.0;
    const VecX exact = (A * T).exp() * y0;
    auto error = [&](int steps) {
        VecX y = y0;
        const double dt = T / steps;
        for (int k = 0; k < steps; ++k) y = rk4([&](double, const VecX& x) -> VecX { return A * x; }, k * dt, y, dt);
        return (y - exact).norm();
    };
    return std::log2(error(40) / error(80));
}

inline CheckResult rk4_convergence() {
    const double p = rk4_order();
    return {"rk4 order", std::abs(p - 4.0) <= 0.2, fmt("measured order=%.3f", p)};
}

/// Symmetric gait, zero regulator input, level flight: no roll, no side force,
/// no rolling moment over one gait cycle.
inline CheckResult symmetry(const VehicleConfig& config = {}) {
    const Vehicle veh(config);
    BodyState b;
    b.q = quaternion_from_euler(0, deg2rad(-15), 0);
    b.v = Vec3(config.aero.U, 0, 0);
    FullState s = make_initial_state(b, config.aero.m);
    const VecX u = VecX::Zero(veh.regulator_count());
    const double dt = 1e-4;
    const int steps = static_cast<int>(std::ceil(1.0 / (config.gait.flap_frequency * dt)));
    double roll = 0, mx = 0, fy = 0;
    for (int k = 0; k <= steps; ++k) {
        const auto ev = veh.evaluate(s.t, pack_state(s), u);
        roll = std::max(roll, std::abs(euler_angles(s.body.q).roll));
        mx = std::max(mx, std::abs(ev.aero.M.x() + ev.recoil.M.x()));
        fy = std::max(fy, std::abs(ev.aero.F.y() + ev.recoil.F.y()));
        s = rk4_step(s, u, dt, veh);
        s.t = (k + 1) * dt;
    }
    return {"symmetric flight", roll < 1e-6 && mx < 1e-9 && fy < 1e-9, fmt("max|roll|=%.2e max|Mx|=%.2e max|Fy|=%.2e", roll, mx, fy)};
}

/// write -> read -> write reproduces the bytes, text and binary.
inline CheckResult trace_roundtrip(unsigned seed = 3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, 1);
    Trace tr;
    tr.channels = {"t", "a", "b", "c"};
    for (int i = 0; i < 200; ++i) tr.append({i * 1e-3, n(rng), n(rng) * 1e-300, n(rng) * 1e300});
    std::ostringstream c1, b1, c2, b2;
    write_csv(c1, tr);
    write_binary(b1, tr);
    std::istringstream ci(c1.str()), bi(b1.str());
    write_csv(c2, read_csv(ci));
    write_binary(b2, read_binary(bi));
    const bool ok = c1.str() == c2.str() && b1.str() == b2.str();
    return {"trace round trip", ok, ok ? "text and binary identical" : "bytes differ"};
}

/// Autocorrelation period of a synthetic gait-like signal.
inline CheckResult period_estimate(double frequency = 3.5) {
    std::vector<double> x;
    const double dt = 1e-3;
    for (int i = 0; i < 3000; ++i) {
        const double t = i * dt;
        x.push_back(0.3 * std::sin(2 * kPi * frequency * t) + 0.1 * std::sin(4 * kPi * frequency * t + 0.7) - 0.2);
    }
    const double p = autocorrelation_period(x, dt);
    const double err = std::abs(p * frequency - 1);
    return {"autocorrelation period", err <= 0.02, fmt("period=%.5f s expected=%.5f s", p, 1 / frequency)};
}

/// The quick checks (a few seconds in total).
inline std::vector<CheckResult> run_all() {
    return {wagner_function(), elliptic_lift_slope(), step_response(), dual_form(), hermite_identities(),
            defect_convergence(), lq_oracle(), clamped_control(), rk4_convergence(), symmetry(), trace_roundtrip(),
            period_estimate()};
}

} // namespace morphwing::checks
