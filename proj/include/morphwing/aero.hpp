#pragma once

/**
 * Unsteady lifting-line aerodynamics.
 *
 * Bound circulation is a truncated sine series over the whole span,
 *
 *     Gamma(t, theta) = 1/2 a0 c0 U sum_n a_n(t) sin(n theta),
 *
 * and the coefficients evolve so that, at every station, the unsteady
 * Kutta-Joukowski lift of the series equals the indicial (Wagner) response to
 * the station's effective downwash. The Wagner response uses the two-term
 * exponential approximation, realized as two lag states per station:
 *
 *     c_L = a0/U (Phi(0) w_eff + z1 + z2),
 *     dz_i/dt = eps_i (v_e / b) (psi_i w_eff - z_i).
 */

#include "morphwing/common.hpp"
#include "morphwing/kinematics.hpp"

#include <memory>
#include <vector>

namespace morphwing {

struct WagnerCoefficients {
    double psi1 = 0.165;
    double psi2 = 0.335;
    double eps1 = 0.0455;
    double eps2 = 0.3;

    double phi0() const { return 1.0 - (psi1 + psi2); }

    void validate() const {
        const double p0 = phi0();
        if (!(p0 > 0 && p0 < 1)) throw ConfigError("aero.wagner", "1 - psi1 - psi2 must lie in (0, 1)");
        if (!(eps1 > 0 && eps2 > 0)) throw ConfigError("aero.wagner", "decay rates must be > 0");
    }
};

struct AeroConfig {
    double a0 = 2 * kPi; // sectional lift-curve slope, 1/rad
    double c0 = 0.12;    // root chord, m
    double S = 0.4;      // total span, m
    double U = 4.0;      // reference free-stream airspeed, m/s
    double rho = 1.225;  // kg/m^3
    int m = 16;          // Fourier terms == stations

    void validate() const {
        if (!(a0 > 0)) throw ConfigError("aero.lift_slope", "must be > 0");
        if (!(c0 > 0)) throw ConfigError("wing.root_chord", "must be > 0");
        if (!(S > 0)) throw ConfigError("wing.span", "must be > 0");
        if (!(U > 0)) throw ConfigError("aero.airspeed", "must be > 0");
        if (!(rho > 0)) throw ConfigError("aero.density", "must be > 0");
        if (m < 1) throw ConfigError("aero.fourier_terms", "must be >= 1");
    }
};

struct AeroState {
    VecX a;      // Fourier coefficients
    MatX lag;    // m x 2 Duhamel lag states, one column per exponential term
    VecX t_norm; // per-station normalized time

    static AeroState zero(int m) { return {VecX::Zero(m), MatX::Zero(m, 2), VecX::Zero(m)}; }
};

struct ForceMoment {
    Vec3 F = Vec3::Zero(); // N, body frame
    Vec3 M = Vec3::Zero(); // N m, body frame, about the reference point
};

inline void check_theta_open(double theta, const char* who) {
    if (!(theta > 0 && theta < kPi)) throw DomainError(std::string(who) + ": theta must lie in (0, pi)");
}

/// Gamma = 1/2 a0 c0 U sum a_n sin(n theta), m^2/s.
inline double circulation(const Eigen::Ref<const VecX>& a, const AeroConfig& cfg, double theta) {
    check_theta_open(theta, "circulation");
    double sum = 0;
    for (int n = 1; n <= a.size(); ++n) sum += a[n - 1] * std::sin(n * theta);
    return 0.5 * cfg.a0 * cfg.c0 * cfg.U * sum;
}

/// sin(n theta) / sin(theta) for n = 1..count via the Chebyshev recurrence
/// U_{n-1}(cos theta); finite at the tips.
inline void sine_ratio_series(double theta, int count, double* out) {
    const double x = std::cos(theta);
    double u_prev = 0.0, u = 1.0; // U_{-1}, U_0
    for (int n = 1; n <= count; ++n) {
        out[n - 1] = u;
        const double next = 2 * x * u - u_prev;
        u_prev = u;
        u = next;
    }
}

/// Induced downwash w_y = -(a0 c0 U / 4S) sum n a_n sin(n theta)/sin(theta), m/s.
/// Valid on the closed interval [0, pi]; the tip values are the analytic limits.
inline double induced_downwash(const Eigen::Ref<const VecX>& a, const AeroConfig& cfg, double theta) {
    if (!(theta >= 0 && theta <= kPi)) throw DomainError("induced_downwash: theta must lie in [0, pi]");
    const int m = static_cast<int>(a.size());
    double ratio_buf[256];
    std::vector<double> heap;
    double* ratio = ratio_buf;
    if (m > 256) {
        heap.resize(static_cast<std::size_t>(m));
        ratio = heap.data();
    }
    sine_ratio_series(theta, m, ratio);
    double sum = 0;
    for (int n = 1; n <= m; ++n) sum += n * a[n - 1] * ratio[n - 1];
    return -(cfg.a0 * cfg.c0 * cfg.U / (4 * cfg.S)) * sum;
}

/// Unsteady sectional lift coefficient from the series and its rate.
inline double sectional_lift_coefficient(const Eigen::Ref<const VecX>& a, const Eigen::Ref<const VecX>& a_dot,
                                         const AeroConfig& cfg, double theta, double chord) {
    if (!(chord > 0)) throw DomainError("sectional_lift_coefficient: chord must be > 0");
    double sum = 0;
    for (int n = 1; n <= a.size(); ++n)
        sum += ((cfg.c0 / chord) * a[n - 1] + (cfg.c0 / cfg.U) * a_dot[n - 1]) * std::sin(n * theta);
    return cfg.a0 * sum;
}

/// Phi(t~) = 1 - psi1 exp(-eps1 t~) - psi2 exp(-eps2 t~).
inline double wagner(double t_norm, const WagnerCoefficients& w = {}) {
    if (!(t_norm >= 0)) throw DomainError("wagner: normalized time must be >= 0");
    return 1.0 - (w.psi1 * std::exp(-w.eps1 * t_norm) + w.psi2 * std::exp(-w.eps2 * t_norm));
}

/**
 * Sine basis sin(n theta_k) at a fixed set of stations, factored once.
 * Construction fails when the basis is singular or its condition number
 * exceeds `max_condition`.
 */
class LiftingLineBasis {
public:
    explicit LiftingLineBasis(const std::vector<double>& thetas, double max_condition = 1e12)
        : thetas_(thetas) {
        const int m = static_cast<int>(thetas.size());
        if (m < 1) throw ConfigError("aero.fourier_terms", "at least one station required");
        sines_.resize(m, m);
        for (int k = 0; k < m; ++k)
            for (int n = 1; n <= m; ++n) sines_(k, n - 1) = std::sin(n * thetas[static_cast<std::size_t>(k)]);
        Eigen::JacobiSVD<MatX> svd(sines_);
        const auto& sv = svd.singularValues();
        const double smin = sv[sv.size() - 1];
        condition_ = smin > 0 ? sv[0] / smin : std::numeric_limits<double>::infinity();
        if (!(condition_ <= max_condition))
            throw NumericalError("lifting-line station matrix is singular or ill-conditioned (cond = " +
                                 std::to_string(condition_) + ")");
        inverse_ = sines_.fullPivLu().inverse();
    }

    static LiftingLineBasis uniform(int m) {
        std::vector<double> th(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k) th[static_cast<std::size_t>(k)] = station_theta(k, m);
        return LiftingLineBasis(th);
    }

    int size() const { return static_cast<int>(thetas_.size()); }
    const std::vector<double>& thetas() const { return thetas_; }
    const MatX& sines() const { return sines_; }
    const MatX& inverse() const { return inverse_; }
    double condition() const { return condition_; }

private:
    std::vector<double> thetas_;
    MatX sines_;
    MatX inverse_;
    double condition_ = 1;
};

struct AeroRates {
    VecX a_dot;
    MatX lag_rates;   // m x 2
    VecX t_norm_rate; // per-station d(t~)/dt
    VecX w_induced;   // per-station induced downwash, m/s
    VecX w_effective; // motion + induced, m/s
};

/// d(t~)/dt = v_e / b with b = c/2, falling back to U/b when v_e < 0.1 U.
inline double normalized_time_rate(double v_e, double chord, const AeroConfig& cfg) {
    const double speed = v_e < 0.1 * cfg.U ? cfg.U : v_e;
    return speed / (0.5 * chord);
}

/**
 * Coefficient and lag-state rates. `downwash_motion[k]` is the upwash along the
 * section normal produced by body and wing motion at station k. The stations
 * must match the basis (same theta ordering).
 */
inline AeroRates aero_rhs(const AeroState& state, const std::vector<StationGeometry>& stations,
                          const Eigen::Ref<const VecX>& downwash_motion, const AeroConfig& cfg,
                          const WagnerCoefficients& w, const LiftingLineBasis& basis) {
    const int m = basis.size();
    if (static_cast<int>(stations.size()) != m || downwash_motion.size() != m || state.a.size() != m ||
        state.lag.rows() != m || state.lag.cols() != 2)
        throw DomainError("aero_rhs: inconsistent station/state dimensions");

    AeroRates r;
    r.a_dot.resize(m);
    r.lag_rates.resize(m, 2);
    r.t_norm_rate.resize(m);
    r.w_induced.resize(m);
    r.w_effective.resize(m);

    const double phi0 = w.phi0();
    const auto& sines = basis.sines();
    VecX rhs(m);
    for (int k = 0; k < m; ++k) {
        const auto& st = stations[static_cast<std::size_t>(k)];
        if (!(st.chord > 0)) throw NumericalError("aero_rhs: non-positive chord at station", k);
        const double wi = induced_downwash(state.a, cfg, st.theta);
        const double weff = downwash_motion[k] + wi;
        const double rate = normalized_time_rate(st.v_e, st.chord, cfg);
        r.w_induced[k] = wi;
        r.w_effective[k] = weff;
        r.t_norm_rate[k] = rate;
        r.lag_rates(k, 0) = w.eps1 * rate * (w.psi1 * weff - state.lag(k, 0));
        r.lag_rates(k, 1) = w.eps2 * rate * (w.psi2 * weff - state.lag(k, 1));
        const double target = (phi0 * weff + state.lag(k, 0) + state.lag(k, 1)) / cfg.U;
        const double steady = (cfg.c0 / st.chord) * sines.row(k).dot(state.a);
        rhs[k] = target - steady;
    }
    // (c0/U) sines * a_dot = rhs
    r.a_dot.noalias() = (cfg.U / cfg.c0) * (basis.inverse() * rhs);
    return r;
}

/// Convenience overload that factors the basis from the station angles.
inline AeroRates aero_rhs(const AeroState& state, const std::vector<StationGeometry>& stations,
                          const Eigen::Ref<const VecX>& downwash_motion, const AeroConfig& cfg,
                          const WagnerCoefficients& w = {}) {
    std::vector<double> th;
    th.reserve(stations.size());
    for (const auto& s : stations) th.push_back(s.theta);
    const LiftingLineBasis basis(th);
    return aero_rhs(state, stations, downwash_motion, cfg, w, basis);
}

/// Per-station aerodynamic load, body frame.
struct StationLoad {
    double lift_coefficient = 0;
    double lift_per_span = 0; // N/m
    Vec3 force = Vec3::Zero(); // N, already multiplied by ds
};

/**
 * Integrates sectional lift over the span. Lift per unit span is
 * 1/2 rho U_rel^2 c C_L, directed perpendicular to the effective section flow:
 * the section normal tilted toward the chord by atan2(w_total, u_chord), where
 * w_total is motion upwash plus induced downwash. Moments are r x F about
 * `reference` (body frame).
 */
inline ForceMoment integrate_wrench(const std::vector<StationGeometry>& stations, const Eigen::Ref<const VecX>& a,
                                    const Eigen::Ref<const VecX>& a_dot, const AeroConfig& cfg,
                                    const Vec3& reference = Vec3::Zero(),
                                    std::vector<StationLoad>* loads = nullptr) {
    if (static_cast<Eigen::Index>(stations.size()) != a.size() || a.size() != a_dot.size())
        throw DomainError("integrate_wrench: inconsistent station count");
    ForceMoment fm;
    if (loads) loads->assign(stations.size(), StationLoad{});
    for (std::size_t k = 0; k < stations.size(); ++k) {
        const auto& st = stations[k];
        const double cl = sectional_lift_coefficient(a, a_dot, cfg, st.theta, st.chord);
        const double u_rel2 = st.u_chord * st.u_chord + st.w_motion * st.w_motion;
        const double lift = 0.5 * cfg.rho * u_rel2 * st.chord * cl;
        const double w_total = st.w_motion + induced_downwash(a, cfg, st.theta);
        const double tilt = std::atan2(w_total, st.u_chord);
        const Vec3 dir = std::cos(tilt) * st.normal_body + std::sin(tilt) * st.chord_body;
        const Vec3 dF = (lift * st.ds) * dir;
        fm.F += dF;
        fm.M += (st.position_body - reference).cross(dF);
        if (loads) (*loads)[k] = {cl, lift, dF};
    }
    return fm;
}

} // namespace morphwing
