#pragma once

/**
 * Signal metrics on run traces: autocorrelation period, per-gait-cycle
 * statistics and the banking-turn summary.
 */

#include "morphwing/common.hpp"
#include "morphwing/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace morphwing {

/**
 * Dominant period of a uniformly sampled signal: the first autocorrelation
 * peak after the correlation has dropped below zero, refined by a parabola
 * through the three samples around it. NaN when no such peak exists.
 */
inline double autocorrelation_period(const std::vector<double>& x, double dt) {
    const std::size_t n = x.size();
    if (n < 8 || !(dt > 0)) return std::numeric_limits<double>::quiet_NaN();
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - mean;
    const double r0 = std::inner_product(d.begin(), d.end(), d.begin(), 0.0);
    if (!(r0 > 0)) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t max_lag = n / 2;
    std::vector<double> r(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        double s = 0;
        for (std::size_t i = 0; i + k < n; ++i) s += d[i] * d[i + k];
        r[k] = s / r0 * static_cast<double>(n) / static_cast<double>(n - k); // unbiased
    }
    std::size_t k = 1;
    while (k < max_lag && r[k] > 0) ++k;
    for (; k + 1 <= max_lag; ++k) {
        if (r[k] > 0 && r[k] >= r[k - 1] && r[k] >= r[k + 1]) {
            const double a = r[k - 1], b = r[k], c = r[k + 1];
            const double den = a - 2 * b + c;
            const double shift = den != 0 ? 0.5 * (a - c) / den : 0.0;
            return (static_cast<double>(k) + std::clamp(shift, -0.5, 0.5)) * dt;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// Samples of `column` with t in [t0, t1].
inline std::vector<double> window(const Trace& tr, std::string_view column, double t0, double t1) {
    const auto t = tr.column("t");
    const auto v = tr.column(column);
    std::vector<double> out;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t0 - 1e-12 && t[i] <= t1 + 1e-12) out.push_back(v[i]);
    return out;
}

inline double mean_of(const std::vector<double>& v) {
    return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                     : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// One entry per complete cycle [t0 + k P, t0 + (k+1) P) inside [t0, t1].
struct CycleStats {
    std::vector<double> start, mean, half_range;
};

inline CycleStats cycle_stats(const std::vector<double>& t, std::vector<double> v, double t0, double t1,
                              double period, bool unwrap = false) {
    if (unwrap)
        for (std::size_t i = 1; i < v.size(); ++i) v[i] = v[i - 1] + std::remainder(v[i] - v[i - 1], 2 * kPi);
    CycleStats cs;
    for (double a = t0; a + period <= t1 + 1e-9; a += period) {
        const double b = a + period;
        double sum = 0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
        int count = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] < a - 1e-12 || t[i] >= b - 1e-12) continue;
            sum += v[i];
            lo = std::min(lo, v[i]);
            hi = std::max(hi, v[i]);
            ++count;
        }
        if (count < 2) continue;
        cs.start.push_back(a);
        cs.mean.push_back(sum / count);
        cs.half_range.push_back(0.5 * (hi - lo));
    }
    return cs;
}

inline CycleStats cycle_stats(const Trace& tr, std::string_view column, double t0, double t1, double period,
                              bool unwrap = false) {
    return cycle_stats(tr.column("t"), tr.column(column), t0, t1, period, unwrap);
}

/// Strictly increasing or strictly decreasing, with at least two entries.
inline bool strictly_monotonic(const std::vector<double>& v) {
    bool inc = v.size() >= 2, dec = inc;
    for (std::size_t i = 1; i < v.size(); ++i) {
        inc = inc && v[i] > v[i - 1];
        dec = dec && v[i] < v[i - 1];
    }
    return inc || dec;
}

/**
 * Banking-turn summary over the final `window_length` seconds. Angles in
 * degrees, forces in newtons, periods in seconds.
 *
 *   pitch_amplitude  mean over complete gait cycles of half the pitch swing
 *   fz_half_range    mean over complete gait cycles of half the Fz swing
 *   fz_period        autocorrelation period of Fz after `transient`
 *   yaw_monotonic    gait-cycle means of the unwrapped yaw strictly monotonic
 *                    over the window
 *   heading_*        the same for the azimuth of the horizontal velocity
 */
struct BankingMetrics {
    double roll_mean = 0;
    double pitch_mean = 0;
    double pitch_amplitude = 0;
    double fz_period = 0;
    double fz_half_range = 0;
    bool yaw_monotonic = false;
    double yaw_change = 0;
    bool heading_monotonic = false;
    double heading_change = 0;
    double dx = 0, dy = 0;
};

inline BankingMetrics banking_metrics(const Trace& tr, double flap_frequency, double window_length = 2.0,
                                      double transient = 1.0) {
    if (tr.rows() < 2) throw DomainError("banking_metrics: trace too short");
    const auto t = tr.column("t");
    const double t_end = t.back();
    const double t0 = std::max(t.front(), t_end - window_length);
    const double period = 1.0 / flap_frequency;
    BankingMetrics m;
    m.roll_mean = rad2deg(mean_of(window(tr, "roll", t0, t_end)));
    m.pitch_mean = rad2deg(mean_of(window(tr, "pitch", t0, t_end)));
    const auto pitch = cycle_stats(tr, "pitch", t0, t_end, period);
    m.pitch_amplitude = rad2deg(mean_of(pitch.half_range));
    const auto fz = cycle_stats(tr, "Fz", t0, t_end, period);
    m.fz_half_range = mean_of(fz.half_range);
    const auto fz_late = window(tr, "Fz", transient, t_end);
    m.fz_period = autocorrelation_period(fz_late, t[1] - t[0]);
    const auto yaw = cycle_stats(tr, "yaw", t0, t_end, period, true);
    m.yaw_monotonic = strictly_monotonic(yaw.mean);
    m.yaw_change = yaw.mean.empty() ? 0.0 : rad2deg(yaw.mean.back() - yaw.mean.front());
    const auto vx = tr.column("vx"), vy = tr.column("vy");
    std::vector<double> azimuth(vx.size());
    for (std::size_t i = 0; i < vx.size(); ++i) azimuth[i] = std::atan2(vy[i], vx[i]);
    const auto heading = cycle_stats(t, azimuth, t0, t_end, period, true);
    m.heading_monotonic = strictly_monotonic(heading.mean);
    m.heading_change = heading.mean.empty() ? 0.0 : rad2deg(heading.mean.back() - heading.mean.front());
    const auto x = tr.column("x"), y = tr.column("y");
    m.dx = x.back() - x.front();
    m.dy = y.back() - y.front();
    return m;
}

} // namespace morphwing
