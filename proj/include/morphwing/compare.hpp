#pragma once

/**
 * Channel-by-channel comparison of a trace against a reference trace.
 */

#include "morphwing/analysis.hpp"
#include "morphwing/trace.hpp"

#include <map>
#include <string>
#include <vector>

namespace morphwing {

struct CompareOptions {
    double band = 0.0;    // |trace - reference| <= band counts as inside
    bool resample = true; // interpolate the reference onto the trace times
    /// Reference channels are multiplied by these factors before comparison,
    /// e.g. {"Fz", -1} for a z-up load-cell frame.
    std::map<std::string, double> remap;
};

struct ChannelReport {
    std::string channel;
    double max_deviation = 0;
    double in_band_fraction = 0;
    double period = 0;           // autocorrelation period of the trace channel, NaN if none
    double reference_period = 0; // same for the reference
    std::size_t samples = 0;
};

struct CompareReport {
    std::vector<ChannelReport> channels;

    bool all_in_band(double min_fraction = 1.0) const {
        for (const auto& c : channels)
            if (c.in_band_fraction < min_fraction) return false;
        return true;
    }
};

namespace detail {

inline bool same_times(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > 1e-9 * std::max(1.0, std::abs(a[i]))) return false;
    return true;
}

/// Linear interpolation of (t, v) at tq; tq must lie inside [t.front(), t.back()].
inline double interpolate(const std::vector<double>& t, const std::vector<double>& v, double tq) {
    auto it = std::upper_bound(t.begin(), t.end(), tq);
    if (it == t.begin()) return v.front();
    if (it == t.end()) return v.back();
    const auto i = static_cast<std::size_t>(it - t.begin());
    const double w = (tq - t[i - 1]) / (t[i] - t[i - 1]);
    return (1 - w) * v[i - 1] + w * v[i];
}

inline double sample_step(const std::vector<double>& t) {
    return t.size() >= 2 ? (t.back() - t.front()) / static_cast<double>(t.size() - 1) : 0.0;
}

} // namespace detail

/// Channels missing from either trace are a configuration error, as is
/// misaligned sampling with resampling disabled.
inline CompareReport compare_traces(const Trace& trace, const Trace& reference, const std::vector<std::string>& channels,
                                    const CompareOptions& opt = {}) {
    if (trace.find("t") < 0 || reference.find("t") < 0) throw ConfigError("t", "both traces need a time channel");
    for (const auto& c : channels) {
        if (trace.find(c) < 0) throw ConfigError(c, "channel missing from the trace");
        if (reference.find(c) < 0) throw ConfigError(c, "channel missing from the reference");
    }
    const auto t = trace.column("t");
    const auto tr = reference.column("t");
    const bool aligned = detail::same_times(t, tr);
    if (!aligned && !opt.resample) throw ConfigError("t", "sample times differ and resampling is disabled");
    for (std::size_t i = 1; i < tr.size(); ++i)
        if (!(tr[i] > tr[i - 1])) throw ConfigError("t", "reference times must be strictly increasing");

    CompareReport rep;
    for (const auto& c : channels) {
        const auto v = trace.column(c);
        auto r = reference.column(c);
        if (auto it = opt.remap.find(c); it != opt.remap.end())
            for (double& x : r) x *= it->second;
        ChannelReport cr;
        cr.channel = c;
        std::size_t inside = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            double ref;
            if (aligned) {
                ref = r[i];
            } else {
                if (tr.empty() || t[i] < tr.front() || t[i] > tr.back()) continue;
                ref = detail::interpolate(tr, r, t[i]);
            }
            const double dev = std::abs(v[i] - ref);
            cr.max_deviation = std::max(cr.max_deviation, dev);
            if (dev <= opt.band) ++inside;
            ++cr.samples;
        }
        cr.in_band_fraction = cr.samples ? static_cast<double>(inside) / static_cast<double>(cr.samples) : 0.0;
        cr.period = autocorrelation_period(v, detail::sample_step(t));
        cr.reference_period = autocorrelation_period(r, detail::sample_step(tr));
        rep.channels.push_back(cr);
    }
    return rep;
}

} // namespace morphwing
