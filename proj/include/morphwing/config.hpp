#pragma once

/**
 * Scenario configuration as JSON.
 *
 * Top-level keys sim_dt, control_dt, duration, rng_seed, gait, wing, aero,
 * inertia, controller, reference and initial are required, as are the physical
 * parameters inside them. Tuning knobs (limits, solver tolerances, recoil masses,
 * Wagner coefficients) are optional and fall back to the library defaults. Unknown keys are
 * rejected so typos do not silently revert to defaults. Angles carry a _deg
 * suffix and are given in degrees; everything else is SI. The full schema is
 * listed in the README.
 */

#include "morphwing/scenario.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <string>

namespace morphwing {

using Json = nlohmann::json;

namespace detail {

class Section {
public:
    Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const Json& raw(const std::string& key) {
        if (!has(key)) throw ConfigError(field(key), "missing required field");
        return j_.at(key);
    }

    Section section(const std::string& key) { return Section(raw(key), field(key)); }

    double number(const Json& v, const std::string& key) const {
        if (!v.is_number()) throw ConfigError(field(key), "expected a number");
        return v.get<double>();
    }

    void get(const std::string& key, double& out) {
        if (has(key)) out = number(j_.at(key), key);
    }
    void get_deg(const std::string& key, double& out) {
        if (has(key)) out = deg2rad(number(j_.at(key), key));
    }
    template <class T>
    void req(const std::string& key, T& out) {
        raw(key);
        get(key, out);
    }
    void req_deg(const std::string& key, double& out) {
        raw(key);
        get_deg(key, out);
    }
    void get(const std::string& key, int& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
        out = v.get<int>();
    }
    void get(const std::string& key, std::uint64_t& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw ConfigError(field(key), "expected a non-negative integer");
        out = v.get<std::uint64_t>();
    }
    void get(const std::string& key, bool& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
        out = v.get<bool>();
    }
    void get(const std::string& key, VecX& out) {
        if (!has(key)) return;
        out = vector(j_.at(key), key);
    }
    void get(const std::string& key, Vec3& out) {
        if (!has(key)) return;
        const VecX v = vector(j_.at(key), key);
        if (v.size() != 3) throw ConfigError(field(key), "expected three numbers");
        out = v;
    }
    void get(const std::string& key, MatX& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_array() || v.empty()) throw ConfigError(field(key), "expected an array of rows");
        const auto rows = v.size();
        const auto cols = v[0].is_array() ? v[0].size() : 0;
        out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t r = 0; r < rows; ++r) {
            const VecX row = vector(v[r], key);
            if (static_cast<std::size_t>(row.size()) != cols) throw ConfigError(field(key), "ragged matrix");
            out.row(static_cast<Eigen::Index>(r)) = row.transpose();
        }
    }

    VecX vector(const Json& v, const std::string& key) const {
        if (!v.is_array()) throw ConfigError(field(key), "expected an array of numbers");
        VecX out(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = number(v[i], key);
        return out;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void read_gait(Section s, GaitConfig& g) {
    s.req("flap_frequency", g.flap_frequency);
    s.req_deg("plunge_amplitude_deg", g.plunge_amplitude);
    s.req_deg("flexion_amplitude_deg", g.flexion_amplitude);
    s.req_deg("flexion_phase_lag_deg", g.flexion_phase_lag);
    s.get_deg("flexion_offset_deg", g.flexion_offset);
    if (s.has("regulator_channels")) {
        const auto& v = s.raw("regulator_channels");
        if (!v.is_array()) throw ConfigError(s.field("regulator_channels"), "expected an array of names");
        g.regulator_channels.clear();
        for (const auto& name : v) {
            if (!name.is_string()) throw ConfigError(s.field("regulator_channels"), "expected channel names");
            g.regulator_channels.push_back(regulator_channel_from_string(name.get<std::string>()));
        }
        const auto n = static_cast<Eigen::Index>(g.regulator_channels.size());
        if (g.asymmetry_gains.size() != n) g.asymmetry_gains = VecX::Ones(n);
        if (g.stroke_limit.size() != n) g.stroke_limit = VecX::Constant(n, g.stroke_limit.size() ? g.stroke_limit[0] : 0.25);
    }
    s.get("asymmetry_gains", g.asymmetry_gains);
    s.get("stroke_limit", g.stroke_limit);
    s.get_deg("shoulder_limit_deg", g.shoulder_limit);
    s.get_deg("elbow_min_deg", g.elbow_min);
    s.get_deg("elbow_max_deg", g.elbow_max);
    s.finish();
}

inline void read_wing(Section s, VehicleConfig& v) {
    auto& w = v.span;
    s.req("span", w.span);
    s.req("root_chord", w.root_chord);
    s.get("humerus_fraction", w.humerus_fraction);
    s.get("root_position", w.root_position);
    s.get_deg("incidence_deg", w.incidence);
    if (s.has("planform")) {
        const auto& p = s.raw("planform");
        if (p.is_string()) {
            const auto name = p.get<std::string>();
            if (name == "elliptic") w.planform = Planform{};
            else if (name == "rectangular") w.planform = Planform::rectangular();
            else throw ConfigError(s.field("planform"), "expected 'elliptic', 'rectangular' or a table");
        } else {
            Section t(p, s.field("planform"));
            VecX eta, ratio;
            if (!t.has("eta") || !t.has("chord_ratio")) throw ConfigError(s.field("planform"), "table needs eta and chord_ratio");
            t.get("eta", eta);
            t.get("chord_ratio", ratio);
            t.finish();
            w.planform.eta.assign(eta.data(), eta.data() + eta.size());
            w.planform.chord_ratio.assign(ratio.data(), ratio.data() + ratio.size());
        }
    }
    s.finish();
    v.aero.S = w.span;
    v.aero.c0 = w.root_chord;
}

inline void read_aero(Section s, VehicleConfig& v) {
    auto& a = v.aero;
    s.req("lift_slope", a.a0);
    s.req("airspeed", a.U);
    s.req("density", a.rho);
    s.req("fourier_terms", a.m);
    s.get("enabled", v.aero_enabled);
    if (s.has("wagner")) {
        Section w = s.section("wagner");
        w.req("psi1", v.wagner.psi1);
        w.req("psi2", v.wagner.psi2);
        w.req("eps1", v.wagner.eps1);
        w.req("eps2", v.wagner.eps2);
        w.finish();
    }
    s.finish();
}

inline void read_inertia(Section s, InertiaConfig& in) {
    s.req("mass", in.mass);
    {
        s.raw("inertia");
        MatX I;
        s.get("inertia", I);
        if (I.rows() != 3 || I.cols() != 3) throw ConfigError(s.field("inertia"), "expected a 3x3 matrix");
        in.inertia = I;
    }
    s.req("gravity", in.gravity);
    s.get("recoil", in.recoil);
    s.get("humerus_mass", in.humerus_mass);
    s.get("radius_mass", in.radius_mass);
    s.finish();
}

inline void read_controller(Section s, ScenarioConfig& cfg) {
    auto& c = cfg.controller;
    s.get("enabled", cfg.controller_enabled);
    s.req("knots", c.knots);
    s.req("horizon", c.horizon);
    s.get("free_final_time", c.free_final_time);
    s.get("min_horizon", c.min_horizon);
    s.get("max_horizon", c.max_horizon);
    s.req("weights", c.weights);
    s.get("fd_relative_step", c.fd_relative_step);
    s.get("max_consecutive_failures", c.max_consecutive_failures);
    s.get("max_iterations", c.solver.max_iterations);
    s.get("eq_tol", c.solver.eq_tol);
    s.get("ineq_tol", c.solver.ineq_tol);
    s.get("stationarity_tol", c.solver.stationarity_tol);
    s.get("bfgs", c.solver.bfgs);
    if (s.has("linear_model")) {
        Section l = s.section("linear_model");
        LinearModel lm;
        if (!l.has("A") || !l.has("B")) throw ConfigError(s.field("linear_model"), "needs A and B");
        l.get("A", lm.A);
        l.get("B", lm.B);
        l.finish();
        c.linear_model = lm;
    }
    s.finish();
}

} // namespace detail

inline ScenarioConfig scenario_from_json(const Json& j) {
    ScenarioConfig cfg;
    detail::Section root(j, "");
    auto req = [&](const std::string& key, double& out) { out = root.number(root.raw(key), key); };
    req("sim_dt", cfg.sim_dt);
    req("control_dt", cfg.control_dt);
    req("duration", cfg.duration);
    {
        const auto& seed = root.raw("rng_seed");
        if (!seed.is_number_integer() || seed.get<long long>() < 0)
            throw ConfigError("rng_seed", "expected a non-negative integer");
        cfg.rng_seed = seed.get<std::uint64_t>();
    }
    detail::read_gait(root.section("gait"), cfg.vehicle.gait);
    detail::read_wing(root.section("wing"), cfg.vehicle);
    detail::read_aero(root.section("aero"), cfg.vehicle);
    detail::read_inertia(root.section("inertia"), cfg.vehicle.inertia);
    detail::read_controller(root.section("controller"), cfg);
    {
        auto r = root.section("reference");
        r.req_deg("pitch_deg", cfg.reference.pitch);
        r.req_deg("roll_initial_deg", cfg.reference.roll_initial);
        r.req_deg("roll_final_deg", cfg.reference.roll_final);
        r.req("switch_time", cfg.reference.switch_time);
        r.finish();
    }
    {
        auto s = root.section("initial");
        s.req("speed", cfg.initial.speed);
        s.req_deg("roll_deg", cfg.initial.roll);
        s.req_deg("pitch_deg", cfg.initial.pitch);
        s.get_deg("yaw_deg", cfg.initial.yaw);
        s.finish();
    }
    if (root.has("perturbation")) {
        auto s = root.section("perturbation");
        s.get_deg("attitude_deg", cfg.perturbation.attitude);
        s.get("rate", cfg.perturbation.rate);
        s.finish();
    }
    if (root.has("output")) {
        auto s = root.section("output");
        s.get("decimation", cfg.decimation);
        s.finish();
    }
    if (root.has("abort_threshold")) cfg.abort_threshold = root.number(root.raw("abort_threshold"), "abort_threshold");
    root.finish();
    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config", "cannot open " + path);
    Json j;
    try {
        j = Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config", std::string("parse error: ") + e.what());
    }
    return scenario_from_json(j);
}

/// Serializes every field, so the output is a complete, loadable config.
inline Json scenario_to_json(const ScenarioConfig& c) {
    auto vec = [](const VecX& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    auto deg = [](double r) { return rad2deg(r); };
    const auto& g = c.vehicle.gait;
    const auto& w = c.vehicle.span;
    const auto& a = c.vehicle.aero;
    const auto& in = c.vehicle.inertia;
    const auto& cc = c.controller;
    Json j;
    j["sim_dt"] = c.sim_dt;
    j["control_dt"] = c.control_dt;
    j["duration"] = c.duration;
    j["rng_seed"] = c.rng_seed;
    std::vector<std::string> channels;
    for (auto ch : g.regulator_channels) channels.emplace_back(to_string(ch));
    j["gait"] = {{"flap_frequency", g.flap_frequency},
                 {"plunge_amplitude_deg", deg(g.plunge_amplitude)},
                 {"flexion_amplitude_deg", deg(g.flexion_amplitude)},
                 {"flexion_phase_lag_deg", deg(g.flexion_phase_lag)},
                 {"flexion_offset_deg", deg(g.flexion_offset)},
                 {"regulator_channels", channels},
                 {"asymmetry_gains", vec(g.asymmetry_gains)},
                 {"stroke_limit", vec(g.stroke_limit)},
                 {"shoulder_limit_deg", deg(g.shoulder_limit)},
                 {"elbow_min_deg", deg(g.elbow_min)},
                 {"elbow_max_deg", deg(g.elbow_max)}};
    Json planform = "elliptic";
    if (!w.planform.elliptic()) planform = {{"eta", w.planform.eta}, {"chord_ratio", w.planform.chord_ratio}};
    j["wing"] = {{"span", w.span},
                 {"root_chord", w.root_chord},
                 {"planform", planform},
                 {"humerus_fraction", w.humerus_fraction},
                 {"root_position", {w.root_position.x(), w.root_position.y(), w.root_position.z()}},
                 {"incidence_deg", deg(w.incidence)}};
    const auto& wg = c.vehicle.wagner;
    j["aero"] = {{"lift_slope", a.a0},
                 {"airspeed", a.U},
                 {"density", a.rho},
                 {"fourier_terms", a.m},
                 {"enabled", c.vehicle.aero_enabled},
                 {"wagner", {{"psi1", wg.psi1}, {"psi2", wg.psi2}, {"eps1", wg.eps1}, {"eps2", wg.eps2}}}};
    Json I = Json::array();
    for (int r = 0; r < 3; ++r) I.push_back({in.inertia(r, 0), in.inertia(r, 1), in.inertia(r, 2)});
    j["inertia"] = {{"mass", in.mass},           {"inertia", I},
                    {"gravity", in.gravity},     {"recoil", in.recoil},
                    {"humerus_mass", in.humerus_mass}, {"radius_mass", in.radius_mass}};
    j["controller"] = {{"enabled", c.controller_enabled},
                       {"knots", cc.knots},
                       {"horizon", cc.horizon},
                       {"free_final_time", cc.free_final_time},
                       {"min_horizon", cc.min_horizon},
                       {"max_horizon", cc.max_horizon},
                       {"weights", vec(cc.weights)},
                       {"fd_relative_step", cc.fd_relative_step},
                       {"max_consecutive_failures", cc.max_consecutive_failures},
                       {"max_iterations", cc.solver.max_iterations},
                       {"eq_tol", cc.solver.eq_tol},
                       {"ineq_tol", cc.solver.ineq_tol},
                       {"stationarity_tol", cc.solver.stationarity_tol},
                       {"bfgs", cc.solver.bfgs}};
    if (cc.linear_model) {
        auto mat = [](const MatX& m) {
            Json rows = Json::array();
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                Json row = Json::array();
                for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(r, k));
                rows.push_back(row);
            }
            return rows;
        };
        j["controller"]["linear_model"] = {{"A", mat(cc.linear_model->A)}, {"B", mat(cc.linear_model->B)}};
    }
    j["reference"] = {{"pitch_deg", deg(c.reference.pitch)},
                      {"roll_initial_deg", deg(c.reference.roll_initial)},
                      {"roll_final_deg", deg(c.reference.roll_final)},
                      {"switch_time", c.reference.switch_time}};
    j["initial"] = {{"speed", c.initial.speed},
                    {"roll_deg", deg(c.initial.roll)},
                    {"pitch_deg", deg(c.initial.pitch)},
                    {"yaw_deg", deg(c.initial.yaw)}};
    j["perturbation"] = {{"attitude_deg", deg(c.perturbation.attitude)}, {"rate", c.perturbation.rate}};
    j["output"] = {{"decimation", c.decimation}};
    j["abort_threshold"] = c.abort_threshold;
    return j;
}

} // namespace morphwing
