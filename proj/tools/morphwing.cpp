// morphwing: run, sweep, wake, compare and check verbs over the header library.

#include "morphwing/analysis.hpp"
#include "morphwing/checks.hpp"
#include "morphwing/compare.hpp"
#include "morphwing/config.hpp"
#include "morphwing/scenario.hpp"
#include "morphwing/wake.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace morphwing;
using Json = nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalFailure = 3, kComparisonFailure = 4 };

// reference displacement targets, reported only
constexpr double kTargetDx = 4.1;
constexpr double kTargetDy = 5.0;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

Trace select_channels(const Trace& tr, const std::vector<std::string>& channels) {
    if (channels.empty()) return tr;
    std::vector<std::string> keep{"t"};
    for (const auto& c : channels)
        if (c != "t") keep.push_back(c);
    std::vector<int> idx;
    for (const auto& c : keep) idx.push_back(tr.index(c));
    Trace out;
    out.channels = keep;
    for (std::size_t r = 0; r < tr.rows(); ++r) {
        std::vector<double> row;
        for (int i : idx) row.push_back(tr.at(r, static_cast<std::size_t>(i)));
        out.append(row);
    }
    return out;
}

Json metrics_json(const BankingMetrics& m) {
    return {{"roll_mean_deg", m.roll_mean},
            {"pitch_mean_deg", m.pitch_mean},
            {"pitch_amplitude_deg", m.pitch_amplitude},
            {"fz_period_s", m.fz_period},
            {"fz_half_range_N", m.fz_half_range},
            {"yaw_monotonic", m.yaw_monotonic},
            {"yaw_change_deg", m.yaw_change},
            {"heading_monotonic", m.heading_monotonic},
            {"heading_change_deg", m.heading_change},
            {"dx_m", m.dx},
            {"dy_m", m.dy}};
}

Json run_summary(const ScenarioConfig& cfg, const RunResult& r) {
    Json j;
    j["status"] = r.completed() ? "completed" : "aborted";
    if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
    j["solves"] = r.solves.size();
    j["solver_failures"] = r.solver_failures;
    j["controller_faults"] = r.controller_faults;
    if (r.trace.rows() >= 2) {
        const auto m = banking_metrics(r.trace, cfg.vehicle.gait.flap_frequency);
        j["metrics"] = metrics_json(m);
        j["displacement"] = {{"dx_m", m.dx},
                             {"dy_m", m.dy},
                             {"target_dx_m", kTargetDx},
                             {"target_dy_m", kTargetDy},
                             {"deviation_dx_m", std::abs(m.dx) - kTargetDx},
                             {"deviation_dy_m", std::abs(m.dy) - kTargetDy}};
    }
    return j;
}

void print_summary(std::ostream& os, const Json& s) {
    os << "status " << s["status"].get<std::string>();
    if (s.contains("diagnostic")) os << " (" << s["diagnostic"].get<std::string>() << ")";
    os << "\nsolves " << s["solves"] << " failures " << s["solver_failures"] << " faults " << s["controller_faults"]
       << "\n";
    if (!s.contains("metrics")) return;
    const auto& m = s["metrics"];
    os << std::fixed << std::setprecision(3);
    os << "roll mean " << m["roll_mean_deg"].get<double>() << " deg, pitch mean " << m["pitch_mean_deg"].get<double>()
       << " deg, pitch amplitude " << m["pitch_amplitude_deg"].get<double>() << " deg\n";
    os << "Fz period " << m["fz_period_s"].get<double>() << " s, Fz half range " << m["fz_half_range_N"].get<double>()
       << " N, yaw monotonic " << (m["yaw_monotonic"].get<bool>() ? "yes" : "no") << " ("
       << m["yaw_change_deg"].get<double>() << " deg), heading monotonic "
       << (m["heading_monotonic"].get<bool>() ? "yes" : "no") << " (" << m["heading_change_deg"].get<double>()
       << " deg)\n";
    const auto& d = s["displacement"];
    os << "displacement dx " << d["dx_m"].get<double>() << " m (target " << kTargetDx << "), dy "
       << d["dy_m"].get<double>() << " m (target " << kTargetDy << ")\n";
    os.unsetf(std::ios::floatfield);
}

void write_json(const fs::path& p, const Json& j) {
    std::ofstream os(p);
    if (!os) throw TraceError("cannot open " + p.string() + " for writing");
    os << j.dump(2) << "\n";
}

std::string trace_name(const std::string& format) {
    if (format == "csv") return "trace.csv";
    if (format == "binary") return "trace.mwt";
    throw ConfigError("--format", "expected csv or binary");
}

struct RunOptions {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> decimate;
    std::optional<double> duration;
    std::optional<int> fourier_terms;
    std::string format = "csv";
    std::string channels;
    bool quiet = false;
};

ScenarioConfig load_with_overrides(const RunOptions& o) {
    ScenarioConfig cfg = load_scenario(o.config);
    if (o.seed) cfg.rng_seed = *o.seed;
    if (o.decimate) cfg.decimation = *o.decimate;
    if (o.duration) cfg.duration = *o.duration;
    if (o.fourier_terms) cfg.vehicle.aero.m = *o.fourier_terms;
    cfg.validate();
    return cfg;
}

int cmd_run(const RunOptions& o) {
    const ScenarioConfig cfg = load_with_overrides(o);
    const auto name = trace_name(o.format);
    fs::create_directories(o.out);
    std::ofstream log(fs::path(o.out) / "solver.log");
    const RunResult r = run_scenario(cfg, &log);
    save_trace((fs::path(o.out) / name).string(), select_channels(r.trace, split_list(o.channels)));
    write_json(fs::path(o.out) / "config.json", scenario_to_json(cfg));
    const Json summary = run_summary(cfg, r);
    write_json(fs::path(o.out) / "summary.json", summary);
    if (!o.quiet) print_summary(std::cout, summary);
    return r.completed() ? kOk : kNumericalFailure;
}

struct SweepOptions {
    RunOptions run;
    std::string rolls = "10,15,20,25";
    std::string speeds = "0.7,0.8,0.9";
    int jobs = 1;
};

int cmd_sweep(const SweepOptions& o) {
    const ScenarioConfig base = load_with_overrides(o.run);
    const auto name = trace_name(o.run.format);
    std::vector<std::pair<double, double>> grid;
    for (const auto& r : split_list(o.rolls))
        for (const auto& s : split_list(o.speeds)) grid.emplace_back(parse_double(r), parse_double(s));
    if (grid.empty()) throw ConfigError("--rolls", "empty parameter grid");
    fs::create_directories(o.run.out);

    std::vector<Json> rows(grid.size());
    std::atomic<std::size_t> next{0};
    std::mutex io;
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            const auto [roll, speed] = grid[i];
            ScenarioConfig cfg = base;
            cfg.reference.roll_final = deg2rad(roll);
            cfg.initial.speed = speed;
            std::ostringstream dir;
            dir << "roll" << roll << "_speed" << speed;
            const fs::path d = fs::path(o.run.out) / dir.str();
            fs::create_directories(d);
            std::ofstream log(d / "solver.log");
            Json row;
            try {
                const RunResult r = run_scenario(cfg, &log);
                save_trace((d / name).string(), select_channels(r.trace, split_list(o.run.channels)));
                row = run_summary(cfg, r);
            } catch (const std::exception& e) {
                row = {{"status", "error"}, {"diagnostic", e.what()}};
            }
            row["roll_reference_deg"] = roll;
            row["initial_speed"] = speed;
            row["directory"] = dir.str();
            write_json(d / "summary.json", row);
            rows[i] = row;
            std::lock_guard lock(io);
            if (!o.run.quiet) std::cout << dir.str() << ": " << row["status"].get<std::string>() << std::endl;
        }
    };
    const int jobs = std::max(1, std::min<int>(o.jobs, static_cast<int>(grid.size())));
    std::vector<std::thread> pool;
    for (int k = 1; k < jobs; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    write_json(fs::path(o.run.out) / "sweep.json", Json(rows));
    bool ok = true;
    for (const auto& r : rows) ok = ok && r["status"] == "completed";
    return ok ? kOk : kNumericalFailure;
}

int cmd_wake(const std::string& config, const std::string& trace, const std::string& out, double from) {
    const ScenarioConfig cfg = load_scenario(config);
    const Trace wake = export_wake(load_trace(trace), cfg.vehicle);
    save_trace(out, wake);
    const auto a = wake_asymmetry(wake, from);
    std::cout << "rows " << wake.rows() << ", |gamma| left " << a.left << " right " << a.right << ", asymmetry "
              << a.asymmetry << "\n";
    return kOk;
}

struct CompareCli {
    std::string trace, reference, channels, remap, report;
    double band = 0;
    double min_fraction = 1.0;
    bool no_resample = false;
};

int cmd_compare(const CompareCli& o) {
    CompareOptions opt;
    opt.band = o.band;
    opt.resample = !o.no_resample;
    for (const auto& item : split_list(o.remap)) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("--remap", "expected channel=factor, got '" + item + "'");
        opt.remap[item.substr(0, eq)] = parse_double(item.substr(eq + 1));
    }
    const auto channels = split_list(o.channels);
    if (channels.empty()) throw ConfigError("--channels", "at least one channel is required");
    const auto rep = compare_traces(load_trace(o.trace), load_trace(o.reference), channels, opt);
    Json j = Json::array();
    for (const auto& c : rep.channels) {
        std::cout << c.channel << ": max deviation " << c.max_deviation << ", in band " << 100 * c.in_band_fraction
                  << "% of " << c.samples << ", period " << c.period << " s (reference " << c.reference_period
                  << " s)\n";
        j.push_back({{"channel", c.channel},
                     {"max_deviation", c.max_deviation},
                     {"in_band_fraction", c.in_band_fraction},
                     {"samples", c.samples},
                     {"period", std::isfinite(c.period) ? Json(c.period) : Json()},
                     {"reference_period", std::isfinite(c.reference_period) ? Json(c.reference_period) : Json()}});
    }
    if (!o.report.empty()) write_json(o.report, j);
    return rep.all_in_band(o.min_fraction) ? kOk : kComparisonFailure;
}

int cmd_check() {
    bool ok = true;
    for (const auto& r : checks::run_all()) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        ok = ok && r.passed;
    }
    return ok ? kOk : kNumericalFailure;
}

void add_run_flags(CLI::App* app, RunOptions& o) {
    app->add_option("--config", o.config, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
    app->add_option("--out", o.out, "output directory");
    app->add_option("--seed", o.seed, "override rng_seed");
    app->add_option("--decimate", o.decimate, "record every k-th simulation step");
    app->add_option("--duration", o.duration, "override the run duration, s");
    app->add_option("--fourier-terms", o.fourier_terms, "override aero.fourier_terms");
    app->add_option("--format", o.format, "trace format: csv or binary");
    app->add_option("--channels", o.channels, "comma-separated channels to write (default all)");
    app->add_flag("--quiet", o.quiet, "no summary on stdout");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flapping-wing banking-turn simulator"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "run a scenario and write its trace");
    add_run_flags(run_cmd, run);

    SweepOptions sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "run the roll-reference / forward-speed grid");
    add_run_flags(sweep_cmd, sweep.run);
    sweep_cmd->add_option("--rolls", sweep.rolls, "roll references, deg");
    sweep_cmd->add_option("--speeds", sweep.speeds, "initial forward speeds, m/s");
    sweep_cmd->add_option("--jobs", sweep.jobs, "scenarios run in parallel");

    std::string wake_config, wake_trace, wake_out = "wake.csv";
    double wake_from = -1e300;
    auto* wake_cmd = app.add_subcommand("wake", "shed-wake dataset from a trace");
    wake_cmd->add_option("--config", wake_config, "scenario file the trace was produced with")
        ->required()
        ->check(CLI::ExistingFile);
    wake_cmd->add_option("--trace", wake_trace, "run trace")->required()->check(CLI::ExistingFile);
    wake_cmd->add_option("--out", wake_out, "wake output file");
    wake_cmd->add_option("--from", wake_from, "asymmetry metric over shedding times >= this, s");

    CompareCli cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "compare a trace against a reference trace");
    cmp_cmd->add_option("--trace", cmp.trace, "trace")->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("--reference", cmp.reference, "reference trace")->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("--channels", cmp.channels, "comma-separated channels")->required();
    cmp_cmd->add_option("--band", cmp.band, "tolerance band, channel units");
    cmp_cmd->add_option("--remap", cmp.remap, "reference scale factors, e.g. Fz=-1");
    cmp_cmd->add_option("--min-fraction", cmp.min_fraction, "in-band fraction required per channel");
    cmp_cmd->add_option("--report", cmp.report, "write the report as JSON");
    cmp_cmd->add_flag("--no-resample", cmp.no_resample, "require identical sample times");

    auto* check_cmd = app.add_subcommand("check", "built-in oracle suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*sweep_cmd) return cmd_sweep(sweep);
        if (*wake_cmd) return cmd_wake(wake_config, wake_trace, wake_out, wake_from);
        if (*cmp_cmd) return cmd_compare(cmp);
        if (*check_cmd) return cmd_check();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const TraceError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    }
    return kOk;
}
