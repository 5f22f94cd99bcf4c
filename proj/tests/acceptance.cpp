// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
// The closed-loop criteria use configs/banking_turn.json; the full banking run
// takes a few minutes on one core.

#include "morphwing/analysis.hpp"
#include "morphwing/checks.hpp"
#include "morphwing/config.hpp"
#include "morphwing/scenario.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

using namespace morphwing;

namespace {

int failures = 0;

void report(const char* id, bool pass, const std::string& what, const std::string& detail) {
    std::printf("%s %-4s %s: %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void report(const char* id, const checks::CheckResult& r) { report(id, r.passed, r.name, r.detail); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string bytes_of(const Trace& tr, bool binary) {
    std::ostringstream os;
    if (binary) write_binary(os, tr);
    else write_csv(os, tr);
    return os.str();
}

} // namespace

int main() {
    const std::string config_path = std::string(MORPHWING_SOURCE_DIR) + "/configs/banking_turn.json";
    ScenarioConfig cfg;
    try {
        cfg = load_scenario(config_path);
    } catch (const std::exception& e) {
        std::printf("FAIL cannot load %s: %s\n", config_path.c_str(), e.what());
        return 2;
    }

    report("1", checks::wagner_function());

    auto t0 = std::chrono::steady_clock::now();
    auto lift = checks::elliptic_lift_slope();
    lift.passed = lift.passed && seconds_since(t0) < 1.0;
    report("2", lift);

    t0 = std::chrono::steady_clock::now();
    auto step = checks::step_response();
    step.passed = step.passed && seconds_since(t0) < 10.0;
    report("3", step);

    report("4", checks::dual_form());

    t0 = std::chrono::steady_clock::now();
    const auto lq = checks::lq_oracle();
    const auto hermite = checks::hermite_identities();
    const auto order = checks::defect_convergence();
    const bool colloc_fast = seconds_since(t0) < 5.0;
    report("5a", lq);
    report("5b", hermite);
    report("5c", order.passed && colloc_fast, order.name, order.detail);

    report("6", checks::rk4_convergence());

    // 7 and 8: the banking scenario as shipped
    t0 = std::chrono::steady_clock::now();
    std::ofstream log("acceptance_banking.log");
    const RunResult run = run_scenario(cfg, &log);
    const double run_time = seconds_since(t0);
    save_trace("acceptance_banking.csv", run.trace);
    const bool completed = run.completed() && run.trace.rows() >= 2;
    const std::string run_detail = fmt("%.0f s wall, %.0f solves, %.0f failures", run_time,
                                       static_cast<double>(run.solves.size()), run.solver_failures) +
                                   (completed ? std::string() : ", aborted: " + run.diagnostic);
    report("7", completed, "banking run completes", run_detail);
    if (completed) {
        const double f = cfg.vehicle.gait.flap_frequency;
        const auto m = banking_metrics(run.trace, f);
        report("7a", std::abs(m.roll_mean - 15.0) <= 3.0, "mean roll over the final 2 s in 15 +- 3 deg",
               fmt("%.2f deg", m.roll_mean));
        report("7b", m.pitch_amplitude >= 5.0 && m.pitch_amplitude <= 12.0 && std::abs(m.pitch_mean + 15.0) <= 3.0,
               "pitch amplitude in [5, 12] deg around a mean in -15 +- 3 deg",
               fmt("amplitude %.2f deg, mean %.2f deg", m.pitch_amplitude, m.pitch_mean));
        report("7c", std::abs(m.fz_period * f - 1.0) <= 0.02, "Fz period 1/3.5 s +- 2%",
               fmt("%.5f s (%.2f%%)", m.fz_period, 100 * (m.fz_period * f - 1.0)));
        report("7d", m.fz_half_range >= 0.15 && m.fz_half_range <= 0.45, "Fz peak magnitude in [0.15, 0.45] N",
               fmt("%.3f N", m.fz_half_range));
        report("7e", m.yaw_monotonic, "yaw monotonic over the banked window", fmt("yaw change %.1f deg", m.yaw_change));
        std::printf("INFO 7e   velocity heading over the same window: %s, change %.1f deg\n",
                    m.heading_monotonic ? "monotonic" : "not monotonic", m.heading_change);
        std::printf("INFO 8    displacement dx %.2f m (target 4.1, deviation %+.2f), dy %.2f m (target 5.0, deviation %+.2f)\n",
                    m.dx, std::abs(m.dx) - 4.1, m.dy, std::abs(m.dy) - 5.0);
        report("8", true, "displacement reported, not asserted", fmt("dx %.2f m, dy %.2f m", m.dx, m.dy));
    } else {
        for (const char* id : {"7a", "7b", "7c", "7d", "7e"}) report(id, false, "banking metric", "run did not complete");
        report("8", true, "displacement reported, not asserted", "no complete run");
    }

    // 9: determinism on a short closed-loop run of the same scenario
    ScenarioConfig shortcfg = cfg;
    shortcfg.duration = 0.05;
    shortcfg.perturbation = {deg2rad(2), 0.2};
    shortcfg.rng_seed = 7;
    const auto a = run_scenario(shortcfg), b = run_scenario(shortcfg);
    const bool same = bytes_of(a.trace, false) == bytes_of(b.trace, false) &&
                      bytes_of(a.trace, true) == bytes_of(b.trace, true) && !a.solves.empty();
    report("9", same, "repeated runs byte-identical",
           fmt("%.0f rows, %.0f solves each", static_cast<double>(a.trace.rows()), static_cast<double>(a.solves.size())));

    report("10", checks::symmetry(cfg.vehicle));

    std::printf("%s: %d failing\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
