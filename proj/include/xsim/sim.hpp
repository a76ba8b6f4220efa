#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xsim/geometry.hpp"
#include "xsim/hv_driver.hpp"
#include "xsim/manager.hpp"
#include "xsim/monitor.hpp"
#include "xsim/params.hpp"
#include "xsim/world.hpp"

namespace xsim {

struct Arrival {
    int slot = 0;
    Kind kind = Kind::hv;
    int path = 0;
    double v0 = 0;
    bool operator==(const Arrival&) const = default;
};

// Poisson arrivals per path, drawn from the "arrivals" sub-stream.
struct StochasticArrivals {
    double rate = 0.1;  // vehicles per second per path
    double hv_fraction = 0.5;
    double v0_min = 8.0, v0_max = 14.0;
    std::vector<int> paths;  // empty means every path
    bool operator==(const StochasticArrivals&) const = default;
};

struct Scenario {
    std::string name;
    GeometrySpec geometry = GeometrySpec::default_junction();
    Params params;
    std::vector<Arrival> arrivals;
    std::optional<StochasticArrivals> stochastic;
    int horizon = 1000;
    HvMode hv_mode = HvMode::nominal;
};

bool operator==(const Params& a, const Params& b);
bool operator==(const Scenario& a, const Scenario& b);

struct Metrics {
    int spawned = 0;
    int exited = 0;
    int queued_unspawned = 0;
    double sim_seconds = 0;
    double throughput = 0;  // exits per simulated hour
    double mean_delay = 0;  // seconds over free flow, mean across exited vehicles
    int stops_hv = 0, stops_av = 0;
    int in_transit = 0;
};

struct SafetyReport {
    std::vector<Violation> violations;
    Metrics metrics;
    std::vector<std::string> reservation_conflicts;         // per-slot conflict descriptions
    std::vector<Policy1Violation> policy1;   // signal trace check
    std::vector<std::string> vhv_limit;      // VHV commanded beyond a_hv
    int rules_infeasible = 0;                // HV micro-steps where the rule could not be met
    int plans_fallback = 0, plans_optimizer = 0;
    std::string fatal_code, fatal_message;   // run-fatal diagnostic, empty when none
    bool live = true;                        // every spawned vehicle exited and nothing stayed queued

    bool safe() const { return violations.empty() && fatal_code.empty(); }
};

struct RunOptions {
    bool trace = true;            // collect JSON-lines events
    bool state_samples = true;    // include per-slot state-sample events
    bool stop_on_violation = false;
    bool check_invariants = true;
};

struct RunResult {
    std::string trace;    // one JSON object per line
    std::string metrics;  // per-slot CSV
    SafetyReport report;
    std::vector<SignalRecord> signals;
};

// Geometry is built once per distinct spec and shared.
std::shared_ptr<const IntersectionModel> cached_model(const GeometrySpec& spec, const Params& p);

// Validates geometry and static arrival hypotheses; throws ModelError("invariant").
void validate_scenario(const Scenario& sc);

RunResult run(const Scenario& sc, uint64_t seed, const RunOptions& opt = {});

// Time from spawn to exit accelerating at a_max up to v_max.
double free_flow_time(double length, double v0, const Params& p);

struct ExitRecord {
    int id = 0;
    Kind kind = Kind::hv;
    double spawn_time = 0, exit_time = 0, free_flow = 0;
};

Metrics compute_metrics(const std::vector<ExitRecord>& exits, int spawned, int queued, double sim_seconds);

// Safety report plus summary metrics as a JSON document.
std::string report_json(const SafetyReport& r, const Scenario& sc, uint64_t seed);

// Independent sub-stream seeded from (seed, name).
Rng substream(uint64_t seed, const std::string& name);

}  // namespace xsim
