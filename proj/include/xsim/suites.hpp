#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xsim/sim.hpp"

namespace xsim {

struct SuiteResult {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0;
};

enum class Formula { s_hv, av_av, hv_av, hv_hv, av_hv };
const char* formula_name(Formula f);

struct OracleStats {
    int episodes = 0;
    double min_margin = 0;  // min over episodes of (min gap - s_min)
    double worst_u = 0, worst_w = 0;
};

// Brute-force worst-case episodes started at the controller's required gap.
OracleStats separation_oracle(Formula f, const Params& p, int episodes, uint64_t seed);
std::vector<SuiteResult> separation_suite(const Params& p, int episodes, uint64_t seed);

// Executes the first planned input from random constraint-satisfying states and re-checks the fallback.
SuiteResult feasibility_suite(const Params& p, int states, uint64_t seed);

// Closed-form unicycle step against RK4, and the omega -> 0 limit.
SuiteResult kinematics_suite(const Params& p, int inputs, uint64_t seed);
SuiteResult special_case_suite(const Params& p);

struct BatchConfig {
    int scenarios = 500;
    int seeds = 3;
    int horizon = 1000;
    int workers = 0;  // 0 picks the hardware concurrency
    bool stop_on_detection = false;
    Params params;
};

struct BatchOutcome {
    int runs = 0;
    int violations = 0;
    int reservation_conflicts = 0;
    int policy1 = 0;
    int fatal = 0;
    int infeasible = 0;  // fatal diagnostics with code infeasible-state
    int vhv_limit = 0;
    int not_live = 0;
    long long spawned = 0, exited = 0;
    std::vector<std::string> examples;  // first few findings
    double seconds = 0;
    bool detected() const { return violations + reservation_conflicts + policy1 + fatal + vhv_limit > 0; }
};

// Randomized mixed-traffic scenarios covering every HV fraction, HV mode and demand level.
std::vector<Scenario> safety_scenarios(int count, int horizon, const Params& p);
BatchOutcome run_batch(const BatchConfig& cfg);

struct MutationCase {
    std::string name;
    Mutations mut;
};
std::vector<MutationCase> mutation_cases();
std::vector<SuiteResult> mutation_suite(const BatchConfig& cfg);

SuiteResult determinism_suite(const Params& p, int horizon);

}  // namespace xsim
