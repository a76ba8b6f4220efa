#pragma once

#include <set>
#include <string>
#include <vector>

#include "xsim/world.hpp"

namespace xsim {

struct Request {
    int vehicle = 0;
    int path = 0;
    int slot = 0;
};

struct ManagerState {
    std::set<int> permitted_av;
    std::set<int> planned_hv;
    std::set<int> uncertain;
    std::set<int> exited;
    std::vector<Request> pending;
};

struct SignalState {
    std::vector<Light> color;
    std::vector<int> amber_since;  // slot the current amber began, -1 otherwise

    static SignalState all_red(size_t n);
};

std::set<int> compute_exited(const World& w);

// prev_colors are the colors of the previous slot
std::set<int> compute_uncertain(const World& w, const std::vector<Light>& prev_colors, const std::set<int>& prev_uncertain);

ManagerState assign_permissions(const ManagerState& prev, const World& w, const std::vector<Request>& incoming,
                                const std::set<int>& exited, const std::set<int>& uncertain);

SignalState update_signals(const SignalState& prev, const ManagerState& st, const World& w, int slot);

// Returns a description of the first conflicting pair, empty if the reserved paths are pairwise conflict-free.
std::string check_reservations(const ManagerState& st, const World& w);

struct HvSample {
    int id = 0;
    int path = 0;
    double d = 0;  // distance to entry, negative inside
    double v = 0;
    bool latched = false;
};

struct SignalRecord {
    int slot = 0;
    std::vector<Light> colors;
    std::vector<HvSample> hvs;  // HVs on signalled paths that have not exited
};

struct Policy1Violation {
    int slot = 0;
    std::string what;
};

std::vector<Policy1Violation> check_policy1(const std::vector<SignalRecord>& trace, const IntersectionModel& m,
                                            const Params& p);

// HV on a signalled path that would be stranded if its light went red now
bool hv_cannot_stop(double d, double v, bool latched, const Params& p);

}  // namespace xsim
