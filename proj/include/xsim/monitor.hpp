#pragma once

#include <string>
#include <vector>

#include "xsim/world.hpp"

namespace xsim {

struct Violation {
    int slot = 0;
    int micro = 0;
    std::string type;  // area-co-occupancy, hv-separation, av-separation, entry-without-right
    std::vector<int> vehicles;
    double measured = 0;
    double required = 0;
};

// Micro-step checks: collision-area co-occupancy, HV car-following rule, bumper overlap.
std::vector<Violation> check_safety(const World& w);

// Slot-boundary check of every AV's active separation constraint.
std::vector<Violation> check_av_separation(const World& w);

}  // namespace xsim
