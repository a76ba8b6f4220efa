#pragma once

#include <random>
#include <string>
#include <vector>

#include "xsim/world.hpp"

namespace xsim {

enum class HvMode { nominal, randomized, adversarial };
const char* hv_mode_name(HvMode m);
HvMode parse_hv_mode(const std::string& s);

using Rng = std::mt19937_64;

struct HvDecision {
    double v_next = 0;
    double lo = 0, hi = 0;  // admissible interval before the mode's choice
    bool latch = false;     // stop obligation after this micro-step
    bool gate_open = false; // right turn: crossing allowed in this micro-step
    bool rules_infeasible = false;
};

// Right-turn gate condition on the single conflicting path, plus the car-following checks the cut-in creates.
bool right_turn_gate(const Vehicle& c, const World& w);

// One micro-step of HV control. Reads only positions, speeds and the light.
HvDecision hv_decide_step(const Vehicle& c, const World& w, HvMode mode, Rng& rng);

// Speed profile over one slot with the neighbours frozen at their current states.
std::vector<double> hv_decide(const Vehicle& c, const World& w, HvMode mode, Rng& rng);

// Max end speed v' of a linear ramp from v over dt so that
// gap + lead_travel - (v+v')dt/2 >= req(v'), req(v') = [v'>u](v'^2-u^2)/(-2a) + c.
double max_speed_for_gap(double gap, double lead_travel, double v, double dt, double u, double c, double a);

}  // namespace xsim
