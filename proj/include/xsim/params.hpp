#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace xsim {

// Test-only sabotage switches. All off in normal operation.
struct Mutations {
    bool disable_conflict_check = false;  // permission grants skip the conflict test
    double separation_scale = 1.0;        // controllers use scale * formula
    int weaken_formula = -1;              // -1 all, 0 s_hv, 4..7 the AV formulas
    bool halve_hvhv_stop_coef = false;    // HV-limited/HV-lead formula with halved braking term
    bool flip_follower_sign = false;      // planned-HV follower test with the opposite sign
};

struct Params {
    double h = 0.5;
    int micro_steps = 10;  // delta = h / micro_steps
    double v_max = 14.0;
    double a_hv_min = -4.0;
    double a_av_min = -8.0;
    double a_max = 3.0;
    double t_react = 1.0;
    double s_min = 5.0;
    double rho_min = 5.0;

    int horizon_n = 4;
    int grid_points = 21;

    double d_c = 80.0;
    double d_h = 50.0;

    // anticipated lead speed drop HVs keep in reserve (m/s)
    double hv_anticipation = 2.0;
    double hv_epsilon = 0.05;

    Mutations mut;

    double delta() const { return h / micro_steps; }
};

struct ModelError : std::runtime_error {
    std::string code;
    ModelError(std::string c, const std::string& msg) : std::runtime_error(msg), code(std::move(c)) {}
};

}  // namespace xsim
