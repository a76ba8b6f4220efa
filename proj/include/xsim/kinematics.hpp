#pragma once

#include <vector>

#include "xsim/geometry.hpp"
#include "xsim/params.hpp"

namespace xsim {

struct VehicleState {
    double x = 0, y = 0, theta = 0;
    double v = 0;
    double s = 0;
    double v_prev = 0;
    int path = 0;
};

struct ControlInput {
    double v_cmd = 0;
    double omega = 0;
};

// Closed-form unicycle update over one slot. Checks the speed-change envelope against a_min.
VehicleState step_av(const VehicleState& st, const ControlInput& in, double h, const Params& p, double a_min);

// Pure pose update without constraint checks.
Pose unicycle_closed_form(Pose x, double v, double omega, double h);

// Integrates a piecewise-linear speed profile (one speed per micro-step boundary, size n+1) along a path.
// Returns the states at each micro-step boundary; the last is the state at t+h.
std::vector<VehicleState> step_hv(const VehicleState& st, const std::vector<double>& speeds, double h,
                                  const PathGeometry& path, const Params& p);

// On-rails AV step: advances s by v_cmd*h and places the vehicle on the centerline.
VehicleState step_on_rails(const VehicleState& st, double v_cmd, double h, const PathGeometry& path);

double stopping_distance(double v, double a_brake);

// Distance covered in one HV micro-step ramping from v to v_next. A stop reached
// before the end of the step happens at a_min and the vehicle then waits.
double hv_micro_travel(double v, double v_next, double dt, double a_min);

// Distance covered in time t at constant acceleration a from speed v; braking stops at rest.
double braking_distance_in(double v, double a, double t);

}  // namespace xsim
