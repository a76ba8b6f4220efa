#include "xsim/kinematics.hpp"

#include <cmath>

namespace xsim {

Pose unicycle_closed_form(Pose x, double v, double w, double h) {
    const double wh = w * h;
    double f;  // chord length factor: 2 sin(wh/2) / w
    if (std::abs(wh) < 1e-6) f = h * (1.0 - wh * wh / 24.0);
    else f = 2.0 * std::sin(0.5 * wh) / w;
    const double mid = x.theta + 0.5 * wh;
    return {x.x + v * f * std::cos(mid), x.y + v * f * std::sin(mid), x.theta + wh};
}

VehicleState step_av(const VehicleState& st, const ControlInput& in, double h, const Params& p, double a_min) {
    const double dv = in.v_cmd - st.v;
    if (in.v_cmd < -1e-12 || in.v_cmd > p.v_max + 1e-12)
        throw ModelError("controller", "commanded speed outside [0, v_max]");
    if (dv < a_min * h - 1e-9 || dv > p.a_max * h + 1e-9)
        throw ModelError("controller", "speed change outside the acceleration envelope");
    Pose q = unicycle_closed_form({st.x, st.y, st.theta}, in.v_cmd, in.omega, h);
    VehicleState out = st;
    out.x = q.x;
    out.y = q.y;
    out.theta = q.theta;
    out.v_prev = st.v;
    out.v = in.v_cmd;
    out.s = st.s + in.v_cmd * h;
    return out;
}

VehicleState step_on_rails(const VehicleState& st, double v_cmd, double h, const PathGeometry& path) {
    VehicleState out = st;
    out.v_prev = st.v;
    out.v = v_cmd;
    out.s = st.s + v_cmd * h;
    Pose q = path.pose(out.s);
    out.x = q.x;
    out.y = q.y;
    out.theta = q.theta;
    return out;
}

std::vector<VehicleState> step_hv(const VehicleState& st, const std::vector<double>& speeds, double h,
                                  const PathGeometry& path, const Params& p) {
    const int n = static_cast<int>(speeds.size()) - 1;
    if (n <= 0) throw ModelError("controller", "empty speed profile");
    const double dt = h / n;
    std::vector<VehicleState> out;
    out.reserve(n);
    VehicleState cur = st;
    for (int k = 0; k < n; ++k) {
        const double v0 = speeds[k], v1 = speeds[k + 1];
        if (v1 < -1e-12 || v1 > p.v_max + 1e-9) throw ModelError("controller", "HV speed outside [0, v_max]");
        const double dv = v1 - v0;
        if (dv < p.a_hv_min * dt - 1e-9 || dv > p.a_max * dt + 1e-9)
            throw ModelError("controller", "HV speed change outside the acceleration envelope");
        cur.s += hv_micro_travel(v0, v1, dt, p.a_hv_min);
        cur.v = v1;
        Pose q = path.pose(cur.s);
        cur.x = q.x;
        cur.y = q.y;
        cur.theta = q.theta;
        out.push_back(cur);
    }
    out.back().v_prev = st.v;
    return out;
}

double hv_micro_travel(double v, double v_next, double dt, double a_min) {
    // a ramp to rest shorter than the step: brake hard and wait
    if (v_next <= 0 && v + a_min * dt < 0) return v * v / (-2.0 * a_min);
    return 0.5 * (v + v_next) * dt;
}

double braking_distance_in(double v, double a, double t) {
    if (a >= 0) return v * t + 0.5 * a * t * t;
    if (v <= 0) return 0;
    const double ts = v / -a;
    if (t >= ts) return v * v / (-2.0 * a);
    return v * t + 0.5 * a * t * t;
}

}  // namespace xsim
