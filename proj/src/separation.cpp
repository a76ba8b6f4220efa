#include "xsim/separation.hpp"

#include <algorithm>
#include <cmath>

namespace xsim {

double stopping_distance(double v, double a_brake) { return v * v / (-2.0 * a_brake); }

double s_hv(double v, double v_lead, const Params& p) {
    double s = p.v_max * p.t_react + p.s_min;
    if (v > v_lead) s += (v * v - v_lead * v_lead) / (-2.0 * p.a_hv_min);
    return s;
}

double hv_lead_speed_adjust(double v_ro, const Params& p) { return std::max(0.0, v_ro + p.a_hv_min * p.h / 2.0); }

double s_av_av(double u, double w, const Params& p) {
    const double h = p.h, a = p.a_av_min;
    double s = p.s_min;
    if (u > w) s += (u * u - w * w) / (-2.0 * a) + (u - w) * h - 0.5 * a * h * h;
    return s;
}

double s_hv_av(double u, double w, const Params& p) {
    const double h = p.h;
    const double wa = hv_lead_speed_adjust(w, p);
    double s = p.s_min;
    if (u > wa) {
        const double du = u - wa;
        s += du * du / (-2.0 * (p.a_av_min - p.a_hv_min)) + (u - w) * h - 0.5 * p.a_av_min * h * h -
             0.5 * p.a_hv_min * h * h;
    }
    return s;
}

static double hvhv(double u, double w, const Params& p, double stop_coef) {
    const double h = p.h;
    const double wa = hv_lead_speed_adjust(w, p);
    double s = p.v_max * p.t_react + p.s_min;
    if (u > wa) s += stop_coef * (u * u - wa * wa) / (-p.a_hv_min) + (u - w) * h - p.a_hv_min * h * h;
    return s;
}

double s_hv_hv(double u, double w, const Params& p) { return hvhv(u, w, p, 0.5); }

double s_av_hv(double u, double w, const Params& p) {
    const double h = p.h;
    double s = p.v_max * p.t_react + p.s_min;
    if (u > std::sqrt(p.a_hv_min / p.a_av_min) * w)
        s += u * u / (-2.0 * p.a_hv_min) - w * w / (-2.0 * p.a_av_min) + (u - w) * h - 0.5 * p.a_hv_min * h * h;
    return s;
}

double s_star(FollowContext ctx, double u, double w, const Params& p) {
    if (ctx.own == OwnLimit::av_limited) return ctx.lead == LeadKind::av ? s_av_av(u, w, p) : s_hv_av(u, w, p);
    return ctx.lead == LeadKind::av ? s_av_hv(u, w, p) : s_hv_hv(u, w, p);
}

static int formula_tag(FollowContext ctx) {
    if (ctx.own == OwnLimit::av_limited) return ctx.lead == LeadKind::av ? 4 : 5;
    return ctx.lead == LeadKind::hv_like ? 6 : 7;
}

static double weaken(int tag, double s, const Params& p) {
    const Mutations& m = p.mut;
    if (m.separation_scale != 1.0 && (m.weaken_formula < 0 || m.weaken_formula == tag)) return s * m.separation_scale;
    return s;
}

double ctl_s_hv(double v, double v_lead, const Params& p) { return weaken(0, s_hv(v, v_lead, p), p); }

double ctl_s_star(FollowContext ctx, double u, double w, const Params& p) {
    const int tag = formula_tag(ctx);
    double s = (tag == 6 && p.mut.halve_hvhv_stop_coef) ? hvhv(u, w, p, 0.25) : s_star(ctx, u, w, p);
    return weaken(tag, s, p);
}

double d_c_lower_bound(const Params& p) {
    const double v = p.v_max, h = p.h, a = p.a_hv_min;
    return v * v / (-2.0 * a) + v * h - a * h * h / 2.0 + v * p.t_react + p.s_min;
}

}  // namespace xsim
