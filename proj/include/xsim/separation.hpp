#pragma once

#include "xsim/params.hpp"

namespace xsim {

enum class LeadKind { hv_like, av };
enum class OwnLimit { av_limited, hv_limited };

struct FollowContext {
    LeadKind lead = LeadKind::av;
    OwnLimit own = OwnLimit::av_limited;
};

double stopping_distance(double v, double a_brake);

// Exact formulas, independent of mutation hooks.
double s_hv(double v, double v_lead, const Params& p);
double hv_lead_speed_adjust(double v_ro, const Params& p);
double s_av_av(double u, double w, const Params& p);
double s_hv_av(double u, double w, const Params& p);
double s_hv_hv(double u, double w, const Params& p);
double s_av_hv(double u, double w, const Params& p);
double s_star(FollowContext ctx, double v_prev, double v_ro_prev, const Params& p);

// What the controllers use: the exact formula unless a test hook weakens it.
double ctl_s_hv(double v, double v_lead, const Params& p);
double ctl_s_star(FollowContext ctx, double v_prev, double v_ro_prev, const Params& p);

// Lower bound on d_C so an unpermitted AV entering A_C at v_max can always stop.
double d_c_lower_bound(const Params& p);

}  // namespace xsim
