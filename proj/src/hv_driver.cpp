#include "xsim/hv_driver.hpp"

#include <algorithm>
#include <cmath>

#include "xsim/separation.hpp"

namespace xsim {

const char* hv_mode_name(HvMode m) {
    switch (m) {
        case HvMode::nominal: return "nominal";
        case HvMode::randomized: return "randomized";
        case HvMode::adversarial: return "adversarial";
    }
    return "?";
}

HvMode parse_hv_mode(const std::string& s) {
    if (s == "nominal") return HvMode::nominal;
    if (s == "randomized") return HvMode::randomized;
    if (s == "adversarial") return HvMode::adversarial;
    throw ModelError("parse", "unknown HV mode '" + s + "'");
}

double max_speed_for_gap(double gap, double lead_travel, double v, double dt, double u, double c, double a) {
    const double A = 1.0 / (-2.0 * a), B = dt / 2.0;
    const double Q = gap + lead_travel - v * dt / 2.0 - c;
    if (Q / B <= u) return Q / B;
    return (-B + std::sqrt(B * B + 4.0 * A * (Q + A * u * u))) / (2.0 * A);
}

namespace {

double hv_scale(const Params& p) {
    const auto& m = p.mut;
    return (m.separation_scale != 1.0 && (m.weaken_formula < 0 || m.weaken_formula == 0)) ? m.separation_scale : 1.0;
}

// Upper speed bound from the car-following rule against the worst lead over one micro-step.
// anticipation > 0 additionally reserves room for a slot-boundary drop in the lead's speed.
double lead_bound(const Vehicle& c, const Neighbor& L, double dt, double anticipation, const Params& p) {
    const double sc = hv_scale(p);
    const double vl = L.v->st.v;
    const double travel = braking_distance_in(vl, p.a_hv_min, dt);
    const double vl_next = std::max(0.0, vl + p.a_hv_min * dt);
    const double u = std::max(0.0, vl_next - anticipation);
    const double cst = sc * (p.v_max * p.t_react + p.s_min) + (anticipation > 0 ? p.hv_epsilon : 0.0);
    return max_speed_for_gap(L.gap, travel, c.st.v, dt, u, cst, p.a_hv_min / sc);
}

// aims a hair short of the line so rounding never puts a stopped vehicle across it
constexpr double line_margin = 1e-6;

double stop_bound(const Vehicle& c, double d, double dt, const Params& p) {
    return max_speed_for_gap(d - line_margin, 0.0, c.st.v, dt, 0.0, 0.0, p.a_hv_min);
}

bool latched_after(const Vehicle& c, const World& w) {
    const auto& m = w.model();
    if (m.is_right(c.st.path) || w.past_entry(c) || !w.in_a_h(c)) return c.stop_latched && !w.past_entry(c);
    const Light l = w.light_of(c);
    if (l == Light::green) return false;
    if (c.stop_latched) return true;
    if (l == Light::red) return true;
    return w.dist_to_entry(c) >= s_hv(c.st.v, 0.0, w.params());
}

}  // namespace

bool right_turn_gate(const Vehicle& c, const World& w) {
    const auto& m = w.model();
    const auto& p = w.params();
    const int r = c.st.path;
    const double entry = m.paths[r].entry;
    if (auto k = m.right_partner(r)) {
        const double ek = m.paths[*k].entry;
        const Vehicle* cr = nullptr;
        for (const auto& o : w.vehicles) {
            if (o.st.path != *k || o.st.s >= ek) continue;
            if (!cr || o.st.s > cr->st.s) cr = &o;
        }
        if (cr && ek - cr->st.s < s_hv(cr->st.v - p.a_hv_min * p.h, 0.0, p)) return false;
    }
    const double s_cut = std::max(c.st.s, entry);
    for (const auto& L : w.leads_at(r, s_cut, c.id))
        if (L.gap < s_hv(c.st.v, std::max(0.0, L.v->st.v - p.hv_anticipation), p) + p.hv_epsilon) return false;
    // everyone the cut-in lands in front of, not only the nearest: the own-lane queue hides the partner path
    for (const auto& o : w.vehicles) {
        if (o.id == c.id || o.st.path == r) continue;
        const auto g = w.frame_gap(o.st.path, o.st.s, r, s_cut);
        if (!g || *g < 0) continue;
        const double vf = o.st.v;
        if (*g < s_hv_hv(vf, 0.0, p) + vf * p.h + p.hv_epsilon) return false;
    }
    return true;
}

HvDecision hv_decide_step(const Vehicle& c, const World& w, HvMode mode, Rng& rng) {
    const auto& p = w.params();
    const auto& m = w.model();
    const double dt = p.delta();
    const double v = c.st.v;
    HvDecision d;
    const double lo = std::max(0.0, v + p.a_hv_min * dt);
    const double hi = std::min(p.v_max, v + p.a_max * dt);

    d.latch = latched_after(c, w);
    const bool right = m.is_right(c.st.path);
    const double to_entry = w.dist_to_entry(c);

    double ub = hi;
    const auto leads = w.leads(c);
    for (const auto& L : leads) {
        double b = lead_bound(c, L, dt, p.hv_anticipation, p);
        if (b < lo) {
            // the reserve is gone; fall back to the rule itself
            b = lead_bound(c, L, dt, 0.0, p);
            if (b < lo - 1e-9) d.rules_infeasible = true;
            b = lo;
        }
        ub = std::min(ub, b);
    }

    double stop_ub = hi;
    const bool must_hold_line = to_entry > 0 && (d.latch || right);
    if (must_hold_line) stop_ub = std::max(lo, stop_bound(c, to_entry, dt, p));
    double cross_lo = hi + 1;  // empty crossing set unless the gate opens
    if (right && to_entry > 0) {
        const double v_cross = 2.0 * to_entry / dt - v;
        if (v_cross <= ub && right_turn_gate(c, w)) {
            d.gate_open = true;
            cross_lo = std::max(lo, v_cross);
        }
    }

    // admissible set: [lo, min(ub, stop_ub)] united with [cross_lo, ub]
    const double top_hold = std::max(lo, std::min(ub, stop_ub));
    const double top = cross_lo <= ub ? ub : top_hold;
    d.lo = lo;
    d.hi = top;
    auto clamp_admissible = [&](double x) {
        x = std::clamp(x, lo, top);
        if (x > top_hold && x < cross_lo) x = (x - top_hold < cross_lo - x) ? top_hold : cross_lo;
        return x;
    };

    double choice = top;
    switch (mode) {
        case HvMode::nominal: choice = std::min(top, v + 0.6 * p.a_max * dt); break;
        case HvMode::randomized: {
            std::uniform_real_distribution<double> U(lo, top);
            choice = U(rng);
            break;
        }
        case HvMode::adversarial: {
            // bang-bang toward whichever extreme leaves the least slack nearby
            auto slack_of = [&](double vn) {
                double s = 1e9;
                const double travel = hv_micro_travel(v, vn, dt, p.a_hv_min);
                for (const auto& L : leads) {
                    const double gl = L.gap + braking_distance_in(L.v->st.v, p.a_hv_min, dt) - travel;
                    s = std::min(s, gl - s_hv(vn, std::max(0.0, L.v->st.v + p.a_hv_min * dt), p));
                }
                for (const auto& F : w.followers(c)) {
                    const double gf = F.gap + travel - F.v->st.v * dt;
                    s = std::min(s, gf - s_hv(F.v->st.v, vn, p));
                }
                if (must_hold_line) s = std::min(s, to_entry - travel - stopping_distance(vn, p.a_hv_min));
                return s;
            };
            const double s_lo = slack_of(lo), s_hi = slack_of(top);
            if (std::min(s_lo, s_hi) > 12.0) choice = top;
            else choice = s_lo < s_hi ? lo : top;
            if (v < 0.5 && !d.latch) choice = top;
            break;
        }
    }
    // keep traffic moving once committed inside the junction
    if (w.past_entry(c)) choice = std::max(choice, std::min(top, 3.0));
    d.v_next = clamp_admissible(choice);
    return d;
}

std::vector<double> hv_decide(const Vehicle& c, const World& w, HvMode mode, Rng& rng) {
    const auto& p = w.params();
    World tmp = w;
    Vehicle* me = tmp.find(c.id);
    std::vector<double> prof{c.st.v};
    for (int k = 0; k < p.micro_steps; ++k) {
        HvDecision d = hv_decide_step(*me, tmp, mode, rng);
        me->st.s += hv_micro_travel(me->st.v, d.v_next, p.delta(), p.a_hv_min);
        me->st.v = d.v_next;
        me->stop_latched = d.latch;
        prof.push_back(d.v_next);
    }
    return prof;
}

}  // namespace xsim
