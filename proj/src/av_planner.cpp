#include "xsim/av_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xsim {

// rounding allowance on separation constraints, the one the safety monitor applies
constexpr double kGapTol = 1e-9;

std::vector<double> PlanResult::speeds() const {
    std::vector<double> v;
    for (const auto& in : inputs) v.push_back(in.v_cmd);
    return v;
}

double effective_brake_limit(const Vehicle& c, const Params& p) { return c.vhv ? p.a_hv_min : p.a_av_min; }

ControlInput fallback_brake(const Vehicle& c, const PathGeometry& path, const Params& p) {
    const double v = std::max(0.0, c.st.v + effective_brake_limit(c, p) * p.h);
    return {v, v * path.curvature(c.st.s)};
}

void predict_reference(ReferenceObject& ro, int n, const Params& p) {
    ro.travel.assign(n, 0.0);
    ro.v_pred.assign(n, 0.0);
    if (ro.stop_point) return;
    const double w = ro.sampled_v_ro, a = ro.worst_case_decel, h = p.h;
    for (int k = 0; k < n; ++k) {
        ro.v_pred[k] = std::max(0.0, w + (k + 1) * a * h);
        if (ro.lead_kind == LeadKind::av) {
            ro.travel[k] = ro.v_pred[k] * h;
        } else {
            // continuous worst-case braking since the sample taken one slot ago
            ro.travel[k] = braking_distance_in(w, a, (k + 2) * h) - braking_distance_in(w, a, (k + 1) * h);
        }
    }
}

std::vector<ReferenceObject> select_reference_object(const Vehicle& c, const World& w, bool permitted) {
    const auto& p = w.params();
    std::vector<ReferenceObject> refs;
    for (const auto& L : w.leads(c)) {
        ReferenceObject ro;
        ro.target = L.v->id;
        ro.gap = L.gap;
        if (L.v->is_hv()) {
            ro.lead_kind = LeadKind::hv_like;
            ro.sampled_v_ro = L.v->v_boundary_prev;
            ro.worst_case_decel = p.a_hv_min;
        } else {
            ro.lead_kind = LeadKind::av;
            ro.sampled_v_ro = L.v->st.v;
            ro.worst_case_decel = effective_brake_limit(*L.v, p);
        }
        refs.push_back(ro);
    }
    if (!permitted && !w.past_entry(c)) {
        ReferenceObject ro;
        ro.stop_point = true;
        ro.gap = w.dist_to_entry(c);
        ro.lead_kind = LeadKind::av;
        refs.push_back(ro);
    }
    for (auto& r : refs) predict_reference(r, p.horizon_n, p);
    return refs;
}

PlanInput plan_input_for(const Vehicle& c, const World& w) {
    PlanInput in;
    in.v_now = c.st.v;
    in.a_min = effective_brake_limit(c, w.params());
    in.own = c.vhv ? OwnLimit::hv_limited : OwnLimit::av_limited;
    in.refs = select_reference_object(c, w, c.permitted);
    return in;
}

double plan_min_slack(const PlanInput& in, const std::vector<double>& v, const Params& p) {
    double worst = std::numeric_limits<double>::infinity();
    double prev = in.v_now;
    for (size_t k = 0; k < v.size(); ++k) {
        if (v[k] < -1e-12 || v[k] > p.v_max + 1e-12) return -std::numeric_limits<double>::infinity();
        if (v[k] - prev < in.a_min * p.h - 1e-9 || v[k] - prev > p.a_max * p.h + 1e-9)
            return -std::numeric_limits<double>::infinity();
        prev = v[k];
    }
    for (const auto& r : in.refs) {
        double gap = r.gap;
        for (size_t k = 0; k < v.size(); ++k) {
            gap += r.travel[k] - v[k] * p.h;
            const FollowContext ctx{r.lead_kind, in.own};
            worst = std::min(worst, gap - ctl_s_star(ctx, v[k], r.v_pred[k], p));
        }
    }
    return worst;
}

namespace {

struct Search {
    const PlanInput& in;
    const Params& p;
    const PlanObjective& obj;
    int n, g;
    std::vector<double> cur, best;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> gaps;  // per level, per ref
    std::vector<FollowContext> ctx;
    std::vector<double> cap;  // per level, an upper bound on any feasible speed

    // gap_j <= gap_0 + lead travel - v_j h, so v_j must leave that much room for s*
    void compute_caps() {
        cap.assign(n, p.v_max);
        for (size_t r = 0; r < in.refs.size(); ++r) {
            const auto& ro = in.refs[r];
            double room = ro.gap;
            for (int j = 0; j < n; ++j) {
                room += ro.travel[j];
                auto ok = [&](double v) { return room - v * p.h >= ctl_s_star(ctx[r], v, ro.v_pred[j], p) - kGapTol; };
                if (ok(cap[j])) continue;
                double lo = 0, hi = cap[j];
                if (!ok(lo)) {
                    cap[j] = 0;
                    continue;
                }
                for (int it = 0; it < 40 && hi - lo > 1e-9; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (ok(mid) ? lo : hi) = mid;
                }
                cap[j] = hi;
            }
        }
    }

    double cost_of(int k, double v) const {
        if (obj) return obj(k, v);
        const double d = v - p.v_max;
        return d * d;
    }

    // optimistic bound on the remaining default cost
    double bound(int k, double v) const {
        if (obj) return -std::numeric_limits<double>::infinity();
        double s = 0;
        for (int j = k + 1; j < n; ++j) {
            v = std::min({p.v_max, v + p.a_max * p.h, cap[j]});
            s += (v - p.v_max) * (v - p.v_max);
        }
        return s;
    }

    // With one level left, the last speed must beat the incumbent, so it must reach v_need;
    // requirements grow with speed, so checking v_need alone decides the whole level.
    bool last_level_hopeless(int k, double v, double c, const std::vector<double>& g) const {
        if (obj || in.refs.empty()) return false;
        const int j = k + 1;
        const double v_need = p.v_max - std::sqrt(std::max(0.0, best_cost - c));
        if (v_need > std::min({p.v_max, v + p.a_max * p.h, cap[j]})) return true;
        for (size_t r = 0; r < in.refs.size(); ++r) {
            const auto& ro = in.refs[r];
            const double x = std::max(v_need, std::max(0.0, v + in.a_min * p.h));
            if (g[r] + ro.travel[j] - x * p.h < ctl_s_star(ctx[r], x, ro.v_pred[j], p) - kGapTol) return true;
        }
        return false;
    }

    bool feasible_at(int k, double v, std::vector<double>& out) const {
        const auto& prev = gaps[k];
        for (size_t r = 0; r < in.refs.size(); ++r) {
            const auto& ro = in.refs[r];
            const double gnext = prev[r] + ro.travel[k] - v * p.h;
            if (gnext < ctl_s_star(ctx[r], v, ro.v_pred[k], p) - kGapTol) return false;
            out[r] = gnext;
        }
        return true;
    }

    // Braking hardest keeps every later gap largest and every later requirement smallest,
    // so a prefix extends to a feasible sequence iff the braking continuation is feasible.
    bool extendable(int k, double v, const std::vector<double>& g) const {
        for (size_t r = 0; r < in.refs.size(); ++r) {
            const auto& ro = in.refs[r];
            double gap = g[r], u = v;
            for (int j = k + 1; j < n; ++j) {
                u = std::max(0.0, u + in.a_min * p.h);
                gap += ro.travel[j] - u * p.h;
                if (gap < ctl_s_star(ctx[r], u, ro.v_pred[j], p) - kGapTol) return false;
            }
        }
        return true;
    }

    // The DFS's first descent takes the top candidate at every level. Every other sequence is
    // componentwise no faster, so under the default cost a leaf reached this way is the answer.
    bool first_descent() {
        if (obj) return false;
        double prev = in.v_now, c = 0;
        for (int k = 0; k < n; ++k) {
            const double lo = std::max(0.0, prev + in.a_min * p.h);
            const double hi = std::min(p.v_max, prev + p.a_max * p.h);
            const double v = (g == 1 || hi <= lo) ? lo : lo + (hi - lo) * (g - 1) / (g - 1);
            if (v > cap[k]) return false;
            c += cost_of(k, v);
            if (c + bound(k, v) >= best_cost) return false;
            if (!feasible_at(k, v, gaps[k + 1]) || !extendable(k, v, gaps[k + 1])) return false;
            if (k + 2 == n && last_level_hopeless(k, v, c, gaps[k + 1])) return false;
            cur[k] = v;
            prev = v;
        }
        best_cost = c;
        best = cur;
        return true;
    }

    void dfs(int k, double prev, double cost) {
        if (k == n) {
            if (cost < best_cost) best_cost = cost, best = cur;
            return;
        }
        const double lo = std::max(0.0, prev + in.a_min * p.h);
        const double hi = std::min(p.v_max, prev + p.a_max * p.h);
        for (int i = g - 1; i >= 0; --i) {
            const double v = (g == 1 || hi <= lo) ? lo : lo + (hi - lo) * i / (g - 1);
            if (v > cap[k]) continue;
            const double c = cost + cost_of(k, v);
            if (c + bound(k, v) >= best_cost) {
                if (!obj) break;  // the default cost only grows as v drops
                continue;
            }
            if (!feasible_at(k, v, gaps[k + 1]) || !extendable(k, v, gaps[k + 1])) continue;
            if (k + 2 == n && last_level_hopeless(k, v, c, gaps[k + 1])) continue;
            cur[k] = v;
            dfs(k + 1, v, c);
            if (hi <= lo) break;
        }
    }
};

}  // namespace

PlanResult plan(const PlanInput& in, const PathGeometry& path, double s_now, const Params& p,
                const PlanObjective& objective) {
    const int n = p.horizon_n;
    Search S{in, p, objective, n, std::max(1, p.grid_points), std::vector<double>(n), {}, std::numeric_limits<double>::infinity(),
             std::vector<std::vector<double>>(n + 1, std::vector<double>(in.refs.size())), {}, {}};
    for (size_t r = 0; r < in.refs.size(); ++r) {
        S.gaps[0][r] = in.refs[r].gap;
        S.ctx.push_back({in.refs[r].lead_kind, in.own});
    }
    S.compute_caps();

    std::vector<double> fb(n);
    double prev = in.v_now, fb_cost = 0;
    for (int k = 0; k < n; ++k) {
        fb[k] = std::max(0.0, prev + in.a_min * p.h);
        prev = fb[k];
        fb_cost += S.cost_of(k, fb[k]);
    }
    PlanResult res;
    bool fb_ok = plan_min_slack(in, fb, p) >= -kGapTol;
    if (fb_ok) {
        S.best = fb;
        S.best_cost = fb_cost;
    }
    const double fb_best = S.best_cost;
    if (!S.first_descent()) S.dfs(0, in.v_now, 0.0);
    if (S.best.empty()) throw ModelError("infeasible-state", "no speed sequence satisfies the separation constraints");
    res.feasible_by = (fb_ok && S.best_cost == fb_best && S.best == fb) ? PlanResult::By::fallback_brake
                                                                       : PlanResult::By::optimizer;
    res.cost = S.best_cost;
    double s = s_now;
    for (int k = 0; k < n; ++k) {
        res.inputs.push_back({S.best[k], S.best[k] * path.curvature(s)});
        s += S.best[k] * p.h;
    }
    return res;
}

}  // namespace xsim
