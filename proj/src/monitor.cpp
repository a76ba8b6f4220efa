#include "xsim/monitor.hpp"

#include <algorithm>

#include "xsim/av_planner.hpp"
#include "xsim/separation.hpp"

namespace xsim {

std::vector<Violation> check_safety(const World& w) {
    const auto& m = w.model();
    const auto& p = w.params();
    std::vector<Violation> out;

    std::vector<std::vector<const Vehicle*>> occ(m.areas.size());
    for (const auto& c : w.vehicles)
        for (int a : m.areas_of_path[c.st.path])
            if (m.areas[a].occupies(c.st.path, c.st.s)) occ[a].push_back(&c);
    for (size_t a = 0; a < occ.size(); ++a) {
        const auto& list = occ[a];
        for (size_t i = 0; i < list.size(); ++i)
            for (size_t j = i + 1; j < list.size(); ++j) {
                const Vehicle& x = *list[i];
                const Vehicle& y = *list[j];
                if (x.st.path == y.st.path || w.frame_gap(x, y)) continue;
                const Vec2 c = m.areas[a].center;
                const double dx = dist({x.st.x, x.st.y}, c), dy = dist({y.st.x, y.st.y}, c);
                out.push_back({w.slot, 0, "area-co-occupancy", {x.id, y.id}, std::max(dx, dy), m.areas[a].radius});
            }
    }

    for (const auto& c : w.vehicles) {
        for (const auto& L : w.leads(c)) {
            if (L.gap < p.s_min) {
                out.push_back({w.slot, 0, c.is_hv() ? "hv-separation" : "av-separation", {c.id, L.v->id}, L.gap, p.s_min});
                continue;
            }
            if (!c.is_hv()) continue;
            const auto in_zone = [&](const Vehicle& v) {
                const auto r = m.region_on_path(v.st.path, v.st.s);
                return r == Region::in_a_h || r == Region::in_a_i;
            };
            if (!in_zone(c) || !in_zone(*L.v)) continue;
            const double req = s_hv(c.st.v, L.v->st.v, p);
            if (L.gap < req - 1e-9) out.push_back({w.slot, 0, "hv-separation", {c.id, L.v->id}, L.gap, req});
        }
    }
    return out;
}

std::vector<Violation> check_av_separation(const World& w) {
    const auto& p = w.params();
    std::vector<Violation> out;
    for (const auto& c : w.vehicles) {
        if (!c.is_av()) continue;
        const auto refs = select_reference_object(c, w, c.permitted);
        const FollowContext base{LeadKind::av, c.vhv ? OwnLimit::hv_limited : OwnLimit::av_limited};
        for (const auto& r : refs) {
            FollowContext ctx = base;
            ctx.lead = r.lead_kind;
            const double req = s_star(ctx, c.st.v, r.sampled_v_ro, p);
            if (r.gap < req - 1e-9) {
                std::vector<int> ids{c.id};
                if (!r.stop_point) ids.push_back(r.target);
                out.push_back({w.slot, 0, "av-separation", ids, r.gap, req});
            }
        }
    }
    return out;
}

}  // namespace xsim
