#include "xsim/world.hpp"

#include <algorithm>

namespace xsim {

const char* kind_name(Kind k) { return k == Kind::hv ? "HV" : "AV"; }

const char* light_name(Light l) {
    switch (l) {
        case Light::green: return "g";
        case Light::amber: return "a";
        case Light::red: return "r";
    }
    return "?";
}

World::World(const IntersectionModel& m, const Params& p) : model_(&m), params_(&p) {
    const size_t n = m.paths.size();
    lights.assign(n, Light::red);
    related_.assign(n, {});
    for (size_t i = 0; i < n; ++i) {
        related_[i].push_back(static_cast<int>(i));
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const Corridor& c = m.corridor[i][j];
            if (c.prefix > 0 || c.merge) related_[i].push_back(static_cast<int>(j));
        }
    }
    related_rev_.assign(n, {});
    for (size_t i = 0; i < n; ++i)
        for (int j : related_[i]) related_rev_[j].push_back(static_cast<int>(i));
}

Vehicle* World::find(int id) {
    auto it = std::lower_bound(vehicles.begin(), vehicles.end(), id, [](const Vehicle& v, int k) { return v.id < k; });
    return (it != vehicles.end() && it->id == id) ? &*it : nullptr;
}

const Vehicle* World::find(int id) const { return const_cast<World*>(this)->find(id); }

std::optional<double> World::frame_gap(int pf, double sf, int pl, double sl) const {
    if (pf == pl) return sl - sf;
    const Corridor& c = model_->corridor[pf][pl];
    if (c.prefix > 0) {
        // related while the rear vehicle is still in the shared in-lane
        if (std::min(sf, sl) < c.prefix) return sl - sf;
        return std::nullopt;
    }
    if (c.merge) {
        const bool f_in = sf >= model_->paths[pf].entry || c.self_sees_upstream;
        const bool l_in = sl >= model_->paths[pl].entry || c.other_sees_upstream;
        if (!f_in || !l_in) return std::nullopt;
        return (sl - c.m_other) - (sf - c.m_self);
    }
    return std::nullopt;
}

Neighbor World::nearest_lead_at(int path, double s, int exclude_id) const {
    Neighbor best;
    for (const auto& v : vehicles) {
        if (v.id == exclude_id) continue;
        const int q = v.st.path;
        if (std::find(related_[path].begin(), related_[path].end(), q) == related_[path].end()) continue;
        auto g = frame_gap(path, s, q, v.st.s);
        // side by side in the frame: the older vehicle counts as the lead
        if (!g || *g < 0 || (*g == 0 && v.id > exclude_id)) continue;
        if (!best || *g < best.gap || (*g == best.gap && v.id < best.v->id)) best = Neighbor{&v, *g};
    }
    return best;
}

std::vector<Neighbor> World::leads_at(int path, double s, int exclude_id) const {
    const auto& rel = related_[path];
    std::vector<Neighbor> best(rel.size());
    for (const auto& v : vehicles) {
        if (v.id == exclude_id) continue;
        const auto it = std::find(rel.begin(), rel.end(), v.st.path);
        if (it == rel.end()) continue;
        auto g = frame_gap(path, s, v.st.path, v.st.s);
        if (!g || *g < 0 || (*g == 0 && v.id > exclude_id)) continue;
        Neighbor& b = best[it - rel.begin()];
        if (!b || *g < b.gap || (*g == b.gap && v.id < b.v->id)) b = Neighbor{&v, *g};
    }
    std::vector<Neighbor> out;
    for (const auto& b : best)
        if (b) out.push_back(b);
    return out;
}

std::vector<Neighbor> World::followers_at(int path, double s, int exclude_id) const {
    const auto& rel = related_[path];
    std::vector<Neighbor> best(rel.size());
    for (const auto& v : vehicles) {
        if (v.id == exclude_id) continue;
        const auto it = std::find(rel.begin(), rel.end(), v.st.path);
        if (it == rel.end()) continue;
        auto g = frame_gap(v.st.path, v.st.s, path, s);
        if (!g || *g < 0 || (*g == 0 && v.id < exclude_id)) continue;
        Neighbor& b = best[it - rel.begin()];
        if (!b || *g < b.gap || (*g == b.gap && v.id > b.v->id)) b = Neighbor{&v, *g};
    }
    std::vector<Neighbor> out;
    for (const auto& b : best)
        if (b) out.push_back(b);
    return out;
}

Neighbor World::nearest_follower_at(int path, double s, int exclude_id) const {
    Neighbor best;
    for (const auto& v : vehicles) {
        if (v.id == exclude_id) continue;
        const int q = v.st.path;
        if (std::find(related_[path].begin(), related_[path].end(), q) == related_[path].end()) continue;
        auto g = frame_gap(q, v.st.s, path, s);
        if (!g || *g < 0 || (*g == 0 && v.id < exclude_id)) continue;
        if (!best || *g < best.gap || (*g == best.gap && v.id < best.v->id)) best = Neighbor{&v, *g};
    }
    return best;
}

bool World::potential_follower(const Vehicle& y, const Vehicle& x) const {
    const int py = y.st.path, px = x.st.path;
    const bool behind = y.st.s < x.st.s || (y.st.s == x.st.s && y.id > x.id);
    if (py == px) return behind;
    const Corridor& c = model_->corridor[py][px];
    if (c.prefix > 0) return y.st.s < c.prefix && behind;
    if (c.merge) {
        if (y.st.s < c.m_self) return true;
        return (y.st.s - c.m_self) < (x.st.s - c.m_other);
    }
    return false;
}

// Least fixpoint, propagated outwards from the HVs: an AV becomes a VHV once some HV-limited
// vehicle is its potential follower.
void World::compute_vhv() {
    std::vector<std::vector<size_t>> on_path(related_.size());
    std::vector<size_t> work;
    for (size_t i = 0; i < vehicles.size(); ++i) {
        vehicles[i].vhv = false;
        on_path[vehicles[i].st.path].push_back(i);
        if (vehicles[i].is_hv()) work.push_back(i);
    }
    while (!work.empty()) {
        const Vehicle& y = vehicles[work.back()];
        work.pop_back();
        for (int px : related_rev_[y.st.path])
            for (size_t k : on_path[px]) {
                Vehicle& x = vehicles[k];
                if (!x.is_av() || x.vhv || x.id == y.id || !potential_follower(y, x)) continue;
                x.vhv = true;
                work.push_back(k);
            }
    }
}

}  // namespace xsim
