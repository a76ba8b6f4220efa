#include "xsim/manager.hpp"

#include <algorithm>
#include <sstream>

#include "xsim/separation.hpp"

namespace xsim {

SignalState SignalState::all_red(size_t n) { return {std::vector<Light>(n, Light::red), std::vector<int>(n, -1)}; }

bool hv_cannot_stop(double d, double v, bool latched, const Params& p) { return !latched && d < s_hv(v, 0.0, p); }

std::set<int> compute_exited(const World& w) {
    std::set<int> out;
    for (const auto& c : w.vehicles) {
        const auto& g = w.model().paths[c.st.path];
        if (c.st.s > g.entry && c.st.s >= g.exit) out.insert(c.id);
    }
    return out;
}

std::set<int> compute_uncertain(const World& w, const std::vector<Light>& prev_colors, const std::set<int>& prev_uncertain) {
    const auto& p = w.params();
    const auto& m = w.model();
    std::set<int> out;
    // max(v_{t-h} + a_max h, v_max) is v_max for every admissible speed
    const double thr = s_hv(p.v_max, 0.0, p);
    for (const auto& c : w.vehicles) {
        if (!c.is_hv() || m.is_right(c.st.path)) continue;
        const auto& g = m.paths[c.st.path];
        if (c.st.s >= g.exit) continue;
        if (prev_colors[c.st.path] == Light::green && w.dist_to_entry(c) < thr) out.insert(c.id);
        else if (prev_uncertain.count(c.id) && !c.stop_latched) out.insert(c.id);
    }
    return out;
}

namespace {

std::vector<int> reserved_paths(const ManagerState& st, const World& w) {
    std::vector<int> paths;
    auto add = [&](const std::set<int>& ids) {
        for (int id : ids)
            if (const Vehicle* v = w.find(id)) paths.push_back(v->st.path);
    };
    add(st.permitted_av);
    add(st.planned_hv);
    add(st.uncertain);
    return paths;
}

bool conflict_free(int path, const std::vector<int>& reserved, const IntersectionModel& m) {
    for (int q : reserved)
        if (m.conflicting(path, q)) return false;
    return true;
}

}  // namespace

ManagerState assign_permissions(const ManagerState& prev, const World& w, const std::vector<Request>& incoming,
                                const std::set<int>& exited, const std::set<int>& uncertain) {
    const auto& m = w.model();
    const auto& p = w.params();
    ManagerState st;
    st.exited = exited;
    st.uncertain = uncertain;
    for (int id : prev.permitted_av)
        if (!exited.count(id) && w.find(id)) st.permitted_av.insert(id);
    for (int id : prev.planned_hv)
        if (!exited.count(id) && w.find(id)) st.planned_hv.insert(id);

    std::vector<Request> pending;
    for (const auto& r : prev.pending)
        if (w.find(r.vehicle) && !exited.count(r.vehicle)) pending.push_back(r);
    for (const auto& r : incoming) pending.push_back(r);

    auto dist_of = [&](int id) {
        const Vehicle* v = w.find(id);
        return w.dist_to_entry(*v);
    };
    std::stable_sort(pending.begin(), pending.end(), [&](const Request& a, const Request& b) {
        const double da = dist_of(a.vehicle), db = dist_of(b.vehicle);
        if (da != db) return da < db;
        if (a.slot != b.slot) return a.slot < b.slot;
        return a.vehicle < b.vehicle;
    });

    std::vector<int> reserved = reserved_paths(st, w);
    for (const auto& r : pending) {
        if (p.mut.disable_conflict_check || conflict_free(r.path, reserved, m)) {
            st.permitted_av.insert(r.vehicle);
            reserved.push_back(r.path);
        } else {
            st.pending.push_back(r);
        }
    }

    // planned HVs: candidates inside A_C on signalled paths, closest first
    std::vector<const Vehicle*> cand;
    for (const auto& c : w.vehicles) {
        if (!c.is_hv() || m.is_right(c.st.path) || st.planned_hv.count(c.id)) continue;
        if (c.st.s >= m.paths[c.st.path].exit || w.dist_to_entry(c) > m.d_c) continue;
        cand.push_back(&c);
    }
    std::stable_sort(cand.begin(), cand.end(), [&](const Vehicle* a, const Vehicle* b) {
        const double da = w.dist_to_entry(*a), db = w.dist_to_entry(*b);
        if (da != db) return da < db;
        return a->id < b->id;
    });
    for (const Vehicle* c : cand) {
        bool ok = conflict_free(c->st.path, reserved, m);
        if (!ok) {
            auto followed = [&](const std::set<int>& ids) {
                for (int id : ids) {
                    const Vehicle* f = w.find(id);
                    if (!f || f->st.path != c->st.path) continue;
                    const double d = f->st.s - c->st.s;  // d(p(c), p(c^f))
                    if (p.mut.flip_follower_sign ? d > 0 : d < 0) return true;
                }
                return false;
            };
            ok = followed(st.permitted_av) || followed(st.uncertain);
        }
        if (ok) {
            st.planned_hv.insert(c->id);
            reserved.push_back(c->st.path);
        }
    }
    return st;
}

SignalState update_signals(const SignalState& prev, const ManagerState& st, const World& w, int slot) {
    const auto& m = w.model();
    const auto& p = w.params();
    const size_t n = m.paths.size();
    std::vector<char> want_green(n, 0), want_amber(n, 0);
    for (const auto& c : w.vehicles) {
        if (!c.is_hv() || m.is_right(c.st.path)) continue;
        const int q = c.st.path;
        if (st.planned_hv.count(c.id)) want_green[q] = 1;
        else if (st.uncertain.count(c.id)) want_amber[q] = 1;
        if (c.st.s < m.paths[q].exit && hv_cannot_stop(w.dist_to_entry(c), c.st.v, c.stop_latched, p)) want_amber[q] = 1;
    }

    SignalState out = prev;
    // paths already lit can only move forward along the cycle
    for (size_t i = 0; i < n; ++i) {
        if (m.is_right(static_cast<int>(i))) continue;
        switch (prev.color[i]) {
            case Light::green:
                if (!want_green[i]) out.color[i] = Light::amber, out.amber_since[i] = slot;
                break;
            case Light::amber:
                if (!want_amber[i]) out.color[i] = Light::red, out.amber_since[i] = -1;
                break;
            case Light::red:
                if (want_amber[i] && !want_green[i]) {
                    std::ostringstream os;
                    os << "protocol conflict: gamma_" << i + 1 << " needs amber while red";
                    throw ModelError("protocol-conflict", os.str());
                }
                break;
        }
    }
    // a red path turns green only when all its conflicting paths are red
    for (size_t i = 0; i < n; ++i) {
        if (m.is_right(static_cast<int>(i)) || prev.color[i] != Light::red || !want_green[i]) continue;
        bool clear = true;
        for (size_t j = 0; j < n && clear; ++j)
            if (m.conflicting(static_cast<int>(i), static_cast<int>(j)) && !m.is_right(static_cast<int>(j)) &&
                out.color[j] != Light::red)
                clear = false;
        if (clear) out.color[i] = Light::green;
    }
    for (size_t i = 0; i < n; ++i) {
        if (out.color[i] == Light::red) continue;
        for (size_t j = 0; j < n; ++j)
            if (m.conflicting(static_cast<int>(i), static_cast<int>(j)) && !m.is_right(static_cast<int>(j)) &&
                out.color[j] != Light::red) {
                std::ostringstream os;
                os << "protocol conflict: gamma_" << i + 1 << " and gamma_" << j + 1 << " both non-red";
                throw ModelError("protocol-conflict", os.str());
            }
    }
    return out;
}

std::string check_reservations(const ManagerState& st, const World& w) {
    std::vector<std::pair<int, int>> members;  // (id, path)
    auto add = [&](const std::set<int>& ids) {
        for (int id : ids)
            if (const Vehicle* v = w.find(id)) members.push_back({id, v->st.path});
    };
    add(st.permitted_av);
    add(st.planned_hv);
    add(st.uncertain);
    for (size_t a = 0; a < members.size(); ++a)
        for (size_t b = a + 1; b < members.size(); ++b)
            if (w.model().conflicting(members[a].second, members[b].second)) {
                std::ostringstream os;
                os << "vehicles " << members[a].first << " (gamma_" << members[a].second + 1 << ") and "
                   << members[b].first << " (gamma_" << members[b].second + 1 << ") hold conflicting paths";
                return os.str();
            }
    return {};
}

std::vector<Policy1Violation> check_policy1(const std::vector<SignalRecord>& trace, const IntersectionModel& m,
                                            const Params& p) {
    std::vector<Policy1Violation> out;
    const size_t n = m.paths.size();
    for (size_t t = 0; t < trace.size(); ++t) {
        const auto& rec = trace[t];
        for (size_t i = 0; i < n; ++i) {
            if (m.is_right(static_cast<int>(i)) || rec.colors[i] == Light::red) continue;
            for (size_t j = i + 1; j < n; ++j)
                if (m.conflicting(static_cast<int>(i), static_cast<int>(j)) && !m.is_right(static_cast<int>(j)) &&
                    rec.colors[j] != Light::red) {
                    std::ostringstream os;
                    os << "gamma_" << i + 1 << " and gamma_" << j + 1 << " simultaneously non-red";
                    out.push_back({rec.slot, os.str()});
                }
        }
        if (t == 0) continue;
        const auto& before = trace[t - 1];
        for (size_t i = 0; i < n; ++i) {
            const Light a = before.colors[i], b = rec.colors[i];
            if (a == b) continue;
            const bool ok = (a == Light::green && b == Light::amber) || (a == Light::amber && b == Light::red) ||
                            (a == Light::red && b == Light::green);
            if (!ok) {
                std::ostringstream os;
                os << "gamma_" << i + 1 << " jumped " << light_name(a) << "->" << light_name(b);
                out.push_back({rec.slot, os.str()});
            }
            if (b == Light::red) {
                for (const auto& hv : rec.hvs)
                    if (hv.path == static_cast<int>(i) && hv_cannot_stop(hv.d, hv.v, hv.latched, p)) {
                        std::ostringstream os;
                        os << "gamma_" << i + 1 << " turned red while HV " << hv.id << " could not stop";
                        out.push_back({rec.slot, os.str()});
                    }
            }
        }
    }
    return out;
}

}  // namespace xsim
