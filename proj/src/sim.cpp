#include "xsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <mutex>
#include <sstream>

#include "json.hpp"
#include "xsim/av_planner.hpp"
#include "xsim/separation.hpp"

namespace xsim {

using nlohmann::json;

bool operator==(const Params& a, const Params& b) {
    return a.h == b.h && a.micro_steps == b.micro_steps && a.v_max == b.v_max && a.a_hv_min == b.a_hv_min &&
           a.a_av_min == b.a_av_min && a.a_max == b.a_max && a.t_react == b.t_react && a.s_min == b.s_min &&
           a.rho_min == b.rho_min && a.horizon_n == b.horizon_n && a.grid_points == b.grid_points && a.d_c == b.d_c &&
           a.d_h == b.d_h && a.hv_anticipation == b.hv_anticipation && a.hv_epsilon == b.hv_epsilon;
}

bool operator==(const Scenario& a, const Scenario& b) {
    return a.name == b.name && a.geometry == b.geometry && a.params == b.params && a.arrivals == b.arrivals &&
           a.stochastic == b.stochastic && a.horizon == b.horizon && a.hv_mode == b.hv_mode;
}

Rng substream(uint64_t seed, const std::string& name) {
    uint64_t hsh = 1469598103934665603ull;  // FNV-1a
    for (unsigned char ch : name) hsh = (hsh ^ ch) * 1099511628211ull;
    std::seed_seq sq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(hsh),
                     static_cast<uint32_t>(hsh >> 32)};
    return Rng(sq);
}

std::shared_ptr<const IntersectionModel> cached_model(const GeometrySpec& spec, const Params& p) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const IntersectionModel>> cache;
    std::ostringstream key;
    key.precision(17);
    for (const auto& l : spec.lanes)
        for (int c : l) key << c << ',';
    key << spec.half_width << ',' << spec.lane_width << ',' << spec.right_radius << ',' << spec.left_radius << ','
        << spec.area_radius << ',' << spec.conflict_width << ',' << spec.exit_tail << '|' << p.h << ',' << p.v_max
        << ',' << p.a_hv_min << ',' << p.a_av_min << ',' << p.a_max << ',' << p.t_react << ',' << p.s_min << ','
        << p.rho_min << ',' << p.d_c << ',' << p.d_h;
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(key.str());
    if (it != cache.end()) return it->second;
    auto m = std::make_shared<const IntersectionModel>(build_intersection(spec, p));
    cache.emplace(key.str(), m);
    return m;
}

void validate_scenario(const Scenario& sc) {
    const auto& p = sc.params;
    auto fail = [](const std::string& msg) { throw ModelError("invariant", msg); };
    if (!(p.h > 0) || p.micro_steps < 1) fail("slot length and micro-step count must be positive");
    if (!(p.v_max > 0) || !(p.a_max > 0) || !(p.a_hv_min < 0) || !(p.a_av_min < 0)) fail("speed and acceleration bounds have wrong signs");
    if (p.a_av_min > p.a_hv_min) fail("AV braking limit must be at least as strong as the HV limit");
    if (p.horizon_n < 1 || p.grid_points < 1) fail("planner horizon and grid must be positive");
    if (sc.horizon < 1) fail("horizon must be at least one slot");
    const auto m = cached_model(sc.geometry, p);
    const int n = static_cast<int>(m->paths.size());
    for (const auto& a : sc.arrivals) {
        if (a.path < 0 || a.path >= n) fail("arrival on unknown path gamma_" + std::to_string(a.path + 1));
        if (a.v0 < 0 || a.v0 > p.v_max) fail("arrival speed outside [0, v_max]");
        if (a.slot < 0) fail("arrival slot must be non-negative");
    }
    if (const auto& s = sc.stochastic) {
        if (s->rate < 0) fail("arrival rate must be non-negative");
        if (s->hv_fraction < 0 || s->hv_fraction > 1) fail("HV fraction must lie in [0, 1]");
        if (s->v0_min < 0 || s->v0_max > p.v_max || s->v0_min > s->v0_max) fail("arrival speed range outside [0, v_max]");
        for (int q : s->paths)
            if (q < 0 || q >= n) fail("stochastic arrivals on unknown path gamma_" + std::to_string(q + 1));
    }
}

double free_flow_time(double length, double v0, const Params& p) {
    const double t_acc = (p.v_max - v0) / p.a_max;
    const double d_acc = 0.5 * (v0 + p.v_max) * t_acc;
    if (d_acc >= length) return (-v0 + std::sqrt(v0 * v0 + 2 * p.a_max * length)) / p.a_max;
    return t_acc + (length - d_acc) / p.v_max;
}

Metrics compute_metrics(const std::vector<ExitRecord>& exits, int spawned, int queued, double sim_seconds) {
    Metrics m;
    m.spawned = spawned;
    m.exited = static_cast<int>(exits.size());
    m.queued_unspawned = queued;
    m.sim_seconds = sim_seconds;
    m.throughput = sim_seconds > 0 ? exits.size() * 3600.0 / sim_seconds : 0.0;
    double sum = 0;
    for (const auto& e : exits) sum += (e.exit_time - e.spawn_time) - e.free_flow;
    m.mean_delay = exits.empty() ? 0.0 : sum / exits.size();
    m.in_transit = spawned - m.exited;
    return m;
}

namespace {

enum EventKind { ev_spawn, ev_grant, ev_color, ev_plan, ev_state, ev_violation, ev_exit };
const char* event_name(int k) {
    static const char* names[] = {"spawn", "grant", "color-change", "plan", "state-sample", "violation", "exit"};
    return names[k];
}

struct Event {
    int slot, micro, kind, vehicle;
    json payload;
};

std::vector<Arrival> draw_arrivals(const Scenario& sc, const IntersectionModel& m, Rng& rng) {
    std::vector<Arrival> out = sc.arrivals;
    if (sc.stochastic) {
        const auto& s = *sc.stochastic;
        std::vector<int> paths = s.paths;
        if (paths.empty())
            for (size_t q = 0; q < m.paths.size(); ++q) paths.push_back(static_cast<int>(q));
        // one sub-stream per path keeps each path's arrivals independent of the horizon
        std::vector<uint64_t> path_seeds;
        for (size_t i = 0; i < paths.size(); ++i) path_seeds.push_back(rng());
        for (size_t i = 0; i < paths.size(); ++i) {
            if (s.rate <= 0) break;
            const int q = paths[i];
            Rng prng(path_seeds[i]);
            std::exponential_distribution<double> gap(s.rate);
            std::uniform_real_distribution<double> U(0.0, 1.0);
            double t = 0;
            for (;;) {
                t += gap(prng);
                const int slot = static_cast<int>(std::floor(t / sc.params.h));
                if (slot >= sc.horizon) break;
                Arrival a;
                a.slot = slot;
                a.path = q;
                a.kind = U(prng) < s.hv_fraction ? Kind::hv : Kind::av;
                a.v0 = s.v0_min + (s.v0_max - s.v0_min) * U(prng);
                out.push_back(a);
            }
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Arrival& a, const Arrival& b) { return a.slot < b.slot; });
    return out;
}

json violation_json(const Violation& v) {
    return {{"type", v.type}, {"vehicles", v.vehicles}, {"measured", v.measured}, {"required", v.required}};
}

class Runner {
public:
    Runner(const Scenario& sc, uint64_t seed, const RunOptions& opt)
        : sc_(sc), p_(sc.params), opt_(opt), model_(cached_model(sc.geometry, sc.params)), w_(*model_, p_),
          arr_rng_(substream(seed, "arrivals")), hv_rng_(substream(seed, "hv")) {
        const size_t n = model_->paths.size();
        sig_ = SignalState::all_red(n);
        w_.lights = sig_.color;
        prev_colors_ = sig_.color;
        queues_.resize(n);
        arrivals_ = draw_arrivals(sc_, *model_, arr_rng_);
    }

    RunResult go() {
        for (int t = 0; t < sc_.horizon; ++t) {
            w_.slot = t;
            int micro = 0;
            try {
                boundary(t);
                for (micro = 1; micro <= p_.micro_steps; ++micro) micro_step(t, micro);
            } catch (const ModelError& e) {
                rep_.fatal_code = e.code;
                std::ostringstream os;
                os << "slot " << t << " micro-step " << micro << ": " << e.what();
                rep_.fatal_message = os.str();
                emit(t, micro, ev_violation, -1, {{"type", "fatal"}, {"code", e.code}, {"message", rep_.fatal_message}});
                slot_row(t);
                break;
            }
            slot_row(t);
            if (opt_.stop_on_violation && !rep_.violations.empty()) break;
        }
        return finish();
    }

private:
    const Scenario& sc_;
    const Params& p_;
    RunOptions opt_;
    std::shared_ptr<const IntersectionModel> model_;
    World w_;
    Rng arr_rng_, hv_rng_;

    SignalState sig_;
    std::vector<Light> prev_colors_;
    ManagerState ms_;
    std::vector<Request> incoming_;
    std::vector<Arrival> arrivals_;
    size_t next_arrival_ = 0;
    std::vector<std::deque<Arrival>> queues_;
    int next_id_ = 1;
    int spawned_ = 0;
    std::map<int, double> cmd_;  // committed AV speed for the current slot
    std::vector<ExitRecord> exits_;
    std::map<int, ExitRecord> live_;
    int stops_hv_ = 0, stops_av_ = 0;

    std::vector<Event> events_;
    std::ostringstream csv_;
    RunResult res_;
    SafetyReport& rep_ = res_.report;

    void emit(int slot, int micro, int kind, int vehicle, json payload) {
        if (!opt_.trace) return;
        events_.push_back({slot, micro, kind, vehicle, std::move(payload)});
    }

    void add_violation(Violation v, int t, int micro) {
        v.slot = t;
        v.micro = micro;
        emit(t, micro, ev_violation, v.vehicles.empty() ? -1 : v.vehicles.front(), violation_json(v));
        rep_.violations.push_back(std::move(v));
    }

    void boundary(int t) {
        if (t > 0)
            for (auto& v : check_av_separation(w_)) add_violation(v, t, 0);

        const auto exited = compute_exited(w_);
        const auto unc = compute_uncertain(w_, prev_colors_, ms_.uncertain);
        ms_ = assign_permissions(ms_, w_, incoming_, exited, unc);
        incoming_.clear();
        for (auto& c : w_.vehicles) {
            if (!c.is_av()) continue;
            const bool now = ms_.permitted_av.count(c.id) > 0;
            if (now && !c.permitted) emit(t, 0, ev_grant, c.id, {{"path", c.st.path + 1}, {"request_slot", c.request_slot}});
            c.permitted = now;
        }
        if (opt_.check_invariants) {
            const auto msg = check_reservations(ms_, w_);
            if (!msg.empty()) rep_.reservation_conflicts.push_back("slot " + std::to_string(t) + ": " + msg);
        }

        const SignalState next = update_signals(sig_, ms_, w_, t);
        for (size_t i = 0; i < next.color.size(); ++i)
            if (next.color[i] != sig_.color[i])
                emit(t, 0, ev_color, -1, {{"path", i + 1}, {"from", light_name(sig_.color[i])}, {"to", light_name(next.color[i])}});
        sig_ = next;
        w_.lights = sig_.color;
        prev_colors_ = sig_.color;
        if (opt_.check_invariants) {
            SignalRecord rec;
            rec.slot = t;
            rec.colors = sig_.color;
            for (const auto& c : w_.vehicles) {
                if (!c.is_hv() || model_->is_right(c.st.path) || exited.count(c.id)) continue;
                rec.hvs.push_back({c.id, c.st.path, w_.dist_to_entry(c), c.st.v, c.stop_latched});
            }
            res_.signals.push_back(std::move(rec));
        }

        std::erase_if(w_.vehicles, [&](const Vehicle& c) { return exited.count(c.id) > 0; });

        spawn(t);
        w_.compute_vhv();

        cmd_.clear();
        for (auto& c : w_.vehicles) {
            if (!c.is_av()) continue;
            const PlanInput in = plan_input_for(c, w_);
            const PlanResult r = plan(in, model_->paths[c.st.path], c.st.s, p_);
            const double v_cmd = r.inputs.front().v_cmd;
            if (r.feasible_by == PlanResult::By::fallback_brake) ++rep_.plans_fallback;
            else ++rep_.plans_optimizer;
            if (c.vhv && v_cmd - c.st.v < p_.a_hv_min * p_.h - 1e-9) {
                std::ostringstream os;
                os << "slot " << t << ": VHV " << c.id << " commanded " << (v_cmd - c.st.v) / p_.h << " m/s^2";
                rep_.vhv_limit.push_back(os.str());
            }
            cmd_[c.id] = v_cmd;
            if (opt_.trace)
                emit(t, 0, ev_plan, c.id,
                 {{"v_cmd", v_cmd}, {"omega", r.inputs.front().omega}, {"vhv", c.vhv}, {"permitted", c.permitted},
                  {"by", r.feasible_by == PlanResult::By::optimizer ? "optimizer" : "fallback-brake"},
                  {"refs", in.refs.size()}});
        }
        // zero-order hold: the committed speed applies from the boundary on, so HVs perceive it immediately
        for (auto& c : w_.vehicles)
            if (c.is_av()) {
                c.st.v_prev = c.st.v;
                c.st.v = cmd_.at(c.id);
            }
        for (auto& c : w_.vehicles) {
            c.v_boundary_prev = c.st.v;
            if (opt_.state_samples)
                emit(t, 0, ev_state, c.id,
                     {{"kind", kind_name(c.kind)}, {"path", c.st.path + 1}, {"s", c.st.s}, {"v", c.st.v}, {"x", c.st.x},
                      {"y", c.st.y}, {"theta", c.st.theta}, {"vhv", c.vhv}, {"permitted", c.permitted},
                      {"latched", c.stop_latched}, {"region", region_name(model_->region_on_path(c.st.path, c.st.s))}});
        }
    }

    // Entry hypothesis of the safety argument for a vehicle placed at the edge of A_C.
    bool admissible(const Vehicle& n) {
        std::vector<char> old_vhv;
        for (const auto& c : w_.vehicles) old_vhv.push_back(c.vhv);
        w_.vehicles.push_back(n);
        w_.compute_vhv();
        bool ok = true;
        auto av_ok = [&](const Vehicle& c) {
            const PlanInput in = plan_input_for(c, w_);
            for (const auto& r : in.refs)
                if (r.gap < s_star({r.lead_kind, in.own}, c.st.v, r.sampled_v_ro, p_)) return false;
            try {
                plan(in, model_->paths[c.st.path], c.st.s, p_);
            } catch (const ModelError&) {
                return false;
            }
            return true;
        };
        const Vehicle& me = w_.vehicles.back();
        if (me.is_av()) {
            ok = av_ok(me);
        } else {
            for (const auto& L : w_.leads(me))
                ok = ok && L.gap >= s_hv(me.st.v, std::max(0.0, L.v->st.v - p_.hv_anticipation), p_) + p_.hv_epsilon;
        }
        for (const auto& F : w_.followers(me)) {
            if (!ok) break;
            if (F.v->is_hv()) ok = F.gap >= s_hv(F.v->st.v, me.st.v, p_) + p_.hv_epsilon;
            else ok = av_ok(*F.v);
        }
        for (size_t i = 0; ok && i < old_vhv.size(); ++i)
            if (w_.vehicles[i].vhv && !old_vhv[i]) ok = av_ok(w_.vehicles[i]);
        if (!ok) {
            w_.vehicles.pop_back();
            for (size_t i = 0; i < old_vhv.size(); ++i) w_.vehicles[i].vhv = old_vhv[i];
        }
        return ok;
    }

    void spawn(int t) {
        while (next_arrival_ < arrivals_.size() && arrivals_[next_arrival_].slot <= t) {
            const auto& a = arrivals_[next_arrival_++];
            queues_[a.path].push_back(a);
        }
        for (auto& q : queues_) {
            if (q.empty()) continue;
            const Arrival a = q.front();
            const auto& g = model_->paths[a.path];
            Vehicle n;
            n.id = next_id_;
            n.kind = a.kind;
            n.st.path = a.path;
            n.st.s = 0;
            n.st.v = n.st.v_prev = n.v_boundary_prev = a.v0;
            const Pose ps = g.pose(0);
            n.st.x = ps.x, n.st.y = ps.y, n.st.theta = ps.theta;
            n.spawn_time = t * p_.h;
            n.arrival_time = a.slot * p_.h;
            n.free_flow_time = free_flow_time(g.exit, a.v0, p_);
            if (!admissible(n)) continue;
            q.pop_front();
            ++next_id_;
            ++spawned_;
            Vehicle& c = w_.vehicles.back();
            live_[c.id] = {c.id, c.kind, c.spawn_time, 0, c.free_flow_time};
            emit(t, 0, ev_spawn, c.id,
                 {{"kind", kind_name(c.kind)}, {"path", a.path + 1}, {"v0", a.v0}, {"arrival_slot", a.slot}});
            if (c.is_av()) {
                c.requested = true;
                c.request_slot = t;
                incoming_.push_back({c.id, c.st.path, t});
            }
        }
    }

    void micro_step(int t, int micro) {
        const double dt = p_.delta();
        std::vector<HvDecision> dec(w_.vehicles.size());
        for (size_t i = 0; i < w_.vehicles.size(); ++i)
            if (w_.vehicles[i].is_hv()) dec[i] = hv_decide_step(w_.vehicles[i], w_, sc_.hv_mode, hv_rng_);

        for (size_t i = 0; i < w_.vehicles.size(); ++i) {
            Vehicle& c = w_.vehicles[i];
            const auto& g = model_->paths[c.st.path];
            const double s0 = c.st.s;
            if (c.is_hv()) {
                const HvDecision& d = dec[i];
                if (d.rules_infeasible) ++rep_.rules_infeasible;
                c.st.s += hv_micro_travel(c.st.v, d.v_next, dt, p_.a_hv_min);
                c.st.v_prev = c.st.v;
                c.st.v = d.v_next;
            } else {
                const double v = cmd_.at(c.id);
                c.st.s += v * dt;
                c.st.v = v;
            }
            const Pose ps = g.pose(std::min(c.st.s, g.length));
            c.st.x = ps.x, c.st.y = ps.y, c.st.theta = ps.theta;

            if (s0 < g.entry && c.st.s >= g.entry) {
                bool bad = false;
                if (c.is_av()) bad = !c.permitted;
                else if (model_->is_right(c.st.path)) bad = !dec[i].gate_open;
                else bad = dec[i].latch;
                if (bad) add_violation({t, micro, "entry-without-right", {c.id}, c.st.s - g.entry, 0.0}, t, micro);
            }
            if (c.is_hv()) c.stop_latched = dec[i].latch && c.st.s < g.entry;
            if (s0 < g.exit && c.st.s >= g.exit) {
                const double when = t * p_.h + micro * dt;
                auto& rec = live_.at(c.id);
                rec.exit_time = when;
                exits_.push_back(rec);
                live_.erase(c.id);
                emit(t, micro, ev_exit, c.id,
                     {{"path", c.st.path + 1}, {"time", when}, {"delay", (when - rec.spawn_time) - rec.free_flow}});
            }
            if (!c.halted && c.st.v < 0.1) {
                c.halted = true;
                ++c.stops;
                ++(c.is_hv() ? stops_hv_ : stops_av_);
            } else if (c.halted && c.st.v > 0.5) {
                c.halted = false;
            }
        }
        for (auto& v : check_safety(w_)) add_violation(v, t, micro);
    }

    void slot_row(int t) {
        if (t == 0)
            csv_ << "slot,time,vehicles,hv,av,vhv,permitted_av,planned_hv,uncertain,pending,non_red,queued,exits,violations\n";
        int hv = 0, av = 0, vhv = 0, non_red = 0, queued = 0;
        for (const auto& c : w_.vehicles) (c.is_hv() ? hv : av)++, vhv += c.vhv;
        for (Light l : sig_.color) non_red += l != Light::red;
        for (const auto& q : queues_) queued += static_cast<int>(q.size());
        csv_ << t << ',' << t * p_.h << ',' << w_.vehicles.size() << ',' << hv << ',' << av << ',' << vhv << ','
             << ms_.permitted_av.size() << ',' << ms_.planned_hv.size() << ',' << ms_.uncertain.size() << ','
             << ms_.pending.size() << ',' << non_red << ',' << queued << ',' << exits_.size() << ','
             << rep_.violations.size() << '\n';
    }

    RunResult finish() {
        int queued = static_cast<int>(arrivals_.size() - next_arrival_);
        for (const auto& q : queues_) queued += static_cast<int>(q.size());
        rep_.metrics = compute_metrics(exits_, spawned_, queued, sc_.horizon * p_.h);
        rep_.metrics.stops_hv = stops_hv_;
        rep_.metrics.stops_av = stops_av_;
        rep_.live = queued == 0 && rep_.metrics.in_transit == 0;
        if (opt_.check_invariants) rep_.policy1 = check_policy1(res_.signals, *model_, p_);

        std::stable_sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
            return std::tie(a.slot, a.micro, a.kind, a.vehicle) < std::tie(b.slot, b.micro, b.kind, b.vehicle);
        });
        std::string out;
        for (const auto& e : events_) {
            json j = {{"slot", e.slot}, {"micro", e.micro}, {"t", e.slot * p_.h + e.micro * p_.delta()},
                      {"event", event_name(e.kind)}};
            if (e.vehicle >= 0) j["vehicle"] = e.vehicle;
            for (auto it = e.payload.begin(); it != e.payload.end(); ++it) j[it.key()] = it.value();
            out += j.dump();
            out += '\n';
        }
        res_.trace = std::move(out);
        res_.metrics = csv_.str();
        return std::move(res_);
    }
};

}  // namespace

std::string report_json(const SafetyReport& r, const Scenario& sc, uint64_t seed) {
    json v = json::array();
    for (const auto& x : r.violations) {
        json j = violation_json(x);
        j["slot"] = x.slot;
        j["micro"] = x.micro;
        v.push_back(j);
    }
    json p1 = json::array();
    for (const auto& x : r.policy1) p1.push_back({{"slot", x.slot}, {"what", x.what}});
    const Metrics& m = r.metrics;
    json j = {{"scenario", sc.name},
              {"seed", seed},
              {"horizon", sc.horizon},
              {"hv_mode", hv_mode_name(sc.hv_mode)},
              {"safe", r.safe()},
              {"violations", v},
              {"reservation_conflicts", r.reservation_conflicts},
              {"policy1", p1},
              {"vhv_limit", r.vhv_limit},
              {"rules_infeasible", r.rules_infeasible},
              {"plans", {{"optimizer", r.plans_optimizer}, {"fallback_brake", r.plans_fallback}}},
              {"live", r.live},
              {"metrics",
               {{"spawned", m.spawned},
                {"exited", m.exited},
                {"queued_unspawned", m.queued_unspawned},
                {"in_transit", m.in_transit},
                {"sim_seconds", m.sim_seconds},
                {"throughput_per_hour", m.throughput},
                {"mean_delay", m.mean_delay},
                {"stops_hv", m.stops_hv},
                {"stops_av", m.stops_av}}}};
    if (!r.fatal_code.empty()) j["fatal"] = {{"code", r.fatal_code}, {"message", r.fatal_message}};
    return j.dump(2) + "\n";
}

RunResult run(const Scenario& sc, uint64_t seed, const RunOptions& opt) {
    validate_scenario(sc);
    Runner r(sc, seed, opt);
    return r.go();
}

}  // namespace xsim
