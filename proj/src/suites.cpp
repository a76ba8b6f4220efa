#include "xsim/suites.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "xsim/av_planner.hpp"
#include "xsim/kinematics.hpp"
#include "xsim/separation.hpp"

namespace xsim {

const char* formula_name(Formula f) {
    switch (f) {
        case Formula::s_hv: return "s_hv";
        case Formula::av_av: return "s_av^av";
        case Formula::hv_av: return "s_hv^av";
        case Formula::hv_hv: return "s_hv^hv";
        case Formula::av_hv: return "s_av^hv";
    }
    return "?";
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

// Exact piecewise motion of a follower/lead pair. Within a step both move with constant
// acceleration until they stop; the gap minimum of each sub-piece is found analytically.
struct Body {
    double x = 0, v = 0;
};

double advance_pair(Body& f, Body& l, double af, double al, double dt) {
    double g = l.x - f.x;
    double worst = g;
    double t = 0;
    while (t < dt - 1e-15) {
        double end = dt;
        if (af < 0 && f.v > 0) end = std::min(end, t + f.v / -af);
        if (al < 0 && l.v > 0) end = std::min(end, t + l.v / -al);
        const double ea = (af < 0 && f.v <= 0) ? 0.0 : af;
        const double eb = (al < 0 && l.v <= 0) ? 0.0 : al;
        const double T = end - t;
        const double dv = l.v - f.v, da = eb - ea;
        if (da > 0) {
            const double ts = -dv / da;
            if (ts > 0 && ts < T) worst = std::min(worst, g + dv * ts + 0.5 * da * ts * ts);
        }
        f.x += f.v * T + 0.5 * ea * T * T;
        l.x += l.v * T + 0.5 * eb * T * T;
        f.v = std::max(0.0, f.v + ea * T);
        l.v = std::max(0.0, l.v + eb * T);
        if (end < dt && af < 0 && f.v < 1e-12) f.v = 0;
        if (end < dt && al < 0 && l.v < 1e-12) l.v = 0;
        g = l.x - f.x;
        worst = std::min(worst, g);
        t = end;
    }
    return worst;
}

struct Episode {
    Formula f;
    double u, w;
    bool worst_lead;
    double switch_time;  // random lead profile until this time, then full braking
};

double run_episode(const Episode& e, const Params& p, Rng& rng) {
    const double h = p.h, dt = h / 10.0;
    const int r_slots = static_cast<int>(std::lround(p.t_react / h));
    const bool av_follower = e.f != Formula::s_hv;
    const bool hv_limited = e.f == Formula::hv_hv || e.f == Formula::av_hv;
    const bool av_lead = e.f == Formula::av_av || e.f == Formula::av_hv;
    const double lead_brake = av_lead ? p.a_av_min : p.a_hv_min;

    double gap0 = 0;
    switch (e.f) {
        case Formula::s_hv: gap0 = ctl_s_hv(e.u, e.w, p); break;
        case Formula::av_av: gap0 = ctl_s_star({LeadKind::av, OwnLimit::av_limited}, e.u, e.w, p); break;
        case Formula::hv_av: gap0 = ctl_s_star({LeadKind::hv_like, OwnLimit::av_limited}, e.u, e.w, p); break;
        case Formula::hv_hv: gap0 = ctl_s_star({LeadKind::hv_like, OwnLimit::hv_limited}, e.u, e.w, p); break;
        case Formula::av_hv: gap0 = ctl_s_star({LeadKind::av, OwnLimit::hv_limited}, e.u, e.w, p); break;
    }

    std::uniform_real_distribution<double> U(0.0, 1.0);
    Body F{0.0, e.u}, L{gap0, e.w};
    if (!av_lead && e.f != Formula::s_hv) {
        // e.w is the stale sample from one slot ago; the lead may already have slowed
        const double lo = std::max(0.0, e.w + p.a_hv_min * h), hi = std::min(p.v_max, e.w + p.a_max * h);
        L.v = e.worst_lead ? lo : lo + (hi - lo) * U(rng);
    }
    double worst = gap0;
    double al_rand = 0;
    for (int step = 0; step < 4000; ++step) {
        const double t = step * dt;
        const bool slot_start = step % 10 == 0;
        const int k = step / 10;
        const bool braking = e.worst_lead || t >= e.switch_time;

        double af = 0;
        if (av_follower) {
            if (slot_start) {
                const double target = hv_limited ? (k < r_slots ? e.u : e.u + (k - r_slots + 1) * p.a_hv_min * h)
                                                 : e.u + (k + 1) * p.a_av_min * h;
                F.v = std::max(0.0, target);
            }
        } else {
            af = t + 1e-12 >= p.t_react ? p.a_hv_min : 0.0;
        }

        double al = 0;
        if (av_lead) {
            if (slot_start) {
                const double prev = k == 0 ? e.w : L.v;
                const double lo = std::max(0.0, prev + lead_brake * h), hi = std::min(p.v_max, prev + p.a_max * h);
                L.v = braking ? lo : lo + (hi - lo) * U(rng);
            }
        } else {
            if (braking) {
                al = p.a_hv_min;
            } else {
                if (step % 5 == 0) al_rand = p.a_hv_min + (p.a_max - p.a_hv_min) * U(rng);
                al = al_rand;
                if (L.v + al * dt > p.v_max) al = (p.v_max - L.v) / dt;
            }
        }
        worst = std::min(worst, L.x - F.x);
        worst = std::min(worst, advance_pair(F, L, af, al, dt));
        if (F.v <= 0 && L.v <= 0 && braking && (!av_follower || k > r_slots + 1)) break;
    }
    return worst - p.s_min;
}

}  // namespace

OracleStats separation_oracle(Formula f, const Params& p, int episodes, uint64_t seed) {
    Rng rng = substream(seed, std::string("oracle-") + formula_name(f));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    OracleStats st;
    st.min_margin = std::numeric_limits<double>::infinity();
    const int grid = static_cast<int>(std::sqrt(episodes / 4.0));
    for (int i = 0; i < episodes; ++i) {
        Episode e{f, 0, 0, true, 0};
        if (i < grid * grid) {
            e.u = p.v_max * (i / grid) / (grid - 1);
            e.w = p.v_max * (i % grid) / (grid - 1);
        } else {
            e.u = p.v_max * U(rng);
            e.w = p.v_max * U(rng);
            e.worst_lead = U(rng) < 1.0 / 3.0;
            e.switch_time = 4.0 * U(rng);
        }
        const double m = run_episode(e, p, rng);
        ++st.episodes;
        if (m < st.min_margin) st.min_margin = m, st.worst_u = e.u, st.worst_w = e.w;
    }
    return st;
}

std::vector<SuiteResult> separation_suite(const Params& p, int episodes, uint64_t seed) {
    std::vector<SuiteResult> out;
    for (Formula f : {Formula::s_hv, Formula::av_av, Formula::hv_av, Formula::hv_hv, Formula::av_hv}) {
        const auto t0 = std::chrono::steady_clock::now();
        const OracleStats st = separation_oracle(f, p, episodes, seed);
        SuiteResult r;
        r.name = std::string("separation ") + formula_name(f);
        r.pass = st.min_margin >= -1e-9;
        r.detail = std::to_string(st.episodes) + " episodes, min gap - s_min = " + fmt(st.min_margin) + " m (u=" +
                   fmt(st.worst_u) + ", w=" + fmt(st.worst_w) + ")";
        r.seconds = seconds_since(t0);
        out.push_back(r);
    }
    return out;
}

SuiteResult feasibility_suite(const Params& p, int states, uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = substream(seed, "feasibility");
    std::uniform_real_distribution<double> U(0.0, 1.0);
    PathGeometry line;
    line.segments.push_back({0.0, 1e6, {0, 0}, 0.0, 0.0});
    line.length = 1e6;
    int plan_failures = 0, next_infeasible = 0;
    double worst = std::numeric_limits<double>::infinity();
    std::string first;
    for (int i = 0; i < states; ++i) {
        PlanInput in;
        const bool hv_lim = U(rng) < 0.5;
        in.own = hv_lim ? OwnLimit::hv_limited : OwnLimit::av_limited;
        in.a_min = hv_lim ? p.a_hv_min : p.a_av_min;
        in.v_now = p.v_max * U(rng);
        const double r = U(rng);
        const bool has_lead = r < 0.8, has_stop = r >= 0.5;
        if (has_lead) {
            ReferenceObject ro;
            ro.target = 1;
            ro.lead_kind = U(rng) < 0.5 ? LeadKind::hv_like : LeadKind::av;
            ro.worst_case_decel = ro.lead_kind == LeadKind::hv_like || hv_lim || U(rng) < 0.5 ? p.a_hv_min : p.a_av_min;
            ro.sampled_v_ro = p.v_max * U(rng);
            const double slack = U(rng);
            ro.gap = s_star({ro.lead_kind, in.own}, in.v_now, ro.sampled_v_ro, p) + 30.0 * slack * slack;
            in.refs.push_back(ro);
        }
        if (has_stop) {
            ReferenceObject ro;
            ro.stop_point = true;
            const double slack = U(rng);
            ro.gap = s_star({LeadKind::av, in.own}, in.v_now, 0.0, p) + 30.0 * slack * slack;
            in.refs.push_back(ro);
        }
        for (auto& ro : in.refs) predict_reference(ro, p.horizon_n, p);

        PlanResult res;
        try {
            res = plan(in, line, 0.0, p);
        } catch (const ModelError& e) {
            if (++plan_failures == 1) first = "state " + std::to_string(i) + ": " + e.what();
            continue;
        }
        const double v1 = res.inputs.front().v_cmd;

        PlanInput nx = in;
        nx.v_now = v1;
        for (auto& ro : nx.refs) {
            if (ro.stop_point) {
                ro.gap -= v1 * p.h;
                continue;
            }
            const double w = ro.sampled_v_ro;
            const bool brake = U(rng) < 1.0 / 3.0;
            if (ro.lead_kind == LeadKind::av) {
                const double lo = std::max(0.0, w + ro.worst_case_decel * p.h), hi = std::min(p.v_max, w + p.a_max * p.h);
                const double w1 = brake ? lo : lo + (hi - lo) * U(rng);
                ro.gap += (w1 - v1) * p.h;
                ro.sampled_v_ro = w1;
            } else {
                // the HV's speed now, then one slot of constant acceleration
                const double lo = std::max(0.0, w + p.a_hv_min * p.h), hi = std::min(p.v_max, w + p.a_max * p.h);
                const double x = brake ? lo : lo + (hi - lo) * U(rng);
                double a = brake ? p.a_hv_min : p.a_hv_min + (p.a_max - p.a_hv_min) * U(rng);
                if (x + a * p.h > p.v_max) a = (p.v_max - x) / p.h;
                ro.gap += braking_distance_in(x, a, p.h) - v1 * p.h;
                ro.sampled_v_ro = x;
            }
        }
        for (auto& ro : nx.refs) predict_reference(ro, p.horizon_n, p);
        std::vector<double> fb(p.horizon_n);
        double v = v1;
        for (auto& x : fb) x = v = std::max(0.0, v + nx.a_min * p.h);
        const double s = plan_min_slack(nx, fb, p);
        worst = std::min(worst, s);
        if (s < -1e-9 && ++next_infeasible == 1 && first.empty())
            first = "state " + std::to_string(i) + ": fallback slack " + fmt(s);
    }
    SuiteResult r;
    r.name = "planner feasibility";
    r.pass = plan_failures == 0 && next_infeasible == 0;
    r.detail = std::to_string(states) + " states, " + std::to_string(plan_failures) + " infeasible plans, " +
               std::to_string(next_infeasible) + " infeasible fallbacks, min fallback slack " + fmt(worst) + " m" +
               (first.empty() ? "" : "; first: " + first);
    r.seconds = seconds_since(t0);
    return r;
}

namespace {

Pose rk4(Pose x, double v, double w, double h, int n) {
    const double dt = h / n;
    auto f = [&](const Pose& s) { return Pose{v * std::cos(s.theta), v * std::sin(s.theta), w}; };
    for (int i = 0; i < n; ++i) {
        const Pose k1 = f(x);
        const Pose k2 = f({x.x + 0.5 * dt * k1.x, x.y + 0.5 * dt * k1.y, x.theta + 0.5 * dt * k1.theta});
        const Pose k3 = f({x.x + 0.5 * dt * k2.x, x.y + 0.5 * dt * k2.y, x.theta + 0.5 * dt * k2.theta});
        const Pose k4 = f({x.x + dt * k3.x, x.y + dt * k3.y, x.theta + dt * k3.theta});
        x.x += dt / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
        x.y += dt / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
        x.theta += dt / 6 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta);
    }
    return x;
}

double pose_err(const Pose& a, const Pose& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

SuiteResult kinematics_suite(const Params& p, int inputs, uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = substream(seed, "kinematics");
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double w_max = p.v_max / p.rho_min;
    double rk_err = 0, lim_err = 0;
    for (int i = 0; i < inputs; ++i) {
        const Pose x0{200 * U(rng) - 100, 200 * U(rng) - 100, 2 * M_PI * U(rng) - M_PI};
        const double v = p.v_max * U(rng);
        double w = w_max * (2 * U(rng) - 1);
        if (i % 10 == 0) w *= 1e-7;  // near-straight inputs exercise the small-omega branch
        rk_err = std::max(rk_err, pose_err(unicycle_closed_form(x0, v, w, p.h), rk4(x0, v, w, p.h, 2000)));
        const Pose straight = unicycle_closed_form(x0, v, 0.0, p.h);
        for (double e : {1e-7, 1e-8, 1e-10, 1e-12, -1e-9})
            lim_err = std::max(lim_err, pose_err(unicycle_closed_form(x0, v, e, p.h), straight));
        // both sides of the small-angle switch agree
        const double th = 1e-6 / p.h;
        lim_err = std::max(lim_err, pose_err(unicycle_closed_form(x0, v, th * (1 - 1e-9), p.h),
                                             unicycle_closed_form(x0, v, th * (1 + 1e-9), p.h)));
    }
    SuiteResult r;
    r.name = "kinematics";
    r.pass = rk_err <= 1e-6 && lim_err <= 1e-6;
    r.detail = std::to_string(inputs) + " inputs, max |closed form - RK4| = " + fmt(rk_err) +
               " m, omega->0 excess = " + fmt(lim_err) + " m";
    r.seconds = seconds_since(t0);
    return r;
}

SuiteResult special_case_suite(const Params& p) {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0;
    const int n = 1401;
    for (int i = 0; i < n; ++i) {
        const double v = p.v_max * i / (n - 1);
        const double lhs = s_av_av(v, 0.0, p) - p.s_min;
        const double rhs = v * v / (-2 * p.a_av_min) + v * p.h - p.a_av_min * p.h * p.h / 2;
        const double scale = std::max(1.0, std::abs(rhs));
        if (v > 0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
        else worst = std::max(worst, std::abs(lhs));
    }
    SuiteResult r;
    r.name = "special case";
    r.pass = worst <= 4 * std::numeric_limits<double>::epsilon();
    r.detail = std::to_string(n) + " speeds, max relative difference " + fmt(worst);
    r.seconds = seconds_since(t0);
    return r;
}

std::vector<Scenario> safety_scenarios(int count, int horizon, const Params& p) {
    static const double fractions[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    static const HvMode modes[] = {HvMode::nominal, HvMode::randomized, HvMode::adversarial};
    // vehicles per second per path; the top levels exceed what the junction can serve
    static const double rates[] = {0.01, 0.02, 0.035, 0.05, 0.075, 0.1, 0.15, 0.25};
    std::vector<Scenario> out;
    for (int i = 0; i < count; ++i) {
        Rng rng = substream(static_cast<uint64_t>(i), "scenario");
        std::uniform_real_distribution<double> U(0.0, 1.0);
        Scenario sc;
        sc.name = "mixed-" + std::to_string(i);
        sc.params = p;
        sc.horizon = horizon;
        sc.hv_mode = modes[(i / 5) % 3];
        StochasticArrivals st;
        st.hv_fraction = fractions[i % 5];
        st.rate = rates[(i / 15) % 8] * (0.8 + 0.4 * U(rng));
        st.v0_min = p.v_max * 0.4 * U(rng);
        st.v0_max = st.v0_min + (p.v_max - st.v0_min) * (0.5 + 0.5 * U(rng));
        sc.stochastic = st;
        out.push_back(sc);
    }
    return out;
}

BatchOutcome run_batch(const BatchConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto scenarios = safety_scenarios(cfg.scenarios, cfg.horizon, cfg.params);
    const int total = cfg.scenarios * cfg.seeds;
    std::atomic<int> next{0};
    std::atomic<bool> stop{false};
    std::mutex mu;
    BatchOutcome out;
    RunOptions opt;
    opt.trace = false;
    opt.state_samples = false;
    opt.stop_on_violation = cfg.stop_on_detection;

    auto worker = [&]() {
        for (;;) {
            if (stop) return;
            const int k = next++;
            if (k >= total) return;
            const int i = k / cfg.seeds, j = k % cfg.seeds;
            const uint64_t seed = 1000003ull * static_cast<uint64_t>(i) + static_cast<uint64_t>(j) + 1;
            const RunResult r = run(scenarios[i], seed, opt);
            const auto& rep = r.report;
            std::lock_guard<std::mutex> lk(mu);
            ++out.runs;
            out.violations += static_cast<int>(rep.violations.size());
            out.reservation_conflicts += static_cast<int>(rep.reservation_conflicts.size());
            out.policy1 += static_cast<int>(rep.policy1.size());
            out.vhv_limit += static_cast<int>(rep.vhv_limit.size());
            out.fatal += !rep.fatal_code.empty();
            out.infeasible += rep.fatal_code == "infeasible-state";
            out.not_live += !rep.live;
            out.spawned += rep.metrics.spawned;
            out.exited += rep.metrics.exited;
            auto note = [&](const std::string& s) {
                if (out.examples.size() < 5) out.examples.push_back(scenarios[i].name + " seed " + std::to_string(seed) + ": " + s);
            };
            if (!rep.violations.empty()) {
                const auto& v = rep.violations.front();
                std::ostringstream os;
                os << v.type << " at slot " << v.slot << "." << v.micro << " vehicles";
                for (int id : v.vehicles) os << ' ' << id;
                os << " gap " << v.measured << " < " << v.required;
                note(os.str());
            }
            if (!rep.reservation_conflicts.empty()) note("conflicting reservations, " + rep.reservation_conflicts.front());
            if (!rep.policy1.empty()) note("signal policy, slot " + std::to_string(rep.policy1.front().slot) + ": " + rep.policy1.front().what);
            if (!rep.fatal_code.empty()) note(rep.fatal_code + ": " + rep.fatal_message);
            if (!rep.vhv_limit.empty()) note(rep.vhv_limit.front());
            if (cfg.stop_on_detection && out.detected()) stop = true;
        }
    };
    int n = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    n = std::min(n, std::max(1, total));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    out.seconds = seconds_since(t0);
    return out;
}

std::vector<MutationCase> mutation_cases() {
    std::vector<MutationCase> out;
    Mutations m;
    m.disable_conflict_check = true;
    out.push_back({"permission conflict check disabled", m});
    const std::pair<int, const char*> formulas[] = {
        {0, "s_hv"}, {4, "s_av^av"}, {5, "s_hv^av"}, {6, "s_hv^hv"}, {7, "s_av^hv"}};
    for (const auto& [tag, name] : formulas) {
        Mutations w;
        w.separation_scale = 0.8;
        w.weaken_formula = tag;
        out.push_back({std::string(name) + " weakened by 20%", w});
    }
    return out;
}

std::vector<SuiteResult> mutation_suite(const BatchConfig& cfg) {
    std::vector<SuiteResult> out;
    for (const auto& mc : mutation_cases()) {
        BatchConfig c = cfg;
        c.params.mut = mc.mut;
        c.stop_on_detection = true;
        const BatchOutcome o = run_batch(c);
        SuiteResult r;
        r.name = "mutation: " + mc.name;
        r.pass = o.detected();
        r.detail = (r.pass ? "detected after " : "not detected in ") + std::to_string(o.runs) + " runs" +
                   (o.examples.empty() ? "" : "; " + o.examples.front());
        r.seconds = o.seconds;
        out.push_back(r);
    }
    return out;
}

SuiteResult determinism_suite(const Params& p, int horizon) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteResult r;
    r.name = "determinism";
    r.pass = true;
    int runs = 0;
    size_t bytes = 0;
    for (int i : {2, 13, 29}) {  // a mixed nominal, an all-HV randomized, an adversarial cell
        const Scenario sc = safety_scenarios(i + 1, horizon, p).back();
        const RunResult a = run(sc, 77, {});
        const RunResult b = run(sc, 77, {});
        runs += 2;
        bytes += a.trace.size();
        if (a.trace != b.trace || a.metrics != b.metrics || a.trace.empty()) {
            r.pass = false;
            r.detail = sc.name + " produced different traces";
        }
    }
    if (r.pass) r.detail = std::to_string(runs) + " runs, " + std::to_string(bytes) + " trace bytes per copy, identical";
    r.seconds = seconds_since(t0);
    return r;
}

}  // namespace xsim
