// Acceptance run: one PASS/FAIL line per criterion. Analytic criteria use oracles written
// here, independent of the library's own verify suites.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "xsim/av_planner.hpp"
#include "xsim/kinematics.hpp"
#include "xsim/separation.hpp"
#include "xsim/sim.hpp"
#include "xsim/suites.hpp"

using namespace xsim;

namespace {

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double x, int prec = 6) {
    std::ostringstream os;
    os.precision(prec);
    os << x;
    return os.str();
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail, double secs) {
    if (!pass) ++failures;
    std::printf("%s  [%d] %-34s %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), secs);
    std::fflush(stdout);
}

// ---------------------------------------------------------------------------
// Worst-case separation oracle.
//
// Time is stepped at dt. Within a step each body has a constant acceleration and may come to
// rest; the gap is piecewise quadratic, and its minimum over the step is taken exactly at the
// step ends, the stop instants and the zeros of the relative speed.

struct Mover {
    double x, v;
};

double pos_after(const Mover& m, double a, double t) {
    if (a < 0 && m.v + a * t <= 0) return m.x + m.v * m.v / (-2 * a);
    return m.x + m.v * t + 0.5 * a * t * t;
}
double vel_after(const Mover& m, double a, double t) { return std::max(0.0, m.v + a * t); }

// advances both bodies by dt and returns the smallest gap lead - follower seen during the step
double step_pair(Mover& f, double af, Mover& l, double al, double dt) {
    std::vector<double> cand{0.0, dt};
    const auto stop_at = [&](const Mover& m, double a) { return (a < 0 && m.v > 0) ? m.v / -a : -1.0; };
    const double tf = stop_at(f, af), tl = stop_at(l, al);
    if (tf > 0 && tf < dt) cand.push_back(tf);
    if (tl > 0 && tl < dt) cand.push_back(tl);
    std::vector<double> cuts = cand;
    std::sort(cuts.begin(), cuts.end());
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (b - a <= 0) continue;
        const double mid = 0.5 * (a + b);
        const double ea = (af < 0 && f.v + af * mid <= 0) ? 0.0 : af;
        const double eb = (al < 0 && l.v + al * mid <= 0) ? 0.0 : al;
        const double rv = vel_after(l, al, a) - vel_after(f, af, a), ra = eb - ea;
        if (ra != 0) {
            const double t = a - rv / ra;
            if (t > a && t < b) cand.push_back(t);
        }
    }
    double worst = std::numeric_limits<double>::infinity();
    for (double t : cand) worst = std::min(worst, pos_after(l, al, t) - pos_after(f, af, t));
    f = {pos_after(f, af, dt), vel_after(f, af, dt)};
    l = {pos_after(l, al, dt), vel_after(l, al, dt)};
    return worst;
}

enum class Pair { hv_follow, av_av, hv_av, hv_hv, av_hv };
const char* pair_name(Pair p) {
    switch (p) {
        case Pair::hv_follow: return "s_hv";
        case Pair::av_av: return "AV lead / AV-limited";
        case Pair::hv_av: return "HV lead / AV-limited";
        case Pair::hv_hv: return "HV lead / HV-limited";
        case Pair::av_hv: return "AV lead / HV-limited";
    }
    return "?";
}

double required_gap(Pair pr, double u, double w, const Params& p) {
    switch (pr) {
        case Pair::hv_follow: return ctl_s_hv(u, w, p);
        case Pair::av_av: return ctl_s_star({LeadKind::av, OwnLimit::av_limited}, u, w, p);
        case Pair::hv_av: return ctl_s_star({LeadKind::hv_like, OwnLimit::av_limited}, u, w, p);
        case Pair::hv_hv: return ctl_s_star({LeadKind::hv_like, OwnLimit::hv_limited}, u, w, p);
        case Pair::av_hv: return ctl_s_star({LeadKind::av, OwnLimit::hv_limited}, u, w, p);
    }
    return 0;
}

// One episode from gap = required_gap(u, w). Followers respond as their class allows:
// an HV keeps its speed for T_r and then brakes at a_hv continuously; an AV-limited AV
// brakes a_av h per slot from the next slot; an HV-limited AV holds its speed for T_r and then
// brakes a_hv h per slot. The lead either brakes at its hardest from the start or moves
// arbitrarily within its envelope until `switch_at` and brakes hardest afterwards.
double episode(Pair pr, double u, double w, bool brake_now, double switch_at, const Params& p, std::mt19937_64& g) {
    std::uniform_real_distribution<double> U(0, 1);
    const double h = p.h;
    const int sub = 50;
    const double dt = h / sub;
    const bool lead_av = pr == Pair::av_av || pr == Pair::av_hv;
    const bool foll_av = pr != Pair::hv_follow;
    const bool foll_hv_lim = pr == Pair::hv_hv || pr == Pair::av_hv;
    const double a_lead = lead_av ? p.a_av_min : p.a_hv_min;

    Mover F{0, u}, L{required_gap(pr, u, w, p), w};
    if (!lead_av && pr != Pair::hv_follow) {
        // the AV saw a one-slot-old HV speed; the HV may be anywhere in its envelope now
        const double lo = std::max(0.0, w + p.a_hv_min * h), hi = std::min(p.v_max, w + p.a_max * h);
        L.v = brake_now ? lo : lo + (hi - lo) * U(g);
    }
    double worst = L.x - F.x;
    double a_rand = 0;
    const int slots_react = static_cast<int>(std::lround(p.t_react / h));
    for (int slot = 0; slot < 200; ++slot) {
        if (foll_av) {
            double target;
            if (foll_hv_lim) target = slot < slots_react ? u : u + (slot - slots_react + 1) * p.a_hv_min * h;
            else target = u + (slot + 1) * p.a_av_min * h;
            F.v = std::max(0.0, target);
        }
        if (lead_av) {
            const double lo = std::max(0.0, L.v + a_lead * h), hi = std::min(p.v_max, L.v + p.a_max * h);
            const bool br = brake_now || slot * h >= switch_at;
            L.v = br ? lo : lo + (hi - lo) * U(g);
        }
        for (int m = 0; m < sub; ++m) {
            const double t = slot * h + m * dt;
            const double af = foll_av ? 0.0 : (t >= p.t_react - 1e-12 ? p.a_hv_min : 0.0);
            double al = 0;
            if (!lead_av) {
                if (brake_now || t >= switch_at - 1e-12) {
                    al = a_lead;
                } else {
                    if (m % 10 == 0) a_rand = p.a_hv_min + (p.a_max - p.a_hv_min) * U(g);
                    al = std::min(a_rand, (p.v_max - L.v) / dt);
                }
            }
            worst = std::min(worst, step_pair(F, af, L, al, dt));
        }
        const bool lead_done = L.v <= 0 && (brake_now || (slot + 1) * h >= switch_at);
        if (F.v <= 0 && lead_done && slot > slots_react + 1) break;
    }
    return worst - p.s_min;
}

struct OracleOut {
    double min_margin = std::numeric_limits<double>::infinity();
    double at_u = 0, at_w = 0;
};

OracleOut run_oracle(Pair pr, const Params& p, int episodes, uint64_t seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> U(0, 1);
    OracleOut o;
    const int side = static_cast<int>(std::sqrt(episodes / 5.0));
    for (int i = 0; i < episodes; ++i) {
        double u, w, sw = 0;
        bool now = true;
        if (i < side * side) {
            u = p.v_max * (i / side) / (side - 1);
            w = p.v_max * (i % side) / (side - 1);
        } else if (i < 2 * side * side && pr == Pair::av_hv) {
            // dense around the indicator threshold u = sqrt(a_hv / a_av) w
            w = p.v_max * U(g);
            u = std::clamp(std::sqrt(p.a_hv_min / p.a_av_min) * w + (U(g) - 0.5) * 0.2, 0.0, p.v_max);
        } else {
            u = p.v_max * U(g);
            w = p.v_max * U(g);
            now = U(g) < 0.3;
            sw = 5 * U(g);
        }
        const double m = episode(pr, u, w, now, sw, p, g);
        if (m < o.min_margin) o.min_margin = m, o.at_u = u, o.at_w = w;
    }
    return o;
}

void criterion_separation(int episodes) {
    const auto t0 = Clock::now();
    Params p;
    bool pass = true;
    std::string detail;
    for (Pair pr : {Pair::hv_follow, Pair::av_av, Pair::hv_av, Pair::hv_hv, Pair::av_hv}) {
        const OracleOut o = run_oracle(pr, p, episodes, 1234 + static_cast<int>(pr));
        pass = pass && o.min_margin >= -1e-9;
        detail += std::string(pair_name(pr)) + " min margin " + num(o.min_margin, 4) + " m; ";
    }
    // the HV-lead/HV-limited formula's stopping coefficient: halving it must be unsafe
    Params half = p;
    half.mut.halve_hvhv_stop_coef = true;
    const OracleOut h = run_oracle(Pair::hv_hv, half, episodes / 10, 99);
    const bool coef_resolved = h.min_margin < -1e-9;
    pass = pass && coef_resolved;
    detail += "halved HV-HV stopping coefficient margin " + num(h.min_margin, 4) + " m (" +
              (coef_resolved ? "unsafe, printed coefficient needed" : "NOT detected") + ")";
    report(2, "separation formulas sufficient", pass, std::to_string(episodes) + " episodes each: " + detail, since(t0));
}

// ---------------------------------------------------------------------------
// Planner feasibility preservation with an independent constraint check.

struct Lead {
    bool stop_point;
    bool av;
    double gap, w, decel;
};

// predicted travel and speed of the reference over slot k, following the worst-case recursion
void predict(const Lead& l, int k, const Params& p, double& travel, double& v_ref) {
    if (l.stop_point) {
        travel = 0, v_ref = 0;
        return;
    }
    v_ref = std::max(0.0, l.w + (k + 1) * l.decel * p.h);
    if (l.av) {
        travel = v_ref * p.h;
    } else {
        auto dist = [&](double t) {
            const double ts = l.w / -l.decel;
            return t >= ts ? l.w * l.w / (-2 * l.decel) : l.w * t + 0.5 * l.decel * t * t;
        };
        travel = dist((k + 2) * p.h) - dist((k + 1) * p.h);
    }
}

double own_slack(const std::vector<Lead>& leads, bool hv_lim, const std::vector<double>& v, const Params& p) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& l : leads) {
        double gap = l.gap;
        for (size_t k = 0; k < v.size(); ++k) {
            double tr, vr;
            predict(l, static_cast<int>(k), p, tr, vr);
            gap += tr - v[k] * p.h;
            const LeadKind lk = (l.stop_point || l.av) ? LeadKind::av : LeadKind::hv_like;
            worst = std::min(worst, gap - s_star({lk, hv_lim ? OwnLimit::hv_limited : OwnLimit::av_limited}, v[k], vr, p));
        }
    }
    return worst;
}

void criterion_feasibility(int states, int infeasible_in_batch, bool batch_ran) {
    const auto t0 = Clock::now();
    Params p;
    std::mt19937_64 g(2024);
    std::uniform_real_distribution<double> U(0, 1);
    std::exponential_distribution<double> E(0.2);
    PathGeometry line;
    line.segments.push_back({0.0, 1e6, {0, 0}, 0.0, 0.0});
    line.length = 1e6;
    int throws = 0, bad_plan = 0, bad_next = 0;
    double worst_next = std::numeric_limits<double>::infinity();
    for (int i = 0; i < states; ++i) {
        const bool hv_lim = U(g) < 0.4;
        const double a_own = hv_lim ? p.a_hv_min : p.a_av_min;
        const double u = p.v_max * U(g);
        std::vector<Lead> leads;
        const int n_leads = static_cast<int>(U(g) * 3);  // 0..2 leads in overlapping frames
        for (int j = 0; j < n_leads; ++j) {
            Lead l{false, U(g) < 0.5, 0, p.v_max * U(g), 0};
            // an HV-limited follower's AV lead is itself HV-limited
            l.decel = !l.av ? p.a_hv_min : (hv_lim || U(g) < 0.3 ? p.a_hv_min : p.a_av_min);
            const LeadKind lk = l.av ? LeadKind::av : LeadKind::hv_like;
            l.gap = s_star({lk, hv_lim ? OwnLimit::hv_limited : OwnLimit::av_limited}, u, l.w, p) + (U(g) < 0.2 ? 0 : E(g));
            leads.push_back(l);
        }
        if (U(g) < 0.5) {
            Lead s{true, true, 0, 0, 0};
            s.gap = s_star({LeadKind::av, hv_lim ? OwnLimit::hv_limited : OwnLimit::av_limited}, u, 0, p) + (U(g) < 0.2 ? 0 : E(g));
            leads.push_back(s);
        }

        PlanInput in;
        in.v_now = u;
        in.a_min = a_own;
        in.own = hv_lim ? OwnLimit::hv_limited : OwnLimit::av_limited;
        for (const auto& l : leads) {
            ReferenceObject ro;
            ro.stop_point = l.stop_point;
            ro.target = l.stop_point ? -1 : 1;
            ro.gap = l.gap;
            ro.sampled_v_ro = l.w;
            ro.worst_case_decel = l.decel;
            ro.lead_kind = (l.stop_point || l.av) ? LeadKind::av : LeadKind::hv_like;
            predict_reference(ro, p.horizon_n, p);
            in.refs.push_back(ro);
        }
        std::vector<double> v;
        try {
            v = plan(in, line, 0, p).speeds();
        } catch (const ModelError&) {
            ++throws;
            continue;
        }
        // the plan itself: speed envelope and every horizon constraint
        double prev = u;
        bool env_ok = true;
        for (double x : v) {
            env_ok = env_ok && x >= 0 && x <= p.v_max + 1e-12 && x - prev >= a_own * p.h - 1e-9 && x - prev <= p.a_max * p.h + 1e-9;
            prev = x;
        }
        if (!env_ok || own_slack(leads, hv_lim, v, p) < -1e-9) ++bad_plan;

        // execute the first input, let every lead move adversarially within its envelope
        const double v1 = v.front();
        std::vector<Lead> next = leads;
        for (auto& l : next) {
            if (l.stop_point) {
                l.gap -= v1 * p.h;
                continue;
            }
            const bool hard = U(g) < 0.35;
            if (l.av) {
                const double lo = std::max(0.0, l.w + l.decel * p.h), hi = std::min(p.v_max, l.w + p.a_max * p.h);
                const double w1 = hard ? lo : lo + (hi - lo) * U(g);
                l.gap += (w1 - v1) * p.h;
                l.w = w1;
            } else {
                const double lo = std::max(0.0, l.w + p.a_hv_min * p.h), hi = std::min(p.v_max, l.w + p.a_max * p.h);
                const double x = hard ? lo : lo + (hi - lo) * U(g);
                double a = hard ? p.a_hv_min : p.a_hv_min + (p.a_max - p.a_hv_min) * U(g);
                if (x + a * p.h > p.v_max) a = (p.v_max - x) / p.h;
                const double travel = (a < 0 && x + a * p.h < 0) ? x * x / (-2 * a) : x * p.h + 0.5 * a * p.h * p.h;
                l.gap += travel - v1 * p.h;
                l.w = x;
            }
        }
        std::vector<double> fb(p.horizon_n);
        double s = v1;
        for (auto& x : fb) x = s = std::max(0.0, s + a_own * p.h);
        const double sl = own_slack(next, hv_lim, fb, p);
        worst_next = std::min(worst_next, sl);
        if (sl < -1e-9) ++bad_next;
    }
    const bool pass = throws == 0 && bad_plan == 0 && bad_next == 0 && (!batch_ran || infeasible_in_batch == 0);
    report(5, "planner feasibility", pass,
           std::to_string(states) + " states: " + std::to_string(throws) + " infeasible-state, " + std::to_string(bad_plan) +
               " plans breaking a constraint, " + std::to_string(bad_next) + " infeasible fallbacks (min slack " +
               num(worst_next, 4) + " m); batch infeasible-state: " +
               (batch_ran ? std::to_string(infeasible_in_batch) : std::string("not run")),
           since(t0));
}

// ---------------------------------------------------------------------------

Pose rk4(Pose s, double v, double w, double h, int n) {
    const double dt = h / n;
    auto f = [&](const Pose& q) { return Pose{v * std::cos(q.theta), v * std::sin(q.theta), w}; };
    for (int i = 0; i < n; ++i) {
        const Pose k1 = f(s);
        const Pose k2 = f({s.x + dt / 2 * k1.x, s.y + dt / 2 * k1.y, s.theta + dt / 2 * k1.theta});
        const Pose k3 = f({s.x + dt / 2 * k2.x, s.y + dt / 2 * k2.y, s.theta + dt / 2 * k2.theta});
        const Pose k4 = f({s.x + dt * k3.x, s.y + dt * k3.y, s.theta + dt * k3.theta});
        s.x += dt / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
        s.y += dt / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
        s.theta += dt / 6 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta);
    }
    return s;
}

void criterion_kinematics(int inputs) {
    const auto t0 = Clock::now();
    Params p;
    std::mt19937_64 g(77);
    std::uniform_real_distribution<double> U(0, 1);
    const double w_max = p.v_max / p.rho_min;
    double err = 0, cont = 0;
    for (int i = 0; i < inputs; ++i) {
        const Pose s{500 * U(g) - 250, 500 * U(g) - 250, 2 * M_PI * U(g) - M_PI};
        const double v = p.v_max * U(g);
        const double w = (i % 8 == 0 ? 1e-8 : 1.0) * w_max * (2 * U(g) - 1);
        const Pose a = unicycle_closed_form(s, v, w, p.h), b = rk4(s, v, w, p.h, 1000);
        err = std::max(err, std::hypot(a.x - b.x, a.y - b.y));
        const Pose z = unicycle_closed_form(s, v, 0.0, p.h);
        for (double e = 1e-7; e > 1e-16; e /= 10)
            for (double sgn : {1.0, -1.0}) {
                const Pose q = unicycle_closed_form(s, v, sgn * e, p.h);
                cont = std::max(cont, std::hypot(q.x - z.x, q.y - z.y));
            }
    }
    report(6, "kinematics", err <= 1e-6 && cont <= 1e-6,
           std::to_string(inputs) + " inputs, max |closed form - RK4| " + num(err, 3) + " m, max |f(w) - f(0)| for |w| <= 1e-7: " +
               num(cont, 3) + " m",
           since(t0));
}

void criterion_special_case() {
    const auto t0 = Clock::now();
    Params p;
    double worst = 0;
    int n = 0;
    for (int i = 0; i <= 1400; ++i, ++n) {
        const double v = i * p.v_max / 1400;
        const double d_s = v * v / (-2 * p.a_av_min) + v * p.h - p.a_av_min * p.h * p.h / 2;
        const double lhs = s_av_av(v, 0, p) - p.s_min;
        worst = std::max(worst, v == 0 ? std::abs(lhs) : std::abs(lhs - d_s) / d_s);
    }
    report(7, "special case identity", worst <= 4 * std::numeric_limits<double>::epsilon(),
           std::to_string(n) + " speeds, max relative difference " + num(worst, 3) + " (eps " +
               num(std::numeric_limits<double>::epsilon(), 3) + ")",
           since(t0));
}

// ---------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& f) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_determinism(const std::string& cli) {
    const auto t0 = Clock::now();
    Params p;
    bool same = true;
    size_t bytes = 0;
    int runs = 0;
    for (int idx : {7, 22, 44, 58}) {
        const Scenario sc = safety_scenarios(idx + 1, 300, p).back();
        const RunResult a = run(sc, 5), b = run(sc, 5);
        same = same && a.trace == b.trace && a.metrics == b.metrics && !a.trace.empty();
        bytes += a.trace.size();
        runs += 2;
    }
    std::string extra = "";
    if (!cli.empty()) {
        namespace fs = std::filesystem;
        const fs::path d = fs::temp_directory_path() / ("xsim-accept-" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        const std::string sc = std::string(XSIM_SOURCE_DIR) + "/scenarios/example.json";
        bool ok = true;
        for (const char* sub : {"a", "b"}) {
            const std::string cmd = cli + " run -s " + sc + " --seed 11 -o " + (d / sub).string() + " >/dev/null 2>&1";
            const int st = std::system(cmd.c_str());
            ok = ok && WIFEXITED(st) && WEXITSTATUS(st) == 0;
        }
        const std::string ta = slurp(d / "a" / "trace.jsonl"), tb = slurp(d / "b" / "trace.jsonl");
        ok = ok && !ta.empty() && ta == tb && slurp(d / "a" / "metrics.csv") == slurp(d / "b" / "metrics.csv");
        same = same && ok;
        extra = "; two CLI processes: " + std::string(ok ? "identical " : "DIFFERENT ") + std::to_string(ta.size()) + " bytes";
        fs::remove_all(d);
    }
    report(9, "determinism", same, std::to_string(runs) + " in-process runs, " + std::to_string(bytes) + " trace bytes per copy" + extra,
           since(t0));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    int scenarios = 500, seeds = 3, horizon = 1000, workers = 0, episodes = 10000, states = 10000, inputs = 1000;
    int mut_scenarios = 100, mut_horizon = 400;
    double runtime_target = 300;
    std::string cli = XSIM_CLI_PATH;
    app.add_option("--scenarios", scenarios);
    app.add_option("--seeds", seeds);
    app.add_option("--horizon", horizon);
    app.add_option("--workers", workers, "0 = all cores");
    app.add_option("--episodes", episodes);
    app.add_option("--states", states);
    app.add_option("--inputs", inputs);
    app.add_option("--mutation-scenarios", mut_scenarios);
    app.add_option("--mutation-horizon", mut_horizon);
    app.add_option("--runtime-target", runtime_target, "seconds allowed for the criterion-1 batch");
    app.add_option("--cli", cli, "xsim_cli binary for the cross-process determinism check (empty to skip)");
    CLI11_PARSE(app, argc, argv);

    const auto t_all = Clock::now();
    criterion_special_case();
    criterion_kinematics(inputs);
    criterion_separation(episodes);

    // criteria 1, 3, 4 share one batch
    Params p;
    BatchConfig cfg;
    cfg.scenarios = scenarios;
    cfg.seeds = seeds;
    cfg.horizon = horizon;
    cfg.workers = workers;
    cfg.params = p;
    const BatchOutcome b = run_batch(cfg);
    const std::string first = b.examples.empty() ? "" : "; first: " + b.examples.front();
    const std::string size = std::to_string(b.runs) + " runs (" + std::to_string(scenarios) + " scenarios x " +
                             std::to_string(seeds) + " seeds x " + std::to_string(horizon) + " slots), " +
                             std::to_string(b.spawned) + " vehicles";
    report(1, "no safety violations", b.violations == 0 && b.fatal == 0 && b.vhv_limit == 0 && b.runs == scenarios * seeds,
           size + ": " + std::to_string(b.violations) + " violations, " + std::to_string(b.fatal) + " fatal, " +
               std::to_string(b.vhv_limit) + " VHV braking excesses, " + std::to_string(b.not_live) + " runs not fully drained" + first,
           b.seconds);
    report(1, "batch runtime", b.seconds <= runtime_target,
           num(b.seconds, 4) + " s against a " + num(runtime_target, 4) + " s target on " +
               std::to_string(workers > 0 ? workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))) +
               " worker(s)",
           b.seconds);
    report(3, "reservations conflict-free", b.reservation_conflicts == 0, std::to_string(b.reservation_conflicts) + " slots with conflicting reservations", 0);
    report(4, "signal policy", b.policy1 == 0, std::to_string(b.policy1) + " findings by the signal-trace checker", 0);

    criterion_feasibility(states, b.infeasible, true);

    BatchConfig mc = cfg;
    mc.scenarios = mut_scenarios;
    mc.seeds = 1;
    mc.horizon = mut_horizon;
    const auto t_m = Clock::now();
    bool all = true;
    std::string detail;
    for (const SuiteResult& r : mutation_suite(mc)) {
        all = all && r.pass;
        detail += r.name.substr(std::string("mutation: ").size()) + ": " + (r.pass ? "caught" : "MISSED") + " (" +
                  r.detail.substr(0, r.detail.find(';')) + "); ";
    }
    report(8, "mutations detected", all, detail, since(t_m));

    criterion_determinism(cli);

    std::printf("%d criteria line(s) failed; total %.1f s\n", failures, since(t_all));
    return failures ? 1 : 0;
}
