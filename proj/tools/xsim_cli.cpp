#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "xsim/scenario_io.hpp"
#include "xsim/suites.hpp"

namespace fs = std::filesystem;
using namespace xsim;

namespace {

enum Exit { ok = 0, usage = 1, parse_error = 2, invariant_error = 3, unsafe = 4, run_fatal = 5 };

int verbosity = 0;

void note(const std::string& s) {
    if (verbosity > 0) std::cerr << s << '\n';
}

bool write_file(const fs::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary);
    out << data;
    return static_cast<bool>(out);
}

// load errors map to their exit codes; returns 0 on success
int load(const std::string& path, Scenario& sc) {
    try {
        sc = load_scenario(path);
        validate_scenario(sc);
    } catch (const ModelError& e) {
        std::cerr << "error [" << e.code << "]: " << e.what() << '\n';
        return e.code == "parse" ? parse_error : invariant_error;
    }
    return ok;
}

bool report_clean(const SafetyReport& r) {
    return r.violations.empty() && r.reservation_conflicts.empty() && r.policy1.empty() && r.vhv_limit.empty();
}

// --------------------------------------------------------------------------- run

struct RunArgs {
    std::string scenario;
    std::vector<uint64_t> seeds{1};
    int horizon = 0;
    std::string out = "out";
    std::string hv_mode;
    bool no_checks = false;
    bool no_states = false;
    bool unsafe_manager = false;
};

int cmd_run(const RunArgs& a) {
    Scenario sc;
    if (int rc = load(a.scenario, sc)) return rc;
    if (a.horizon > 0) sc.horizon = a.horizon;
    if (!a.hv_mode.empty()) sc.hv_mode = parse_hv_mode(a.hv_mode);
    if (a.unsafe_manager) sc.params.mut.disable_conflict_check = true;

    RunOptions opt;
    opt.check_invariants = !a.no_checks;
    opt.state_samples = !a.no_states;
    int rc = ok;
    for (uint64_t seed : a.seeds) {
        const fs::path dir = a.seeds.size() == 1 ? fs::path(a.out) : fs::path(a.out) / ("seed-" + std::to_string(seed));
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) {
            std::cerr << "error: cannot create " << dir << ": " << ec.message() << '\n';
            return usage;
        }
        const RunResult r = run(sc, seed, opt);
        const SafetyReport& rep = r.report;
        if (!write_file(dir / "trace.jsonl", r.trace) || !write_file(dir / "metrics.csv", r.metrics) ||
            !write_file(dir / "report.json", report_json(rep, sc, seed))) {
            std::cerr << "error: cannot write outputs under " << dir << '\n';
            return usage;
        }
        std::printf("%s seed %llu: %s, %zu violations, %zu reservation conflicts, %zu signal findings, "
                    "spawned %d exited %d, throughput %.1f/h, mean delay %.2f s\n",
                    sc.name.c_str(), static_cast<unsigned long long>(seed),
                    !rep.fatal_code.empty() ? "FATAL" : (report_clean(rep) ? "safe" : "UNSAFE"), rep.violations.size(),
                    rep.reservation_conflicts.size(), rep.policy1.size(), rep.metrics.spawned, rep.metrics.exited,
                    rep.metrics.throughput, rep.metrics.mean_delay);
        if (!rep.fatal_code.empty()) {
            std::cerr << "fatal [" << rep.fatal_code << "]: " << rep.fatal_message << '\n';
            rc = run_fatal;
        } else if (!report_clean(rep) && rc == ok) {
            for (const auto& v : rep.violations) {
                std::cerr << "violation " << v.type << " at slot " << v.slot << '.' << v.micro << '\n';
                if (verbosity == 0) break;
            }
            for (const auto& s : rep.reservation_conflicts) {
                std::cerr << "reservation conflict: " << s << '\n';
                if (verbosity == 0) break;
            }
            rc = unsafe;
        }
        note("wrote " + dir.string());
    }
    return rc;
}

// --------------------------------------------------------------------------- verify

struct VerifyArgs {
    bool quick = false;
    int scenarios = 500, seeds = 3, horizon = 1000;
    int episodes = 10000, states = 10000, inputs = 1000;
    int mutation_scenarios = 60, mutation_horizon = 400;
    int workers = 0;
    std::string mutate = "none";
    bool skip_batch = false;
};

bool apply_mutation(const std::string& name, Mutations& m) {
    if (name == "none") return true;
    if (name == "no-conflict-check") {
        m.disable_conflict_check = true;
        return true;
    }
    if (name == "halve-hvhv-stop") {
        m.halve_hvhv_stop_coef = true;
        return true;
    }
    const std::pair<const char*, int> weak[] = {
        {"weaken-s_hv", 0}, {"weaken-av_av", 4}, {"weaken-hv_av", 5}, {"weaken-hv_hv", 6}, {"weaken-av_hv", 7}};
    for (const auto& [n, tag] : weak)
        if (name == n) {
            m.separation_scale = 0.8;
            m.weaken_formula = tag;
            return true;
        }
    return false;
}

void print_row(const SuiteResult& r) {
    std::printf("%-4s  %-44s %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(), r.seconds);
    std::fflush(stdout);
}

std::vector<SuiteResult> batch_rows(const BatchOutcome& o) {
    auto row = [&](const std::string& name, bool pass, const std::string& detail) {
        return SuiteResult{name, pass, detail, o.seconds};
    };
    const std::string runs = std::to_string(o.runs) + " runs";
    std::string first = o.examples.empty() ? "" : "; first: " + o.examples.front();
    return {
        row("batch: check_safety", o.violations == 0 && o.fatal == 0,
            runs + ", " + std::to_string(o.violations) + " violations, " + std::to_string(o.fatal) + " fatal" + first),
        row("batch: reservation conflict-freedom", o.reservation_conflicts == 0, std::to_string(o.reservation_conflicts) + " conflicting slots"),
        row("batch: signal policy", o.policy1 == 0, std::to_string(o.policy1) + " findings"),
        row("batch: planner never infeasible", o.infeasible == 0, std::to_string(o.infeasible) + " infeasible-state"),
        row("batch: VHV braking limit", o.vhv_limit == 0, std::to_string(o.vhv_limit) + " commands beyond a_hv"),
    };
}

int cmd_verify(VerifyArgs a) {
    if (a.quick) {
        a.scenarios = 20, a.seeds = 1, a.horizon = 300;
        a.episodes = 500, a.states = 500, a.inputs = 200;
        a.mutation_scenarios = 20, a.mutation_horizon = 300;
    }
    Params p;
    if (!apply_mutation(a.mutate, p.mut)) {
        std::cerr << "error: unknown mutation '" << a.mutate << "'\n";
        return usage;
    }
    std::vector<SuiteResult> rows;
    auto add = [&](SuiteResult r) {
        print_row(r);
        rows.push_back(std::move(r));
    };
    for (auto& r : separation_suite(p, a.episodes, 2024)) add(r);
    add(feasibility_suite(p, a.states, 7));
    add(kinematics_suite(p, a.inputs, 11));
    add(special_case_suite(p));
    if (!a.skip_batch) {
        BatchConfig b;
        b.scenarios = a.scenarios, b.seeds = a.seeds, b.horizon = a.horizon, b.workers = a.workers, b.params = p;
        note("running " + std::to_string(a.scenarios * a.seeds) + " simulations");
        for (auto& r : batch_rows(run_batch(b))) add(r);
        add(determinism_suite(p, std::min(a.horizon, 300)));
        if (a.mutate == "none") {
            BatchConfig m = b;
            m.scenarios = a.mutation_scenarios, m.seeds = 1, m.horizon = a.mutation_horizon;
            for (auto& r : mutation_suite(m)) add(r);
        }
    }
    int failed = 0;
    for (const auto& r : rows) failed += !r.pass;
    std::printf("%d of %zu checks passed\n", static_cast<int>(rows.size()) - failed, rows.size());
    return failed ? unsafe : ok;
}

// --------------------------------------------------------------------------- sweep

// accepts plain values or start:stop:step ranges
bool expand_axis(const std::vector<std::string>& items, std::vector<double>& out, std::string& err) {
    for (const auto& it : items) {
        std::vector<double> parts;
        std::stringstream ss(it);
        std::string tok;
        while (std::getline(ss, tok, ':')) {
            try {
                size_t used = 0;
                parts.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                err = "bad axis value '" + it + "'";
                return false;
            }
        }
        if (parts.size() == 1) {
            out.push_back(parts[0]);
        } else if (parts.size() == 3) {
            if (!(parts[2] > 0)) {
                err = "sweep step must be positive in '" + it + "'";
                return false;
            }
            const long n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
            for (long k = 0; k <= n; ++k) out.push_back(parts[0] + k * parts[2]);
        } else {
            err = "axis entries are a value or start:stop:step, got '" + it + "'";
            return false;
        }
    }
    return true;
}

struct SweepArgs {
    std::string scenario;
    std::vector<std::string> fractions{"0:1:0.25"};
    std::vector<std::string> rates;
    std::vector<uint64_t> seeds{1};
    int horizon = 0;
    std::string hv_mode;
    std::string out = "sweep.csv";
    int workers = 0;
};

int cmd_sweep(const SweepArgs& a) {
    Scenario base;
    base.name = "sweep";
    base.stochastic = StochasticArrivals{};
    if (!a.scenario.empty()) {
        if (int rc = load(a.scenario, base)) return rc;
        if (!base.stochastic) base.stochastic = StochasticArrivals{};
    }
    if (a.horizon > 0) base.horizon = a.horizon;
    if (!a.hv_mode.empty()) base.hv_mode = parse_hv_mode(a.hv_mode);

    std::vector<double> fr, rt;
    std::string err;
    if (!expand_axis(a.fractions, fr, err) || !expand_axis(a.rates, rt, err)) {
        std::cerr << "error: " << err << '\n';
        return usage;
    }
    if (a.rates.empty()) rt.push_back(base.stochastic->rate);
    for (double f : fr)
        if (f < 0 || f > 1) {
            std::cerr << "error: HV fraction " << f << " outside [0, 1]\n";
            return usage;
        }
    for (double r : rt)
        if (r < 0) {
            std::cerr << "error: negative demand " << r << '\n';
            return usage;
        }

    struct Cell {
        double fraction, rate;
        uint64_t seed;
        Metrics m;
        int violations = 0, reservation_conflicts = 0, policy1 = 0;
        bool fatal = false;
    };
    std::vector<Cell> cells;
    for (double f : fr)
        for (double r : rt)
            for (uint64_t s : a.seeds) cells.push_back({f, r, s, {}});
    if (cells.empty()) {
        std::cerr << "error: empty sweep\n";
        return usage;
    }
    try {
        validate_scenario(base);
    } catch (const ModelError& e) {
        std::cerr << "error [" << e.code << "]: " << e.what() << '\n';
        return invariant_error;
    }

    RunOptions opt;
    opt.trace = false;
    opt.state_samples = false;
    std::atomic<size_t> next{0};
    std::mutex mu;
    auto worker = [&]() {
        for (size_t k; (k = next++) < cells.size();) {
            Cell& c = cells[k];
            Scenario sc = base;
            sc.stochastic->hv_fraction = c.fraction;
            sc.stochastic->rate = c.rate;
            const RunResult r = run(sc, c.seed, opt);
            c.m = r.report.metrics;
            c.violations = static_cast<int>(r.report.violations.size());
            c.reservation_conflicts = static_cast<int>(r.report.reservation_conflicts.size());
            c.policy1 = static_cast<int>(r.report.policy1.size());
            c.fatal = !r.report.fatal_code.empty();
            std::lock_guard<std::mutex> lk(mu);
            note("cell fraction " + std::to_string(c.fraction) + " rate " + std::to_string(c.rate) + " seed " +
                 std::to_string(c.seed) + " done");
        }
    };
    int n = a.workers > 0 ? a.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    n = std::min<int>(n, static_cast<int>(cells.size()));
    std::vector<std::thread> pool;
    for (int i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::ostringstream csv;
    csv.precision(17);
    csv << "hv_fraction,rate,seed,spawned,exited,throughput_per_hour,mean_delay,stops_hv,stops_av,violations,"
           "reservation_conflicts,signal_findings,fatal\n";
    int bad = 0;
    for (const auto& c : cells) {
        csv << c.fraction << ',' << c.rate << ',' << c.seed << ',' << c.m.spawned << ',' << c.m.exited << ','
            << c.m.throughput << ',' << c.m.mean_delay << ',' << c.m.stops_hv << ',' << c.m.stops_av << ','
            << c.violations << ',' << c.reservation_conflicts << ',' << c.policy1 << ',' << (c.fatal ? 1 : 0) << '\n';
        bad += c.violations + c.reservation_conflicts + c.policy1 + c.fatal;
    }
    if (!write_file(a.out, csv.str())) {
        std::cerr << "error: cannot write " << a.out << '\n';
        return usage;
    }
    std::printf("%zu cells, %d findings, written to %s\n", cells.size(), bad, a.out.c_str());
    return bad ? unsafe : ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed-traffic intersection simulator"};
    app.require_subcommand(1);
    app.add_flag("-v,--verbose", verbosity, "More diagnostics on stderr (repeatable)");

    RunArgs ra;
    auto* run_cmd = app.add_subcommand("run", "Simulate one scenario file");
    run_cmd->add_option("-s,--scenario", ra.scenario, "Scenario file")->required();
    run_cmd->add_option("--seed", ra.seeds, "One or more seeds");
    run_cmd->add_option("--horizon", ra.horizon, "Override the horizon in slots")->check(CLI::PositiveNumber);
    run_cmd->add_option("-o,--out", ra.out, "Output directory");
    run_cmd->add_option("--hv-mode", ra.hv_mode, "nominal, randomized or adversarial")
        ->check(CLI::IsMember({"nominal", "randomized", "adversarial"}));
    run_cmd->add_flag("--no-checks", ra.no_checks, "Skip the reservation and signal-policy verifiers");
    run_cmd->add_flag("--no-states", ra.no_states, "Omit per-slot state samples from the trace");
    run_cmd->add_flag("--unsafe-manager", ra.unsafe_manager, "Test hook: grant permissions without the conflict check");

    VerifyArgs va;
    auto* verify_cmd = app.add_subcommand("verify", "Run the property suites and print a pass/fail matrix");
    verify_cmd->add_flag("--quick", va.quick, "Small counts for a fast smoke check");
    verify_cmd->add_option("--scenarios", va.scenarios, "Randomized scenarios in the batch")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--seeds", va.seeds, "Seeds per scenario")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--horizon", va.horizon, "Slots per batch run")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--episodes", va.episodes, "Oracle episodes per formula")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--states", va.states, "Feasibility states")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--inputs", va.inputs, "Kinematics inputs")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--workers", va.workers, "Parallel simulations (0 = all cores)");
    verify_cmd->add_option("--mutate", va.mutate,
                           "Test hook: none, no-conflict-check, halve-hvhv-stop, weaken-{s_hv,av_av,hv_av,hv_hv,av_hv}");
    verify_cmd->add_flag("--skip-batch", va.skip_batch, "Only the analytic suites");

    SweepArgs sa;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a grid of HV fraction x demand x seed and write a CSV");
    sweep_cmd->add_option("-s,--scenario", sa.scenario, "Base scenario file (default: built-in junction)");
    sweep_cmd->add_option("--hv-fractions", sa.fractions, "Values or start:stop:step")->expected(0, -1);
    sweep_cmd->add_option("--rates", sa.rates, "Arrival rates per path (veh/s), values or start:stop:step")
        ->expected(0, -1);
    sweep_cmd->add_option("--seeds", sa.seeds, "Seeds per cell")->expected(0, -1);
    sweep_cmd->add_option("--horizon", sa.horizon, "Override the horizon in slots")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--hv-mode", sa.hv_mode, "nominal, randomized or adversarial")
        ->check(CLI::IsMember({"nominal", "randomized", "adversarial"}));
    sweep_cmd->add_option("-o,--out", sa.out, "CSV output path");
    sweep_cmd->add_option("--workers", sa.workers, "Concurrent cells (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    if (*run_cmd) return cmd_run(ra);
    if (*verify_cmd) return cmd_verify(va);
    return cmd_sweep(sa);
}
