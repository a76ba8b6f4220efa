#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TmpDir {
    fs::path path;
    TmpDir() {
        path = fs::temp_directory_path() / ("xsim-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string operator/(const std::string& s) const { return (path / s).string(); }
};

struct Out {
    int code;
    std::string out, err;
};

std::string slurp(const std::string& f) {
    std::ifstream in(f);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Out cli(const std::string& args, const TmpDir& d) {
    const std::string o = d / "stdout.txt", e = d / "stderr.txt";
    const std::string cmd = std::string(XSIM_CLI_PATH) + " " + args + " >" + o + " 2>" + e;
    const int st = std::system(cmd.c_str());
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, slurp(o), slurp(e)};
}

void write(const std::string& f, const std::string& s) { std::ofstream(f) << s; }

std::vector<std::string> csv_lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);)
        if (!l.empty()) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    for (std::string c; std::getline(ss, c, ',');) out.push_back(c);
    return out;
}

const std::string example = std::string(XSIM_SOURCE_DIR) + "/scenarios/example.json";

}  // namespace

TEST_CASE("run: valid scenario writes trace, metrics and report") {
    TmpDir d;
    const Out r = cli("run -s " + example + " --horizon 120 -o " + (d / "out"), d);
    CHECK(r.code == 0);
    CHECK(fs::exists(d / "out/trace.jsonl"));
    CHECK(fs::exists(d / "out/metrics.csv"));
    REQUIRE(fs::exists(d / "out/report.json"));
    const json rep = json::parse(slurp(d / "out/report.json"));
    CHECK(rep["safe"] == true);
    CHECK(rep["horizon"] == 120);
    CHECK(rep["violations"].empty());
}

TEST_CASE("run: several seeds go to separate directories") {
    TmpDir d;
    const Out r = cli("run -s " + example + " --horizon 40 --seed 1 2 -o " + (d / "out"), d);
    CHECK(r.code == 0);
    CHECK(fs::exists(d / "out/seed-1/trace.jsonl"));
    CHECK(fs::exists(d / "out/seed-2/report.json"));
}

TEST_CASE("run: malformed scenario is a parse error") {
    TmpDir d;
    write(d / "bad.json", "{ \"horizon\": ");
    CHECK(cli("run -s " + (d / "bad.json") + " -o " + (d / "out"), d).code == 2);
    write(d / "unknown.json", "{ \"horizonn\": 10 }");
    CHECK(cli("run -s " + (d / "unknown.json") + " -o " + (d / "out"), d).code == 2);
}

TEST_CASE("run: violated load-time invariant") {
    TmpDir d;
    write(d / "inv.json", R"({ "params": { "d_c": 50, "d_h": 50 } })");
    const Out r = cli("run -s " + (d / "inv.json") + " -o " + (d / "out"), d);
    CHECK(r.code == 3);
    CHECK(r.err.find("invariant") != std::string::npos);
}

TEST_CASE("run: sabotaged manager is reported unsafe") {
    TmpDir d;
    // two AVs on crossing straights at the same time
    write(d / "cross.json", R"({ "horizon": 120,
        "arrivals": [ {"slot": 0, "kind": "av", "path": 2, "v0": 14},
                      {"slot": 0, "kind": "av", "path": 7, "v0": 14} ] })");
    CHECK(cli("run -s " + (d / "cross.json") + " -o " + (d / "ok"), d).code == 0);
    const Out r = cli("run -s " + (d / "cross.json") + " --unsafe-manager -o " + (d / "bad"), d);
    CHECK(r.code == 4);
    const json rep = json::parse(slurp(d / "bad/report.json"));
    CHECK(rep["safe"] == false);
}

TEST_CASE("usage errors") {
    TmpDir d;
    CHECK(cli("", d).code == 1);
    CHECK(cli("run", d).code == 1);
    CHECK(cli("run -s " + example + " --hv-mode sometimes", d).code == 1);
    CHECK(cli("verify --mutate nothing-real --skip-batch", d).code == 1);
}

TEST_CASE("sweep: grid of HV fraction by demand") {
    TmpDir d;
    const Out r = cli("sweep --hv-fractions 0:1:0.25 --rates 0.02 0.04 0.06 0.08 0.1 --horizon 30 -o " + (d / "s.csv"), d);
    CHECK(r.code == 0);
    const auto rows = csv_lines(slurp(d / "s.csv"));
    REQUIRE(rows.size() == 26);
    CHECK(rows[0] ==
          "hv_fraction,rate,seed,spawned,exited,throughput_per_hour,mean_delay,stops_hv,stops_av,violations,"
          "reservation_conflicts,signal_findings,fatal");
    for (size_t i = 1; i < rows.size(); ++i) CHECK(split(rows[i]).size() == 13);
}

TEST_CASE("sweep: empty axis") {
    TmpDir d;
    const Out r = cli("sweep --hv-fractions 1:0:0.25 -o " + (d / "s.csv"), d);
    CHECK(r.code == 1);
    CHECK(r.err.find("empty sweep") != std::string::npos);
}

TEST_CASE("sweep: a single cell matches the equivalent run") {
    TmpDir d;
    write(d / "cell.json", R"({ "name": "cell", "horizon": 150,
        "stochastic": { "rate": 0.05, "hv_fraction": 0.5 } })");
    REQUIRE(cli("run -s " + (d / "cell.json") + " --seed 7 -o " + (d / "out"), d).code == 0);
    REQUIRE(cli("sweep -s " + (d / "cell.json") + " --hv-fractions 0.5 --rates 0.05 --seeds 7 -o " + (d / "s.csv"), d).code ==
            0);
    const json rep = json::parse(slurp(d / "out/report.json"));
    const auto rows = csv_lines(slurp(d / "s.csv"));
    REQUIRE(rows.size() == 2);
    const auto c = split(rows[1]);
    CHECK(std::stoi(c[3]) == rep["metrics"]["spawned"].get<int>());
    CHECK(std::stoi(c[4]) == rep["metrics"]["exited"].get<int>());
    CHECK(std::stod(c[5]) == doctest::Approx(rep["metrics"]["throughput_per_hour"].get<double>()));
    CHECK(std::stod(c[6]) == doctest::Approx(rep["metrics"]["mean_delay"].get<double>()));
}

TEST_CASE("verify: quick matrix passes") {
    TmpDir d;
    const Out r = cli("verify --quick", d);
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(r.out.find("PASS  determinism") != std::string::npos);
}

TEST_CASE("verify: halving the HV-HV stopping term is caught by the oracle") {
    TmpDir d;
    const Out r = cli("verify --quick --skip-batch --mutate halve-hvhv-stop", d);
    CHECK(r.code == 4);
    CHECK(r.out.find("FAIL  separation s_hv^hv") != std::string::npos);
}

TEST_CASE("verify: disabling the permission conflict check is caught") {
    TmpDir d;
    const Out r = cli("verify --quick --mutate no-conflict-check", d);
    CHECK(r.code == 4);
    CHECK(r.out.find("FAIL  batch: reservation conflict-freedom") != std::string::npos);
}
