#include "xsim/scenario_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace xsim {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& msg) { throw ModelError("parse", msg); }

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) parse_fail(where + " must be an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) parse_fail("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void get_if(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        parse_fail(std::string("bad value for '") + key + "' in " + where);
    }
}

const char* approach_keys[4] = {"south", "east", "north", "west"};

Kind parse_kind(const std::string& s) {
    if (s == "hv" || s == "HV") return Kind::hv;
    if (s == "av" || s == "AV") return Kind::av;
    parse_fail("vehicle kind must be 'hv' or 'av', got '" + s + "'");
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        parse_fail(std::string("malformed scenario: ") + e.what());
    }
    only_keys(j, "scenario", {"name", "geometry", "params", "horizon", "hv_mode", "arrivals", "stochastic"});
    Scenario sc;
    get_if(j, "name", sc.name, "scenario");
    get_if(j, "horizon", sc.horizon, "scenario");
    if (j.contains("hv_mode")) {
        std::string m;
        get_if(j, "hv_mode", m, "scenario");
        try {
            sc.hv_mode = parse_hv_mode(m);
        } catch (const std::exception&) {
            parse_fail("hv_mode must be nominal, randomized or adversarial");
        }
    }

    if (j.contains("geometry")) {
        const json& g = j["geometry"];
        only_keys(g, "geometry", {"lanes", "half_width", "lane_width", "right_radius", "left_radius", "area_radius",
                                  "conflict_width", "exit_tail"});
        auto& G = sc.geometry;
        if (g.contains("lanes")) {
            const json& l = g["lanes"];
            only_keys(l, "geometry.lanes", {"south", "east", "north", "west"});
            for (int a = 0; a < 4; ++a) get_if(l, approach_keys[a], G.lanes[a], "geometry.lanes");
        }
        get_if(g, "half_width", G.half_width, "geometry");
        get_if(g, "lane_width", G.lane_width, "geometry");
        get_if(g, "right_radius", G.right_radius, "geometry");
        get_if(g, "left_radius", G.left_radius, "geometry");
        get_if(g, "area_radius", G.area_radius, "geometry");
        get_if(g, "conflict_width", G.conflict_width, "geometry");
        get_if(g, "exit_tail", G.exit_tail, "geometry");
    }

    if (j.contains("params")) {
        const json& q = j["params"];
        only_keys(q, "params", {"h", "micro_steps", "v_max", "a_hv_min", "a_av_min", "a_max", "t_react", "s_min",
                                "rho_min", "horizon_n", "grid_points", "d_c", "d_h", "hv_anticipation", "hv_epsilon"});
        auto& P = sc.params;
        get_if(q, "h", P.h, "params");
        get_if(q, "micro_steps", P.micro_steps, "params");
        get_if(q, "v_max", P.v_max, "params");
        get_if(q, "a_hv_min", P.a_hv_min, "params");
        get_if(q, "a_av_min", P.a_av_min, "params");
        get_if(q, "a_max", P.a_max, "params");
        get_if(q, "t_react", P.t_react, "params");
        get_if(q, "s_min", P.s_min, "params");
        get_if(q, "rho_min", P.rho_min, "params");
        get_if(q, "horizon_n", P.horizon_n, "params");
        get_if(q, "grid_points", P.grid_points, "params");
        get_if(q, "d_c", P.d_c, "params");
        get_if(q, "d_h", P.d_h, "params");
        get_if(q, "hv_anticipation", P.hv_anticipation, "params");
        get_if(q, "hv_epsilon", P.hv_epsilon, "params");
    }

    if (j.contains("arrivals")) {
        if (!j["arrivals"].is_array()) parse_fail("arrivals must be a list");
        for (const auto& a : j["arrivals"]) {
            only_keys(a, "arrival", {"slot", "kind", "path", "v0"});
            if (!a.contains("path") || !a.contains("kind")) parse_fail("arrival needs 'kind' and 'path'");
            Arrival r;
            std::string kind;
            get_if(a, "slot", r.slot, "arrival");
            get_if(a, "kind", kind, "arrival");
            get_if(a, "path", r.path, "arrival");
            get_if(a, "v0", r.v0, "arrival");
            r.kind = parse_kind(kind);
            r.path -= 1;  // files number paths from 1
            sc.arrivals.push_back(r);
        }
    }

    if (j.contains("stochastic") && !j["stochastic"].is_null()) {
        const json& s = j["stochastic"];
        only_keys(s, "stochastic", {"rate", "hv_fraction", "v0_min", "v0_max", "paths"});
        StochasticArrivals st;
        get_if(s, "rate", st.rate, "stochastic");
        get_if(s, "hv_fraction", st.hv_fraction, "stochastic");
        get_if(s, "v0_min", st.v0_min, "stochastic");
        get_if(s, "v0_max", st.v0_max, "stochastic");
        get_if(s, "paths", st.paths, "stochastic");
        for (int& q : st.paths) q -= 1;
        sc.stochastic = st;
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) parse_fail("cannot open scenario file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string serialize_scenario(const Scenario& sc) {
    json j;
    j["name"] = sc.name;
    j["horizon"] = sc.horizon;
    j["hv_mode"] = hv_mode_name(sc.hv_mode);
    const auto& G = sc.geometry;
    json lanes;
    for (int a = 0; a < 4; ++a) lanes[approach_keys[a]] = G.lanes[a];
    j["geometry"] = {{"lanes", lanes},
                     {"half_width", G.half_width},
                     {"lane_width", G.lane_width},
                     {"right_radius", G.right_radius},
                     {"left_radius", G.left_radius},
                     {"area_radius", G.area_radius},
                     {"conflict_width", G.conflict_width},
                     {"exit_tail", G.exit_tail}};
    const auto& P = sc.params;
    j["params"] = {{"h", P.h},
                   {"micro_steps", P.micro_steps},
                   {"v_max", P.v_max},
                   {"a_hv_min", P.a_hv_min},
                   {"a_av_min", P.a_av_min},
                   {"a_max", P.a_max},
                   {"t_react", P.t_react},
                   {"s_min", P.s_min},
                   {"rho_min", P.rho_min},
                   {"horizon_n", P.horizon_n},
                   {"grid_points", P.grid_points},
                   {"d_c", P.d_c},
                   {"d_h", P.d_h},
                   {"hv_anticipation", P.hv_anticipation},
                   {"hv_epsilon", P.hv_epsilon}};
    json arr = json::array();
    for (const auto& a : sc.arrivals)
        arr.push_back({{"slot", a.slot}, {"kind", a.kind == Kind::hv ? "hv" : "av"}, {"path", a.path + 1}, {"v0", a.v0}});
    j["arrivals"] = arr;
    if (sc.stochastic) {
        const auto& s = *sc.stochastic;
        std::vector<int> paths;
        for (int q : s.paths) paths.push_back(q + 1);
        j["stochastic"] = {{"rate", s.rate},
                           {"hv_fraction", s.hv_fraction},
                           {"v0_min", s.v0_min},
                           {"v0_max", s.v0_max},
                           {"paths", paths}};
    }
    return j.dump(2) + "\n";
}

}  // namespace xsim
