#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "xsim/geometry.hpp"
#include "xsim/separation.hpp"

using namespace xsim;

namespace {

GeometrySpec only_lanes(std::initializer_list<std::pair<int, LaneCounts>> lanes) {
    GeometrySpec g;
    for (auto& l : g.lanes) l = {0, 0, 0, 0, 0};
    for (const auto& [a, c] : lanes) g.lanes[a] = c;
    return g;
}

// distance from a point to the segment a-b
double seg_dist(Vec2 p, Vec2 a, Vec2 b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    double t = ((p.x - a.x) * vx + (p.y - a.y) * vy) / (vx * vx + vy * vy);
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - a.x - t * vx, p.y - a.y - t * vy);
}

}  // namespace

TEST_CASE("default junction: four right turns, each conflicting with exactly one path") {
    Params p;
    const auto m = build_intersection(GeometrySpec::default_junction(), p);
    CHECK(m.paths.size() == 16);
    CHECK(m.right_turn_paths() == std::vector<int>{0, 4, 8, 12});
    for (int r : m.right_turn_paths()) {
        int n = 0;
        for (size_t j = 0; j < m.paths.size(); ++j) n += m.conflicting(r, static_cast<int>(j));
        CHECK(n == 1);
        CHECK(m.right_partner(r).has_value());
    }
}

TEST_CASE("single straight path has no collision areas") {
    Params p;
    const auto m = build_intersection(only_lanes({{0, {0, 0, 1, 0, 0}}}), p);
    REQUIRE(m.paths.size() == 1);
    CHECK(m.areas.empty());
    CHECK(m.conflicts(0, 0).empty());
}

TEST_CASE("two perpendicular straights: one area, occupancy matches a 1 cm proximity sweep") {
    Params p;
    const auto m = build_intersection(only_lanes({{0, {0, 0, 1, 0, 0}}, {1, {0, 0, 1, 0, 0}}}), p);
    REQUIRE(m.paths.size() == 2);
    REQUIRE(m.areas.size() == 1);
    const auto areas = m.conflicts(0, 1);
    REQUIRE(areas.size() == 1);
    const CollisionArea& a = areas[0];

    // oracle: the centerlines are straight lines; find the crossing by sweeping path 0 against path 1
    const auto& g0 = m.paths[0];
    const auto& g1 = m.paths[1];
    const Vec2 b0 = g1.point(0), b1 = g1.point(g1.length);
    double best_s = 0, best_d = 1e18;
    for (double s = 0; s <= g0.length; s += 0.01) {
        const double d = seg_dist(g0.point(s), b0, b1);
        if (d < best_d) best_d = d, best_s = s;
    }
    CHECK(best_d < 0.01);
    const Vec2 c = g0.point(best_s);
    CHECK(dist(c, a.center) < 0.02);

    for (int k = 0; k < 2; ++k) {
        const auto& g = m.paths[a.paths[k]];
        double lo = -1, hi = -1;
        for (double s = 0; s <= g.length; s += 0.01) {
            if (dist(g.point(s), c) <= a.radius) {
                if (lo < 0) lo = s;
                hi = s;
            }
        }
        CHECK(std::abs(a.s_in[k] - lo) < 0.03);
        CHECK(std::abs(a.s_out[k] - hi) < 0.03);
    }
}

TEST_CASE("signed path distance") {
    Params p;
    const auto m = build_intersection(GeometrySpec::default_junction(), p);
    const auto& g = m.paths[1];
    CHECK(path_distance(g, 10, 35) == doctest::Approx(25));
    CHECK(path_distance(g, 20, 20) == 0);
    CHECK(path_distance(g, 35, 10) == doctest::Approx(-25));
}

TEST_CASE("regions") {
    Params p;
    const auto m = build_intersection(GeometrySpec::default_junction(), p);
    const double W = m.spec.half_width;
    CHECK(m.region_of({0, 0}) == Region::in_a_i);
    // inbound half of the south arm lies at x > 0 for right-hand traffic
    CHECK(m.region_of({1.75, -W - p.d_c - 1}) == Region::outside);
    const double mid = (p.d_h + p.d_c) / 2;
    CHECK(m.region_of({1.75, -W - mid}) == Region::in_a_c);
    CHECK(m.region_of({1.75, -W - (p.d_h - 1)}) == Region::in_a_h);

    // nesting along every path: once in A_H a vehicle stays within A_C until it exits
    for (const auto& g : m.paths) {
        bool seen_h = false, seen_i = false;
        for (double s = 0; s < g.exit; s += 0.25) {
            const Region r = m.region_on_path(g.id, s);
            if (r == Region::in_a_h) {
                CHECK_FALSE(seen_i);
                seen_h = true;
            }
            if (r == Region::in_a_i) seen_i = true;
            if (seen_h) CHECK(r != Region::in_a_c);
            CHECK(r != Region::outside);
        }
        CHECK(seen_i);
        CHECK(m.region_on_path(g.id, g.exit) == Region::exited_side);
    }
}

TEST_CASE("opposite straights do not conflict; no path conflicts with itself") {
    Params p;
    const auto m = build_intersection(GeometrySpec::default_junction(), p);
    CHECK_FALSE(m.conflicting(1, 9));
    CHECK(m.conflicts(1, 9).empty());
    for (size_t i = 0; i < m.paths.size(); ++i) CHECK(m.conflicts(static_cast<int>(i), static_cast<int>(i)).empty());
    // a straight crosses the perpendicular straights
    CHECK(m.conflicting(1, 6));
}

TEST_CASE("conflict relation is symmetric") {
    Params p;
    const auto m = build_intersection(GeometrySpec::default_junction(), p);
    for (size_t i = 0; i < m.paths.size(); ++i)
        for (size_t j = 0; j < m.paths.size(); ++j) CHECK(m.conflict[i][j] == m.conflict[j][i]);
}

TEST_CASE("load-time invariants") {
    Params p;
    Params bad = p;
    bad.d_h = bad.d_c;
    CHECK_THROWS_AS(build_intersection(GeometrySpec::default_junction(), bad), ModelError);
    try {
        build_intersection(GeometrySpec::default_junction(), bad);
    } catch (const ModelError& e) {
        CHECK(e.code == "invariant");
        CHECK(std::string(e.what()).find("d_H < d_C") != std::string::npos);
    }
    Params short_h = p;
    short_h.d_h = s_hv(p.v_max, 0, p) - 1;
    CHECK_THROWS_AS(build_intersection(GeometrySpec::default_junction(), short_h), ModelError);
    CHECK_THROWS_AS(build_intersection(only_lanes({}), p), ModelError);
}
