#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "xsim/params.hpp"

namespace xsim {

struct Vec2 {
    double x = 0, y = 0;
};

struct Pose {
    double x = 0, y = 0, theta = 0;
};

double dist(Vec2 a, Vec2 b);

// Straight (curvature 0) or circular arc; curvature is signed, positive turns left.
struct Segment {
    double s0 = 0;
    double length = 0;
    Vec2 start;
    double heading = 0;
    double curvature = 0;
    Pose pose_at(double u) const;
};

enum class Turn { left, straight, right };
const char* turn_name(Turn t);

// Approaches: 0 south (heading north), 1 east (heading west), 2 north, 3 west.
struct PathGeometry {
    int id = 0;  // zero-based; gamma_{id+1}
    Turn kind = Turn::straight;
    int approach = 0;
    int lane = 0;  // 0 is the innermost in-lane
    std::vector<Segment> segments;
    double length = 0;
    double entry = 0;  // arc length of p_gamma
    double exit = 0;

    Pose pose(double s) const;
    Vec2 point(double s) const;
    double curvature(double s) const;
};

struct CollisionArea {
    Vec2 center;
    double radius = 0;
    std::array<int, 2> paths{};
    std::array<double, 2> s_in{}, s_out{};
    bool merge = false;

    bool occupies(int path, double s) const;
};

// How two paths relate for car following: a shared in-lane stretch and/or a shared out-lane stretch.
struct Corridor {
    double prefix = 0;  // both paths coincide (within the footprint) for s < prefix
    bool merge = false;
    double m_self = 0, m_other = 0;  // merge point on each path
    bool self_sees_upstream = false;  // vehicles on self before entry are part of the merged frame
    bool other_sees_upstream = false;
};

// l[0] left-only, l[1] left+straight, l[2] straight-only, l[3] straight+right, l[4] right-only
using LaneCounts = std::array<int, 5>;

struct GeometrySpec {
    std::array<LaneCounts, 4> lanes{};
    double half_width = 30.0;
    double lane_width = 3.5;
    double right_radius = 8.0;
    double left_radius = 12.0;
    double area_radius = 10.0;
    double conflict_width = 2.5;
    double exit_tail = 20.0;

    static GeometrySpec default_junction();
    bool operator==(const GeometrySpec&) const = default;
};

enum class Region { outside, in_a_c, in_a_h, in_a_i, exited_side };
const char* region_name(Region r);

struct IntersectionModel {
    GeometrySpec spec;
    std::vector<PathGeometry> paths;
    std::vector<CollisionArea> areas;
    double d_c = 0, d_h = 0;

    std::vector<std::vector<char>> conflict;           // [i][j]
    std::vector<std::vector<Corridor>> corridor;       // [i][j], i != j
    std::vector<std::vector<int>> areas_of_path;

    bool conflicting(int i, int j) const { return conflict[i][j] != 0; }
    std::vector<CollisionArea> conflicts(int i, int j) const;
    std::vector<int> right_turn_paths() const;
    bool is_right(int i) const { return paths[i].kind == Turn::right; }
    // the single path a right turn conflicts with, if any
    std::optional<int> right_partner(int i) const;
    Region region_of(Vec2 p) const;
    Region region_on_path(int path, double s) const;
};

double path_distance(const PathGeometry& g, double s_a, double s_b);

IntersectionModel build_intersection(const GeometrySpec& spec, const Params& p);

}  // namespace xsim
