#include "xsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "xsim/separation.hpp"

namespace xsim {

double dist(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

Pose Segment::pose_at(double u) const {
    if (curvature == 0.0) return {start.x + u * std::cos(heading), start.y + u * std::sin(heading), heading};
    const double th = heading + curvature * u;
    return {start.x + (std::sin(th) - std::sin(heading)) / curvature,
            start.y - (std::cos(th) - std::cos(heading)) / curvature, th};
}

const char* turn_name(Turn t) {
    switch (t) {
        case Turn::left: return "left";
        case Turn::straight: return "straight";
        case Turn::right: return "right";
    }
    return "?";
}

const char* region_name(Region r) {
    switch (r) {
        case Region::outside: return "outside";
        case Region::in_a_c: return "in_A_C";
        case Region::in_a_h: return "in_A_H";
        case Region::in_a_i: return "in_A_I";
        case Region::exited_side: return "exited_side";
    }
    return "?";
}

static const Segment& segment_for(const std::vector<Segment>& segs, double s) {
    auto it = std::upper_bound(segs.begin(), segs.end(), s, [](double v, const Segment& g) { return v < g.s0; });
    if (it == segs.begin()) return segs.front();
    return *(it - 1);
}

Pose PathGeometry::pose(double s) const {
    const Segment& g = segment_for(segments, s);
    return g.pose_at(s - g.s0);
}

Vec2 PathGeometry::point(double s) const {
    Pose p = pose(s);
    return {p.x, p.y};
}

double PathGeometry::curvature(double s) const { return segment_for(segments, s).curvature; }

bool CollisionArea::occupies(int path, double s) const {
    for (int k = 0; k < 2; ++k)
        if (paths[k] == path && s >= s_in[k] && s <= s_out[k]) return true;
    return false;
}

double path_distance(const PathGeometry&, double s_a, double s_b) { return s_b - s_a; }

GeometrySpec GeometrySpec::default_junction() {
    GeometrySpec g;
    for (auto& l : g.lanes) l = {1, 0, 1, 1, 0};
    return g;
}

std::vector<CollisionArea> IntersectionModel::conflicts(int i, int j) const {
    std::vector<CollisionArea> out;
    if (i == j) return out;
    for (int k : areas_of_path[i])
        if (areas[k].paths[0] == j || areas[k].paths[1] == j) out.push_back(areas[k]);
    return out;
}

std::vector<int> IntersectionModel::right_turn_paths() const {
    std::vector<int> r;
    for (const auto& p : paths)
        if (p.kind == Turn::right) r.push_back(p.id);
    return r;
}

std::optional<int> IntersectionModel::right_partner(int i) const {
    for (size_t j = 0; j < paths.size(); ++j)
        if (conflict[i][j]) return static_cast<int>(j);
    return std::nullopt;
}

Region IntersectionModel::region_of(Vec2 p) const {
    const double w = spec.half_width;
    const double dx = std::max(0.0, std::abs(p.x) - w), dy = std::max(0.0, std::abs(p.y) - w);
    const double d = std::hypot(dx, dy);
    if (d == 0.0) return Region::in_a_i;
    if (d > d_c) return Region::outside;
    // right-hand traffic: the outbound half of an arm lies to the left of a vehicle approaching on it
    bool outbound = false;
    if (dy >= dx) outbound = p.y < 0 ? p.x < 0 : p.x > 0;
    else outbound = p.x < 0 ? p.y > 0 : p.y < 0;
    if (outbound) return Region::exited_side;
    return d <= d_h ? Region::in_a_h : Region::in_a_c;
}

Region IntersectionModel::region_on_path(int path, double s) const {
    const auto& g = paths[path];
    if (s >= g.exit) return Region::exited_side;
    if (s >= g.entry) return Region::in_a_i;
    const double d = g.entry - s;
    if (d <= d_h) return Region::in_a_h;
    if (d <= d_c) return Region::in_a_c;
    return Region::outside;
}

namespace {

struct Builder {
    std::vector<Segment> segs;
    double s = 0;
    Vec2 at;
    double heading = 0;

    void straight(double len) {
        if (len <= 1e-12) return;
        segs.push_back({s, len, at, heading, 0.0});
        Pose e = segs.back().pose_at(len);
        at = {e.x, e.y};
        s += len;
    }
    void arc(double radius, double angle) {  // angle signed, positive left
        const double k = (angle > 0 ? 1.0 : -1.0) / radius;
        const double len = std::abs(angle) * radius;
        segs.push_back({s, len, at, heading, k});
        Pose e = segs.back().pose_at(len);
        at = {e.x, e.y};
        heading = e.theta;
        s += len;
    }
};

Vec2 rotate(Vec2 v, int quarter) {
    for (int q = 0; q < ((quarter % 4) + 4) % 4; ++q) v = {-v.y, v.x};
    return v;
}

struct Movement {
    Turn kind;
    int lane;
    double in_off;
    double out_off = 0;
};

std::vector<Movement> movements_of(const LaneCounts& l) {
    // lane types innermost first
    std::vector<std::pair<bool, std::array<bool, 3>>> lanes;  // {left, straight, right}
    auto add = [&](int n, bool L, bool S, bool R) {
        for (int i = 0; i < n; ++i) lanes.push_back({true, {L, S, R}});
    };
    add(l[0], true, false, false);
    add(l[1], true, true, false);
    add(l[2], false, true, false);
    add(l[3], false, true, true);
    add(l[4], false, false, true);
    std::vector<Movement> mv;
    for (int li = static_cast<int>(lanes.size()) - 1; li >= 0; --li) {
        const auto& f = lanes[li].second;
        if (f[2]) mv.push_back({Turn::right, li, 0});
        if (f[1]) mv.push_back({Turn::straight, li, 0});
        if (f[0]) mv.push_back({Turn::left, li, 0});
    }
    return mv;
}

void fail(const std::string& msg) { throw ModelError("invariant", msg); }

}  // namespace

static void compute_pair(IntersectionModel& m, int i, int j, double ds) {
    const auto& a = m.paths[i];
    const auto& b = m.paths[j];
    const double cw = m.spec.conflict_width;
    Corridor ci, cj;

    // shared in-lane stretch
    if (dist(a.point(0), b.point(0)) < 1e-9) {
        double s = 0;
        const double lim = std::min(a.exit, b.exit);
        while (s < lim && dist(a.point(s), b.point(s)) < cw) s += ds;
        // refine
        double lo = std::max(0.0, s - ds), hi = std::min(s, lim);
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            (dist(a.point(mid), b.point(mid)) < cw ? lo : hi) = mid;
        }
        ci.prefix = cj.prefix = hi;
    }

    // shared out-lane stretch, aligned from the exit
    double ma = a.exit, mb = b.exit;
    bool merge = false;
    if (dist(a.point(a.exit), b.point(b.exit)) < 1e-9) {
        merge = true;
        double back = 0;
        const double lim = std::min(a.exit - a.entry, b.exit - b.entry);
        while (back < lim && dist(a.point(a.exit - back), b.point(b.exit - back)) < 1e-7) back += ds;
        double lo = std::max(0.0, back - ds), hi = back;
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            (dist(a.point(a.exit - mid), b.point(b.exit - mid)) < 1e-7 ? lo : hi) = mid;
        }
        ma = a.exit - lo;
        mb = b.exit - lo;
        ci.merge = cj.merge = true;
        ci.m_self = ma;
        ci.m_other = mb;
        cj.m_self = mb;
        cj.m_other = ma;
        const bool ra = a.kind == Turn::right, rb = b.kind == Turn::right;
        ci.self_sees_upstream = !ra && rb;
        ci.other_sees_upstream = ra && !rb;
        cj.self_sees_upstream = ci.other_sees_upstream;
        cj.other_sees_upstream = ci.self_sees_upstream;
    }
    m.corridor[i][j] = ci;
    m.corridor[j][i] = cj;

    const double r = m.spec.area_radius;
    auto add_area = [&](Vec2 c, bool is_merge) {
        CollisionArea ar;
        ar.center = c;
        ar.radius = r;
        ar.paths = {i, j};
        ar.merge = is_merge;
        for (int k = 0; k < 2; ++k) {
            const auto& g = m.paths[ar.paths[k]];
            // closest point, then grow the interval while inside the disk
            double best = 0, bd = 1e18;
            for (double s = 0; s <= g.exit; s += ds) {
                double d = dist(g.point(s), c);
                if (d < bd) bd = d, best = s;
            }
            auto inside = [&](double s) { return dist(g.point(s), c) <= r; };
            auto edge = [&](double in, double out) {
                for (int it = 0; it < 60; ++it) {
                    double mid = 0.5 * (in + out);
                    (inside(mid) ? in : out) = mid;
                }
                return in;
            };
            double lo = best, hi = best;
            while (lo > 0 && inside(lo - ds)) lo -= ds;
            while (hi < g.length && inside(hi + ds)) hi += ds;
            ar.s_in[k] = lo - ds >= 0 ? edge(lo, lo - ds) : 0.0;
            ar.s_out[k] = hi + ds <= g.length ? edge(hi, hi + ds) : g.length;
        }
        m.areas_of_path[i].push_back(static_cast<int>(m.areas.size()));
        m.areas_of_path[j].push_back(static_cast<int>(m.areas.size()));
        m.areas.push_back(ar);
        m.conflict[i][j] = m.conflict[j][i] = 1;
    };

    if (merge) add_area(a.point(ma), true);

    // crossings: sampled proximity away from shared stretches
    const double cs = 0.25;
    std::vector<std::pair<double, Vec2>> pa, pb;
    for (double s = std::max(a.entry, ci.prefix); s <= a.exit; s += cs) pa.push_back({s, a.point(s)});
    for (double s = std::max(b.entry, cj.prefix); s <= b.exit; s += cs) pb.push_back({s, b.point(s)});
    auto nearest = [](const std::vector<std::pair<double, Vec2>>& pts, Vec2 q) {
        std::pair<double, double> best{1e18, 0};
        for (const auto& [s, p] : pts) best = std::min(best, {dist(p, q), s});
        return best;
    };
    double a_hi = a.exit, b_hi = b.exit;
    if (merge) {
        // the approach to a merge is part of the merge area, not a crossing
        double s = ma;
        while (s > a.entry && nearest(pb, a.point(s)).first < cw) s -= cs;
        a_hi = s;
        s = mb;
        while (s > b.entry && nearest(pa, b.point(s)).first < cw) s -= cs;
        b_hi = s;
        std::erase_if(pa, [&](const auto& e) { return e.first >= a_hi; });
        std::erase_if(pb, [&](const auto& e) { return e.first >= b_hi; });
    }
    auto refine = [&](double sa, double sb) {
        double best = dist(a.point(sa), b.point(sb));
        for (double step = cs; step > 1e-10; step *= 0.5) {
            bool moved = true;
            while (moved) {
                moved = false;
                for (auto [da, db] : {std::pair{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}}) {
                    double na = std::clamp(sa + da, a.entry, a_hi), nb = std::clamp(sb + db, b.entry, b_hi);
                    double d = dist(a.point(na), b.point(nb));
                    if (d < best) best = d, sa = na, sb = nb, moved = true;
                }
            }
        }
        Vec2 qa = a.point(sa), qb = b.point(sb);
        return Vec2{(qa.x + qb.x) / 2, (qa.y + qb.y) / 2};
    };
    // each run of close samples along a is one crossing
    double run_best = 1e18, run_sa = 0, run_sb = 0;
    bool in_run = false;
    auto close_run = [&]() {
        if (in_run) add_area(refine(run_sa, run_sb), false);
        in_run = false;
        run_best = 1e18;
    };
    for (const auto& [sa, qa] : pa) {
        auto [bd, sb] = nearest(pb, qa);
        if (bd < cw) {
            in_run = true;
            if (bd < run_best) run_best = bd, run_sa = sa, run_sb = sb;
        } else {
            close_run();
        }
    }
    close_run();
}

IntersectionModel build_intersection(const GeometrySpec& spec, const Params& p) {
    if (spec.half_width <= 0 || spec.lane_width <= 0 || spec.area_radius <= 0 || spec.conflict_width <= 0 ||
        spec.right_radius <= 0 || spec.left_radius <= 0 || spec.exit_tail <= 0)
        fail("geometric dimensions must be positive");
    for (const auto& l : spec.lanes)
        for (int n : l)
            if (n < 0) fail("lane counts must be non-negative");
    if (!(p.d_h < p.d_c)) fail("d_H < d_C violated");
    if (p.d_h < s_hv(p.v_max, 0, p)) fail("d_H >= s_hv(v_max, 0) violated");
    if (p.d_c < d_c_lower_bound(p)) fail("d_C lower bound violated");
    if (spec.right_radius < p.rho_min || spec.left_radius < p.rho_min) fail("turn radius below rho_min");

    IntersectionModel m;
    m.spec = spec;
    m.d_c = p.d_c;
    m.d_h = p.d_h;
    const double W = spec.half_width, w = spec.lane_width;

    for (int ap = 0; ap < 4; ++ap) {
        auto mv = movements_of(spec.lanes[ap]);
        // out-lane assignment: straights keep their offset, lefts fill from the inside, rights keep their lane
        int left_k = 0;
        std::vector<int> left_order;
        for (size_t k = 0; k < mv.size(); ++k) mv[k].in_off = (mv[k].lane + 0.5) * w;
        for (int k = static_cast<int>(mv.size()) - 1; k >= 0; --k)
            if (mv[k].kind == Turn::left) mv[k].out_off = (left_k++ + 0.5) * w;
        for (auto& mm : mv)
            if (mm.kind != Turn::left) mm.out_off = mm.in_off;

        for (const auto& mm : mv) {
            Builder b;
            b.at = {mm.in_off, -W - p.d_c};
            b.heading = std::numbers::pi / 2;
            b.straight(p.d_c);
            const double entry = b.s;
            double interior = 0;
            if (mm.kind == Turn::straight) {
                b.straight(2 * W);
            } else if (mm.kind == Turn::right) {
                const double R = spec.right_radius;
                const double pre = W - mm.out_off - R;
                if (pre < 0 || mm.in_off + R > W) fail("right-turn arc does not fit inside the junction");
                b.straight(pre);
                b.arc(R, -std::numbers::pi / 2);
                b.straight(W - (mm.in_off + R));
            } else {
                const double R = spec.left_radius;
                const double pre = W + mm.out_off - R;
                const double post = W + mm.in_off - R;
                if (pre < 0 || post < 0) fail("left-turn arc does not fit inside the junction");
                b.straight(pre);
                b.arc(R, std::numbers::pi / 2);
                b.straight(post);
            }
            interior = b.s - entry;
            b.straight(spec.exit_tail);
            PathGeometry g;
            g.id = static_cast<int>(m.paths.size());
            g.kind = mm.kind;
            g.approach = ap;
            g.lane = mm.lane;
            g.entry = entry;
            g.exit = entry + interior;
            g.length = b.s;
            for (auto sg : b.segs) {
                Vec2 st = rotate(sg.start, ap);
                sg.start = st;
                sg.heading += ap * std::numbers::pi / 2;
                g.segments.push_back(sg);
            }
            m.paths.push_back(std::move(g));
        }
    }
    if (m.paths.empty()) fail("no paths");

    const size_t n = m.paths.size();
    m.conflict.assign(n, std::vector<char>(n, 0));
    m.corridor.assign(n, std::vector<Corridor>(n));
    m.areas_of_path.assign(n, {});
    const double ds = 0.1;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) compute_pair(m, static_cast<int>(i), static_cast<int>(j), ds);

    for (const auto& a : m.areas) {
        for (int k = 0; k < 2; ++k) {
            const auto& g = m.paths[a.paths[k]];
            if (a.s_in[k] < g.entry - 1e-6) {
                std::ostringstream os;
                os << "collision area on gamma_" << g.id + 1 << " reaches upstream of its entry point";
                fail(os.str());
            }
        }
    }
    for (int r : m.right_turn_paths()) {
        int c = 0;
        for (size_t j = 0; j < n; ++j) c += m.conflict[r][j];
        if (c > 1) {
            std::ostringstream os;
            os << "right-turn path gamma_" << r + 1 << " conflicts with " << c << " paths";
            fail(os.str());
        }
    }
    return m;
}

}  // namespace xsim
