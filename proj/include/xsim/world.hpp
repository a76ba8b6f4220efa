#pragma once

#include <optional>
#include <vector>

#include "xsim/geometry.hpp"
#include "xsim/kinematics.hpp"
#include "xsim/params.hpp"

namespace xsim {

enum class Kind { hv, av };
const char* kind_name(Kind k);

enum class Light { green, amber, red };
const char* light_name(Light l);

struct Vehicle {
    int id = 0;
    Kind kind = Kind::hv;
    VehicleState st;
    double v_boundary_prev = 0;  // momentary speed at the previous slot boundary

    bool vhv = false;
    bool permitted = false;
    bool stop_latched = false;
    bool requested = false;
    int request_slot = -1;

    double spawn_time = 0;
    double arrival_time = 0;
    double free_flow_time = 0;
    int stops = 0;
    bool halted = false;

    bool is_av() const { return kind == Kind::av; }
    bool is_hv() const { return kind == Kind::hv; }
    // treated as HV by the separation rules of its followers and leads
    bool hv_limited() const { return kind == Kind::hv || vhv; }
};

struct Neighbor {
    const Vehicle* v = nullptr;
    double gap = 0;
    explicit operator bool() const { return v != nullptr; }
};

class World {
public:
    World(const IntersectionModel& m, const Params& p);

    const IntersectionModel& model() const { return *model_; }
    const Params& params() const { return *params_; }

    std::vector<Vehicle> vehicles;  // ascending id
    std::vector<Light> lights;      // per path; right turns stay red and are ignored
    int slot = 0;

    Vehicle* find(int id);
    const Vehicle* find(int id) const;

    // Signed gap from follower (pf, sf) to lead (pl, sl) in their shared car-following frame.
    std::optional<double> frame_gap(int pf, double sf, int pl, double sl) const;
    std::optional<double> frame_gap(const Vehicle& f, const Vehicle& l) const {
        return frame_gap(f.st.path, f.st.s, l.st.path, l.st.s);
    }
    Neighbor nearest_lead_at(int path, double s, int exclude_id) const;
    Neighbor nearest_follower_at(int path, double s, int exclude_id) const;
    Neighbor nearest_lead(const Vehicle& c) const { return nearest_lead_at(c.st.path, c.st.s, c.id); }
    // Nearest lead on each related path. Frames overlap, so a farther lead in another
    // frame can be the binding one (a diverging vehicle hides a slow merging one).
    std::vector<Neighbor> leads_at(int path, double s, int exclude_id) const;
    std::vector<Neighbor> leads(const Vehicle& c) const { return leads_at(c.st.path, c.st.s, c.id); }
    std::vector<Neighbor> followers_at(int path, double s, int exclude_id) const;
    std::vector<Neighbor> followers(const Vehicle& c) const { return followers_at(c.st.path, c.st.s, c.id); }
    Neighbor nearest_follower(const Vehicle& c) const { return nearest_follower_at(c.st.path, c.st.s, c.id); }

    // y may end up following x without any new vehicle appearing
    bool potential_follower(const Vehicle& y, const Vehicle& x) const;
    // recomputes the virtual-HV flags as a fixpoint
    void compute_vhv();

    double dist_to_entry(const Vehicle& c) const { return model_->paths[c.st.path].entry - c.st.s; }
    bool past_entry(const Vehicle& c) const { return c.st.s >= model_->paths[c.st.path].entry; }
    bool in_a_h(const Vehicle& c) const { return dist_to_entry(c) <= model_->d_h; }
    Light light_of(const Vehicle& c) const { return lights[c.st.path]; }

private:
    const IntersectionModel* model_;
    const Params* params_;
    std::vector<std::vector<int>> related_;  // paths sharing a car-following frame, including self
    std::vector<std::vector<int>> related_rev_;  // paths q with p in related_[q]
};

}  // namespace xsim
