#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "xsim/separation.hpp"
#include "xsim/world.hpp"

namespace xsim {

struct ReferenceObject {
    int target = -1;          // vehicle id, or -1 for the stop point p_gamma
    bool stop_point = false;
    double sampled_v_ro = 0;  // v_ro at t-h
    double gap = 0;           // current distance along the frame
    double worst_case_decel = 0;
    LeadKind lead_kind = LeadKind::av;
    // predicted progress over slot k and predicted v_ro used with the slot-k speed
    std::vector<double> travel, v_pred;
};

struct PlanResult {
    std::vector<ControlInput> inputs;
    enum class By { optimizer, fallback_brake } feasible_by = By::optimizer;
    double cost = 0;
    std::vector<double> speeds() const;
};

double effective_brake_limit(const Vehicle& c, const Params& p);

ControlInput fallback_brake(const Vehicle& c, const PathGeometry& path, const Params& p);

// Fills travel / v_pred for an N-slot horizon.
void predict_reference(ReferenceObject& ro, int n, const Params& p);

std::vector<ReferenceObject> select_reference_object(const Vehicle& c, const World& w, bool permitted);

using PlanObjective = std::function<double(int k, double v)>;

struct PlanInput {
    double v_now = 0;  // speed over the last slot
    double a_min = 0;  // effective braking limit
    OwnLimit own = OwnLimit::av_limited;
    std::vector<ReferenceObject> refs;
};

// Throws ModelError("infeasible-state") when even braking at a_min violates a constraint.
PlanResult plan(const PlanInput& in, const PathGeometry& path, double s_now, const Params& p,
                const PlanObjective& objective = {});

// Independent re-check of every horizon constraint for a speed sequence. Returns the worst slack.
double plan_min_slack(const PlanInput& in, const std::vector<double>& speeds, const Params& p);

PlanInput plan_input_for(const Vehicle& c, const World& w);

}  // namespace xsim
