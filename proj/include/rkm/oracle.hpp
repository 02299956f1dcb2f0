#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "rkm/constraints.hpp"
#include "rkm/instance.hpp"
#include "rkm/iterround.hpp"

namespace rkm {

struct OracleResult {
    std::vector<int> best_open;
    std::vector<int> best_served;
    Rat opt_cost = 0;
    long long enumerated = 0;
};

struct OracleConstraint {
    BudgetKind kind = BudgetKind::CardinalityK;
    const PartitionMatroid* matroid = nullptr;
    const KnapsackConstraint* knapsack = nullptr;
};

// Exhaustive optimum over all feasible nonempty open sets (S0 included),
// greedily serving m clients each.  Ties go to the lexicographically
// smallest open set.
inline OracleResult brute_force(const ClusteringInstance& inst,
                                const OracleConstraint& constraint = {},
                                int facility_cap = 15) {
    const int nF = inst.num_facilities;
    if (nF > facility_cap)
        throw TooLarge("brute force capped at " + std::to_string(facility_cap) +
                       " facilities");
    unsigned long s0_mask = 0;
    for (int i : inst.pre_opened) s0_mask |= 1ul << i;

    std::vector<int> cls;
    if (constraint.kind == BudgetKind::Partition)
        cls = constraint.matroid->class_of_facility(nF);

    OracleResult res;
    bool found = false;
    for (unsigned long mask = 1; mask < (1ul << nF); ++mask) {
        if ((mask & s0_mask) != s0_mask) continue;
        int popcnt = __builtin_popcountl(mask);
        std::vector<int> open;
        for (int i = 0; i < nF; ++i)
            if (mask >> i & 1) open.push_back(i);
        bool ok = true;
        switch (constraint.kind) {
            case BudgetKind::CardinalityK:
                ok = inst.k && popcnt <= *inst.k;
                break;
            case BudgetKind::Partition: {
                std::vector<int> cnt(constraint.matroid->classes.size(), 0);
                for (int i : open)
                    if (++cnt[cls[i]] > constraint.matroid->capacities[cls[i]]) ok = false;
                break;
            }
            case BudgetKind::Knapsack:
                ok = constraint.knapsack->weight_of(open) <= constraint.knapsack->budget;
                break;
        }
        if (!ok) continue;
        ++res.enumerated;
        Solution sol = solution_cost(inst, open);
        if (!found || sol.cost < res.opt_cost ||
            (sol.cost == res.opt_cost && sol.open < res.best_open)) {
            found = true;
            res.opt_cost = sol.cost;
            res.best_open = sol.open;
            res.best_served = sol.served;
        }
    }
    if (!found) throw Infeasible("no feasible open set");
    return res;
}

// Exact optimum of the natural LP relaxation.
inline Rat lp_basic_value(const ClusteringInstance& inst) {
    return solve_vertex(build_basic_lp(inst).lp).objective;
}

}  // namespace rkm
