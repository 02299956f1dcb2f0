#pragma once

#include <algorithm>
#include <vector>

#include "rkm/common.hpp"
#include "rkm/instance.hpp"

namespace rkm {

// Facilities partitioned into classes with per-class opening capacities.
// rank(S) = sum_g min(|S ∩ g|, cap_g).
struct PartitionMatroid {
    std::vector<std::vector<int>> classes;
    std::vector<int> capacities;

    void validate(int num_facilities) const {
        if (classes.size() != capacities.size())
            throw BadParams("partition classes/capacities size mismatch");
        std::vector<int> seen(num_facilities, 0);
        for (const auto& g : classes)
            for (int i : g) {
                if (i < 0 || i >= num_facilities)
                    throw BadParams("partition class member out of range");
                if (seen[i]++) throw BadParams("partition classes overlap");
            }
        for (int i = 0; i < num_facilities; ++i)
            if (!seen[i]) throw BadParams("partition classes do not cover F");
        for (int c : capacities)
            if (c < 0) throw BadParams("negative class capacity");
    }

    std::vector<int> class_of_facility(int num_facilities) const {
        std::vector<int> cls(num_facilities, -1);
        for (int g = 0; g < (int)classes.size(); ++g)
            for (int i : classes[g]) cls[i] = g;
        return cls;
    }

    bool independent(const std::vector<int>& open, int num_facilities) const {
        auto cls = class_of_facility(num_facilities);
        std::vector<int> cnt(classes.size(), 0);
        for (int i : open)
            if (++cnt[cls[i]] > capacities[cls[i]]) return false;
        return true;
    }

    int total_capacity() const {
        int t = 0;
        for (int c : capacities) t += c;
        return t;
    }
};

// sum_{i in S} w_i <= W
struct KnapsackConstraint {
    std::vector<Rat> weights;
    Rat budget = 0;

    void validate(int num_facilities) const {
        if ((int)weights.size() != num_facilities)
            throw BadParams("knapsack weight vector size mismatch");
        for (const auto& w : weights)
            if (w < 0) throw BadParams("negative facility weight");
        if (budget < 0) throw BadParams("negative knapsack budget");
    }

    Rat weight_of(const std::vector<int>& open) const {
        Rat t = 0;
        for (int i : open) t += weights[i];
        return t;
    }
};

// Collects invariant check outcomes; throws on the first failure unless the
// caller opts into collect-only mode (cmd_verify fault reporting).
struct InvariantLog {
    struct Entry {
        std::string name;
        bool pass;
        std::string context;
    };
    std::vector<Entry> entries;
    bool throw_on_fail = true;

    void check(bool cond, const std::string& name, const std::string& ctx = "") {
        entries.push_back({name, cond, ctx});
        if (!cond && throw_on_fail)
            throw InvariantViolation(name + (ctx.empty() ? "" : " [" + ctx + "]"));
    }
    bool all_pass() const {
        return std::all_of(entries.begin(), entries.end(),
                           [](const Entry& e) { return e.pass; });
    }
};

enum class CheckLevel { None, Terminal, EveryStep };

}  // namespace rkm
