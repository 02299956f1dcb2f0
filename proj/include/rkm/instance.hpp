#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rkm/common.hpp"

namespace rkm {

// An instance of robust k-median/k-means (q = 1 or 2) or of a constrained
// median variant (k absent).  Points are indexed facilities-first: point p of
// facility i is i, of client j is num_facilities + j.  The metric is an
// explicit symmetric rational matrix over all points.
struct ClusteringInstance {
    int num_facilities = 0;
    int num_clients = 0;
    std::vector<std::vector<Rat>> dist;  // (nF+nC) x (nF+nC)
    std::optional<int> k;                // facility budget; absent for variants
    int m = 0;                           // minimum number of clients to serve
    int q = 1;                           // objective exponent, 1 or 2
    std::vector<int> pre_opened;         // S0, sorted facility indices
    std::vector<std::string> facility_labels;
    std::vector<std::string> client_labels;

    int num_points() const { return num_facilities + num_clients; }
    int client_point(int j) const { return num_facilities + j; }

    const Rat& d(int p, int r) const { return dist[p][r]; }
    const Rat& d_fc(int i, int j) const { return dist[i][num_facilities + j]; }
    Rat dq_fc(int i, int j) const { return rat_pow_q(d_fc(i, j), q); }

    std::string facility_label(int i) const {
        return i < (int)facility_labels.size() ? facility_labels[i]
                                               : "f" + std::to_string(i);
    }
    std::string client_label(int j) const {
        return j < (int)client_labels.size() ? client_labels[j]
                                             : "c" + std::to_string(j);
    }
};

// Open set, served clients, exact cost.  Unless a pipeline overrides the
// assignment, `served` is the m cheapest clients w.r.t. the open set.
struct Solution {
    std::vector<int> open;    // facility indices, sorted
    std::vector<int> served;  // client indices, sorted
    Rat cost = 0;
};

// Per point: the nearest open facility and the distance to it.
struct NearestFacilityVectorPair {
    std::vector<int> kappa;  // point -> facility index in S
    std::vector<Rat> c;      // point -> distance
};

inline void validate_instance(const ClusteringInstance& inst) {
    const int n = inst.num_points();
    if ((int)inst.dist.size() != n)
        throw BadParams("dist matrix has wrong row count");
    for (const auto& row : inst.dist)
        if ((int)row.size() != n)
            throw BadParams("dist matrix has wrong column count");
    for (int p = 0; p < n; ++p) {
        if (inst.dist[p][p] != 0)
            throw BadParams("nonzero self-distance at point " + std::to_string(p));
        for (int r = 0; r < n; ++r) {
            if (inst.dist[p][r] < 0)
                throw BadParams("negative distance");
            if (inst.dist[p][r] != inst.dist[r][p])
                throw BadParams("asymmetric distance matrix");
        }
    }
    // Exact triangle-inequality check over all triples; desk scale only.
    for (int p = 0; p < n; ++p)
        for (int r = 0; r < n; ++r)
            for (int s = 0; s < n; ++s)
                if (inst.dist[p][s] > inst.dist[p][r] + inst.dist[r][s])
                    throw TriangleViolation(
                        "d(" + std::to_string(p) + "," + std::to_string(s) +
                        ") > d(" + std::to_string(p) + "," + std::to_string(r) +
                        ") + d(" + std::to_string(r) + "," + std::to_string(s) + ")");
    for (int i = 0; i < inst.num_facilities; ++i)
        for (int i2 = i + 1; i2 < inst.num_facilities; ++i2)
            if (inst.dist[i][i2] == 0)
                throw DuplicateFacilityLocation(
                    "facilities " + std::to_string(i) + " and " + std::to_string(i2));
    if (inst.q != 1 && inst.q != 2) throw BadParams("q must be 1 or 2");
    if (inst.m < 0 || inst.m > inst.num_clients)
        throw BudgetOutOfRange("m = " + std::to_string(inst.m) + " with |C| = " +
                               std::to_string(inst.num_clients));
    if (inst.k) {
        if (*inst.k < 0 || *inst.k > inst.num_facilities)
            throw BudgetOutOfRange("k = " + std::to_string(*inst.k));
    }
    for (int i : inst.pre_opened)
        if (i < 0 || i >= inst.num_facilities)
            throw BudgetOutOfRange("pre-opened facility out of range");
}

// kappa/c over all points; ties broken by lowest facility index.
inline NearestFacilityVectorPair nearest_vector_pair(const ClusteringInstance& inst,
                                                     const std::vector<int>& open) {
    if (open.empty()) throw EmptyOpenSet("nearest_vector_pair");
    NearestFacilityVectorPair nv;
    const int n = inst.num_points();
    nv.kappa.resize(n);
    nv.c.resize(n);
    for (int p = 0; p < n; ++p) {
        int best = -1;
        for (int i : open)
            if (best < 0 || inst.dist[p][i] < inst.dist[p][best] ||
                (inst.dist[p][i] == inst.dist[p][best] && i < best))
                best = i;
        nv.kappa[p] = best;
        nv.c[p] = inst.dist[p][best];
    }
    return nv;
}

// Greedy-optimal solution for a fixed open set: serve the m clients with the
// smallest d^q(., S), ties by client index.  `serve_count` overrides m.
inline Solution solution_cost(const ClusteringInstance& inst,
                              const std::vector<int>& open,
                              std::optional<int> serve_count = std::nullopt) {
    if (open.empty()) throw EmptyOpenSet("solution_cost");
    for (int i : inst.pre_opened)
        if (std::find(open.begin(), open.end(), i) == open.end())
            throw InfeasiblePreopen("facility " + std::to_string(i) + " not open");
    const int want = serve_count.value_or(inst.m);
    auto nv = nearest_vector_pair(inst, open);
    std::vector<int> order(inst.num_clients);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return nv.c[inst.client_point(a)] < nv.c[inst.client_point(b)];
    });
    Solution sol;
    sol.open = open;
    std::sort(sol.open.begin(), sol.open.end());
    sol.open.erase(std::unique(sol.open.begin(), sol.open.end()), sol.open.end());
    for (int t = 0; t < want && t < inst.num_clients; ++t) {
        int j = order[t];
        sol.served.push_back(j);
        sol.cost += rat_pow_q(nv.c[inst.client_point(j)], inst.q);
    }
    std::sort(sol.served.begin(), sol.served.end());
    return sol;
}

}  // namespace rkm
