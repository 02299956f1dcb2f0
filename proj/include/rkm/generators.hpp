#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "rkm/common.hpp"
#include "rkm/constraints.hpp"
#include "rkm/instance.hpp"

namespace rkm {

namespace detail {
inline ClusteringInstance from_point_distances(int nF, int nC,
                                               const std::vector<std::vector<Rat>>& d) {
    ClusteringInstance inst;
    inst.num_facilities = nF;
    inst.num_clients = nC;
    inst.dist = d;
    for (int i = 0; i < nF; ++i) inst.facility_labels.push_back("f" + std::to_string(i));
    for (int j = 0; j < nC; ++j) inst.client_labels.push_back("c" + std::to_string(j));
    return inst;
}
}  // namespace detail

// Gap family (a): facility f0 with t^3 collocated clients, facility f1 with
// t^3 + t^2 clients at distance 1, clusters 10 t^3 apart (line metric);
// k = 1, m = t^3 + t.
inline ClusteringInstance gap_a(int t) {
    if (t < 2) throw BadParams("gap-a requires t >= 2");
    const long A = (long)t * t * t;          // clients at f0
    const long B = A + (long)t * t;          // clients near f1
    const long L = 10 * A;                   // cluster separation
    int nF = 2, nC = (int)(A + B);
    // point positions on a line: f0 = 0, f1 = L, A-clients = 0, B-clients = L+1
    std::vector<Rat> pos;
    pos.push_back(0);
    pos.push_back(L);
    for (long j = 0; j < A; ++j) pos.push_back(0);
    for (long j = 0; j < B; ++j) pos.push_back(L + 1);
    std::vector<std::vector<Rat>> d(pos.size(), std::vector<Rat>(pos.size()));
    for (size_t p = 0; p < pos.size(); ++p)
        for (size_t r = 0; r < pos.size(); ++r)
            d[p][r] = abs(pos[p] - pos[r]);
    auto inst = detail::from_point_distances(nF, nC, d);
    inst.k = 1;
    inst.m = (int)(A + t);
    inst.q = 1;
    return inst;
}

// Gap family (b): facilities f0, f1, f2 with 2t, 2t, t collocated clients,
// d(f0, f1) = 1 and f2 at distance 10t from both; k = 2, m = 4t + 1.
inline ClusteringInstance gap_b(int t) {
    if (t < 2) throw BadParams("gap-b requires t >= 2");
    const long far = 10L * t;
    int nF = 3, nC = 5 * t;
    int n = nF + nC;
    // location of each point: 0 (f0), 1 (f1), 2 (f2)
    std::vector<int> loc;
    loc.push_back(0);
    loc.push_back(1);
    loc.push_back(2);
    for (int j = 0; j < 2 * t; ++j) loc.push_back(0);
    for (int j = 0; j < 2 * t; ++j) loc.push_back(1);
    for (int j = 0; j < t; ++j) loc.push_back(2);
    auto base = [&](int a, int b) -> long {
        if (a == b) return 0;
        if ((a == 0 && b == 1) || (a == 1 && b == 0)) return 1;
        return far;
    };
    std::vector<std::vector<Rat>> d(n, std::vector<Rat>(n));
    for (int p = 0; p < n; ++p)
        for (int r = 0; r < n; ++r) d[p][r] = base(loc[p], loc[r]);
    auto inst = detail::from_point_distances(nF, nC, d);
    inst.k = 2;
    inst.m = 4 * t + 1;
    inst.q = 1;
    return inst;
}

// Random metric via shortest-path closure of random integer edge weights on
// the complete graph; roughly a third of the points become facilities.
inline ClusteringInstance random_metric(int n, std::uint64_t seed,
                                        std::optional<int> nF_opt = std::nullopt,
                                        std::optional<int> k = std::nullopt,
                                        std::optional<int> m = std::nullopt, int q = 1) {
    if (n < 2) throw BadParams("random-metric requires n >= 2");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> w(1, 20);
    std::vector<std::vector<Rat>> d(n, std::vector<Rat>(n, Rat(0)));
    for (int p = 0; p < n; ++p)
        for (int r = p + 1; r < n; ++r) d[p][r] = d[r][p] = w(rng);
    for (int mid = 0; mid < n; ++mid)
        for (int p = 0; p < n; ++p)
            for (int r = 0; r < n; ++r)
                if (d[p][mid] + d[mid][r] < d[p][r]) d[p][r] = d[p][mid] + d[mid][r];
    int nF = nF_opt.value_or(std::max(2, n / 3));
    if (nF < 1 || nF >= n) throw BadParams("bad facility count");
    auto inst = detail::from_point_distances(nF, n - nF, d);
    inst.q = q;
    inst.k = k.value_or(std::max(1, nF / 2));
    inst.m = m.value_or(std::max(1, 2 * inst.num_clients / 3));
    return inst;
}

// Euclidean points on an integer grid.  q = 2 uses exact squared distances;
// q = 1 rounds each square root up to a multiple of 2^-prec_bits, which keeps
// the triangle inequality (rounding up is subadditive).
inline ClusteringInstance euclidean(int n, int dim, std::uint64_t seed, int q = 1,
                                    int prec_bits = 20,
                                    std::optional<int> nF_opt = std::nullopt,
                                    std::optional<int> k = std::nullopt,
                                    std::optional<int> m = std::nullopt) {
    if (n < 2 || dim < 1) throw BadParams("euclidean requires n >= 2, dim >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coord(0, 1000);
    int nF = nF_opt.value_or(std::max(2, n / 3));
    if (nF < 1 || nF >= n) throw BadParams("bad facility count");
    std::vector<std::vector<long>> pts;
    while ((int)pts.size() < n) {
        std::vector<long> p(dim);
        for (auto& c : p) c = coord(rng);
        // facility locations must be pairwise distinct
        if ((int)pts.size() < nF) {
            bool dup = false;
            for (int i = 0; i < (int)pts.size() && i < nF; ++i)
                if (pts[i] == p) dup = true;
            if (dup) continue;
        }
        pts.push_back(std::move(p));
    }
    const long den = 1L << prec_bits;
    std::vector<std::vector<Rat>> d(n, std::vector<Rat>(n, Rat(0)));
    for (int p = 0; p < n; ++p)
        for (int r = p + 1; r < n; ++r) {
            long s = 0;
            for (int c = 0; c < dim; ++c) {
                long diff = pts[p][c] - pts[r][c];
                s += diff * diff;
            }
            if (q == 2) {
                d[p][r] = d[r][p] = s;
            } else {
                // exact ceil of sqrt(s) to a multiple of 2^-prec_bits
                mpz_class target = mpz_class(s) * den * den;
                mpz_class g;
                mpz_sqrt(g.get_mpz_t(), target.get_mpz_t());
                if (g * g < target) g += 1;
                Rat up{g, mpz_class(den)};
                up.canonicalize();
                d[p][r] = d[r][p] = up;
            }
        }
    auto inst = detail::from_point_distances(nF, n - nF, d);
    inst.q = q;
    inst.k = k.value_or(std::max(1, nF / 2));
    inst.m = m.value_or(std::max(1, 2 * inst.num_clients / 3));
    return inst;
}

// Random partition matroid over the facilities of an instance.
inline PartitionMatroid random_partition(const ClusteringInstance& inst, int num_classes,
                                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    PartitionMatroid mat;
    mat.classes.assign(num_classes, {});
    for (int i = 0; i < inst.num_facilities; ++i)
        mat.classes[rng() % num_classes].push_back(i);
    std::uniform_int_distribution<int> cap(1, 3);
    for (int g = 0; g < num_classes; ++g) mat.capacities.push_back(cap(rng));
    return mat;
}

inline KnapsackConstraint random_knapsack(const ClusteringInstance& inst,
                                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> w(1, 10);
    KnapsackConstraint kn;
    Rat total = 0;
    for (int i = 0; i < inst.num_facilities; ++i) {
        kn.weights.push_back(w(rng));
        total += kn.weights.back();
    }
    kn.budget = total * Rat(2, 5) + 1;
    return kn;
}

}  // namespace rkm
