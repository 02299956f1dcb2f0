#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "rkm/constraints.hpp"
#include "rkm/instance.hpp"
#include "rkm/lp.hpp"
#include "rkm/preprocess.hpp"

namespace rkm {

// ---------------------------------------------------------------------------
// Strengthened LP
//
//   min sum x_ij d^q(i,j)   s.t.
//     budget row(s)           sum y <= k | per-class caps | sum w y <= W
//     x_ij <= y_i
//     sum_i x_ij <= 1         (or == 1 when coverage is total)
//     sum_ij x_ij >= m        (robust objective only)
//     y_i = 1                 for i in S0 (as variable fixing)
//     x_ij dropped             when d(i,j) > R_j, or i not in S0 and
//                              d^q(i,j) > star_bound
//     sum_j d^q(i,j) x_ij <= star_bound * y_i    for i not in S0
//
// Dropped x variables implement the equality-to-zero cutoffs.
// ---------------------------------------------------------------------------

enum class BudgetKind { CardinalityK, Partition, Knapsack };

struct BudgetSpec {
    BudgetKind kind = BudgetKind::CardinalityK;
    const PartitionMatroid* matroid = nullptr;
    const KnapsackConstraint* knapsack = nullptr;
};

struct StrongLp {
    LinearProgram lp;
    std::vector<int> y_var;
    std::vector<std::vector<int>> x_var;  // [i][j], -1 when the pair is cut
    bool full_coverage = false;
};

namespace detail {

inline void add_budget_rows(LinearProgram& lp, const std::vector<int>& y_var,
                            const ClusteringInstance& inst, const BudgetSpec& budget) {
    switch (budget.kind) {
        case BudgetKind::CardinalityK: {
            if (!inst.k) throw BadParams("instance has no facility budget k");
            std::vector<std::pair<int, Rat>> row;
            for (int v : y_var) row.push_back({v, 1});
            lp.add_row(std::move(row), Rel::LE, *inst.k);
            break;
        }
        case BudgetKind::Partition: {
            const auto& mat = *budget.matroid;
            for (int g = 0; g < (int)mat.classes.size(); ++g) {
                std::vector<std::pair<int, Rat>> row;
                for (int i : mat.classes[g]) row.push_back({y_var[i], 1});
                lp.add_row(std::move(row), Rel::LE, mat.capacities[g]);
            }
            break;
        }
        case BudgetKind::Knapsack: {
            const auto& kn = *budget.knapsack;
            std::vector<std::pair<int, Rat>> row;
            for (int i = 0; i < inst.num_facilities; ++i)
                if (kn.weights[i] != 0) row.push_back({y_var[i], kn.weights[i]});
            lp.add_row(std::move(row), Rel::LE, kn.budget);
            break;
        }
    }
}

inline StrongLp build_connection_lp(const ClusteringInstance& inst,
                                    const BudgetSpec& budget, bool full_coverage,
                                    const RadiusBounds* R,
                                    const std::optional<Rat>& star_bound) {
    StrongLp model;
    model.full_coverage = full_coverage;
    LinearProgram& lp = model.lp;
    const int nF = inst.num_facilities, nC = inst.num_clients;

    std::vector<char> in_s0(nF, 0);
    for (int i : inst.pre_opened) in_s0[i] = 1;

    model.y_var.resize(nF);
    for (int i = 0; i < nF; ++i) {
        model.y_var[i] = lp.add_var("y_" + std::to_string(i), 0, 1, 0);
        if (in_s0[i]) lp.fix_var(model.y_var[i], 1);
    }
    model.x_var.assign(nF, std::vector<int>(nC, -1));
    for (int i = 0; i < nF; ++i)
        for (int j = 0; j < nC; ++j) {
            if (R && inst.d_fc(i, j) > R->R[j]) continue;
            if (star_bound && !in_s0[i] && inst.dq_fc(i, j) > *star_bound) continue;
            model.x_var[i][j] = lp.add_var(
                "x_" + std::to_string(i) + "_" + std::to_string(j), 0, 1,
                inst.dq_fc(i, j));
        }

    add_budget_rows(lp, model.y_var, inst, budget);
    for (int i = 0; i < nF; ++i)
        for (int j = 0; j < nC; ++j)
            if (model.x_var[i][j] >= 0)
                lp.add_row({{model.x_var[i][j], 1}, {model.y_var[i], Rat(-1)}},
                           Rel::LE, 0);
    for (int j = 0; j < nC; ++j) {
        std::vector<std::pair<int, Rat>> row;
        for (int i = 0; i < nF; ++i)
            if (model.x_var[i][j] >= 0) row.push_back({model.x_var[i][j], 1});
        if (full_coverage)
            lp.add_row(std::move(row), Rel::EQ, 1);  // empty row => infeasible
        else if (!row.empty())
            lp.add_row(std::move(row), Rel::LE, 1);
    }
    if (!full_coverage && inst.m > 0) {
        std::vector<std::pair<int, Rat>> cov;
        for (int i = 0; i < nF; ++i)
            for (int j = 0; j < nC; ++j)
                if (model.x_var[i][j] >= 0) cov.push_back({model.x_var[i][j], 1});
        lp.add_row(std::move(cov), Rel::GE, inst.m);
    }
    if (star_bound) {
        for (int i = 0; i < nF; ++i) {
            if (in_s0[i]) continue;
            std::vector<std::pair<int, Rat>> row;
            for (int j = 0; j < nC; ++j)
                if (model.x_var[i][j] >= 0 && inst.dq_fc(i, j) != 0)
                    row.push_back({model.x_var[i][j], inst.dq_fc(i, j)});
            if (row.empty()) continue;
            row.push_back({model.y_var[i], -*star_bound});
            lp.add_row(std::move(row), Rel::LE, 0);
        }
    }
    return model;
}

}  // namespace detail

// (LP_strong) for robust k-median/k-means; pseudo mode yields plain (LP_basic).
inline StrongLp build_strong_lp(const GuessBranch& branch, const SparsityParams& params,
                                const RadiusBounds& R) {
    return detail::build_connection_lp(branch.inst, BudgetSpec{}, false, &R,
                                       params.rho * params.U_tilde);
}

inline StrongLp build_basic_lp(const ClusteringInstance& inst) {
    return detail::build_connection_lp(inst, BudgetSpec{}, false, nullptr, std::nullopt);
}

// (LP_k-strong): total coverage, knapsack budget, q = 1 cutoffs at rho*U.
inline StrongLp build_knapsack_strong_lp(const GuessBranch& branch,
                                         const KnapsackConstraint& knap,
                                         const SparsityParams& params,
                                         const RadiusBounds& R) {
    BudgetSpec b{BudgetKind::Knapsack, nullptr, &knap};
    return detail::build_connection_lp(branch.inst, b, true, &R, params.rho * params.U);
}

// Matroid median: natural LP with total coverage and per-class capacity rows.
inline StrongLp build_matroid_strong_lp(const ClusteringInstance& inst,
                                        const PartitionMatroid& matroid) {
    BudgetSpec b{BudgetKind::Partition, &matroid, nullptr};
    return detail::build_connection_lp(inst, b, true, nullptr, std::nullopt);
}

// ---------------------------------------------------------------------------
// Facility splitting (elimination of the x variables)
// ---------------------------------------------------------------------------

struct SplitSolution {
    std::vector<Rat> y_star;               // per facility-copy
    std::vector<int> copy_orig;            // copy -> original facility
    std::vector<std::vector<int>> F_init;  // per client: sorted copy ids
    std::vector<Rat> star_cost;            // per copy: sum of d^q over its clients
};

// For each pair with x_ij > 0, in (i, j) index order: sort i's copies by
// current star cost (ties by copy index), take the minimal prefix whose y*
// mass reaches x_ij, splitting the last copy so the prefix sums exactly, and
// put the prefix into F_j.
inline SplitSolution split_facilities(const StrongLp& model, const VertexSolution& vs,
                                      const ClusteringInstance& inst) {
    const int nF = inst.num_facilities, nC = inst.num_clients;
    SplitSolution sp;
    std::vector<std::vector<int>> members;       // copy -> clients
    std::vector<std::vector<int>> facil_copies(nF);
    for (int i = 0; i < nF; ++i) {
        sp.y_star.push_back(vs.values[model.y_var[i]]);
        sp.copy_orig.push_back(i);
        sp.star_cost.push_back(0);
        members.push_back({});
        facil_copies[i].push_back(i);
    }

    for (int i = 0; i < nF; ++i) {
        for (int j = 0; j < nC; ++j) {
            if (model.x_var[i][j] < 0) continue;
            const Rat& x = vs.values[model.x_var[i][j]];
            if (x == 0) continue;
            std::vector<int> order = facil_copies[i];
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                if (sp.star_cost[a] != sp.star_cost[b])
                    return sp.star_cost[a] < sp.star_cost[b];
                return a < b;
            });
            std::vector<int> prefix;
            Rat acc = 0;
            for (int c : order) {
                prefix.push_back(c);
                acc += sp.y_star[c];
                if (acc >= x) break;
            }
            if (acc < x)
                throw Error("Internal", "x exceeds available y mass while splitting");
            if (acc > x) {
                int last = prefix.back();
                Rat over = acc - x;
                int fresh = (int)sp.y_star.size();
                sp.y_star.push_back(over);
                sp.copy_orig.push_back(i);
                sp.star_cost.push_back(sp.star_cost[last]);
                members.push_back(members[last]);
                facil_copies[i].push_back(fresh);
                sp.y_star[last] -= over;
            }
            Rat dq = inst.dq_fc(i, j);
            for (int c : prefix) {
                members[c].push_back(j);
                sp.star_cost[c] += dq;
            }
        }
    }

    sp.F_init.assign(nC, {});
    for (int c = 0; c < (int)sp.y_star.size(); ++c)
        for (int j : members[c]) sp.F_init[j].push_back(c);
    for (auto& f : sp.F_init) std::sort(f.begin(), f.end());
    return sp;
}

// Lemma-style properties of the split solution (a)-(f); star_cap is
// rho*U_tilde (robust) or rho*U (knapsack), absent in pseudo mode.
inline void check_split_properties(const SplitSolution& sp, const ClusteringInstance& inst,
                                   const Rat& source_objective,
                                   const std::optional<Rat>& star_cap,
                                   InvariantLog& log) {
    const int nC = inst.num_clients;
    Rat total = 0, coverage = 0, cost = 0;
    for (const Rat& y : sp.y_star) total += y;
    for (int j = 0; j < nC; ++j) {
        Rat yj = 0;
        for (int c : sp.F_init[j]) {
            yj += sp.y_star[c];
            cost += inst.dq_fc(sp.copy_orig[c], j) * sp.y_star[c];
        }
        log.check(yj <= 1, "split.a_client_mass", "client " + std::to_string(j));
        coverage += yj;
    }
    if (inst.k) log.check(total <= *inst.k, "split.b_total_mass");
    log.check(coverage >= inst.m, "split.c_coverage");
    log.check(cost <= source_objective, "split.d_cost");
    std::vector<char> in_s0(inst.num_facilities, 0);
    for (int i : inst.pre_opened) in_s0[i] = 1;
    for (int i : inst.pre_opened) {
        Rat s = 0;
        for (int c = 0; c < (int)sp.y_star.size(); ++c)
            if (sp.copy_orig[c] == i) s += sp.y_star[c];
        log.check(s == 1, "split.e_preopen_mass", "facility " + std::to_string(i));
    }
    if (star_cap) {
        std::vector<Rat> star(sp.y_star.size(), Rat(0));
        for (int j = 0; j < nC; ++j)
            for (int c : sp.F_init[j])
                star[c] += inst.dq_fc(sp.copy_orig[c], j);
        for (int c = 0; c < (int)sp.y_star.size(); ++c) {
            log.check(star[c] == sp.star_cost[c], "split.star_bookkeeping");
            if (!in_s0[sp.copy_orig[c]])
                log.check(star[c] <= 2 * *star_cap, "split.f_star_cost",
                          "copy " + std::to_string(c));
        }
    }
}

// ---------------------------------------------------------------------------
// Random discretization of distances
// ---------------------------------------------------------------------------

// Distance levels D_{-1} = 0, D_l = a*tau^l (l >= 0); every distance is
// rounded up to the next level.  Levels and comparisons are exact; `scale`
// lets the caller normalize the metric so its minimum nonzero facility-client
// distance is >= 1 (levels below D_0 do not exist).
struct DiscretizedMetric {
    Rat tau = 2;
    Rat a = 1;
    Rat scale = 1;
    std::vector<std::vector<int>> level;  // [facility][client]
    int max_level = -1;

    int level_of(const Rat& d) const {
        if (d == 0) return -1;
        Rat target = scale * d;
        Rat v = a;
        int l = 0;
        while (v < target) {
            v *= tau;
            ++l;
        }
        return l;
    }
    // Scaled-unit level value; level -2 acts as the impossible distance.
    Rat D(int l) const {
        if (l <= -2) return Rat(-1);
        if (l == -1) return Rat(0);
        Rat v = a;
        for (int t = 0; t < l; ++t) v *= tau;
        return v;
    }
    Rat Dq(int l, int q) const { return rat_pow_q(D(l), q); }
    Rat dprime_scaled(int i, int j) const { return D(level[i][j]); }
};

inline Rat tau_default(int q) {
    // 23603/10000 and 224434/100000, stored canonicalized
    return q == 1 ? Rat(23603, 10000) : Rat(112217, 50000);
}

// 1 / (min nonzero facility-client distance), as the scale normalizing the
// metric for discretization; 1 when the metric is identically zero.
inline Rat metric_unit_scale(const ClusteringInstance& inst) {
    Rat best = 0;
    for (int i = 0; i < inst.num_facilities; ++i)
        for (int j = 0; j < inst.num_clients; ++j) {
            const Rat& d = inst.d_fc(i, j);
            if (d != 0 && (best == 0 || d < best)) best = d;
        }
    return best == 0 ? Rat(1) : Rat(1) / best;
}

namespace detail {
inline Rat offset_from_unit(double u, const Rat& tau) {
    double ad = std::pow(rat_to_double(tau), u);
    const long den = 1L << 40;  // 40-bit offset precision
    long num = std::lround(ad * (double)den);
    Rat a{mpz_class(num), mpz_class(den)};
    a.canonicalize();
    if (a < 1) a = 1;
    if (a >= tau) a = tau * Rat(den - 1, den);
    return a;
}
}  // namespace detail

// Random offset a in [1, tau) with ln a uniform in [0, ln tau); the double
// result is frozen to a 40-bit rational.
inline Rat sample_offset(std::uint64_t seed, const Rat& tau) {
    if (!(tau > 1)) throw BadParams("tau must exceed 1");
    std::mt19937_64 rng(seed);
    double u = (double)(rng() >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
    return detail::offset_from_unit(u, tau);
}

// Derandomized grid: ln a uniform over {idx/n * ln tau}.
inline Rat offset_grid_value(const Rat& tau, int n, int idx) {
    if (n <= 0 || idx < 0 || idx >= n) throw BadParams("bad offset grid index");
    return detail::offset_from_unit((double)idx / (double)n, tau);
}

inline DiscretizedMetric discretize(const ClusteringInstance& inst, const Rat& tau,
                                    const Rat& a, const Rat& scale = 1) {
    if (!(tau > 1)) throw BadParams("tau must exceed 1");
    if (a < 1 || a >= tau) throw BadParams("offset a must lie in [1, tau)");
    DiscretizedMetric dm;
    dm.tau = tau;
    dm.a = a;
    dm.scale = scale;
    dm.level.assign(inst.num_facilities, std::vector<int>(inst.num_clients));
    for (int i = 0; i < inst.num_facilities; ++i)
        for (int j = 0; j < inst.num_clients; ++j) {
            int l = dm.level_of(inst.d_fc(i, j));
            dm.level[i][j] = l;
            dm.max_level = std::max(dm.max_level, l);
        }
    return dm;
}

// ---------------------------------------------------------------------------
// Iterative rounding state and loop
// ---------------------------------------------------------------------------

// Client ids 0..n_real-1 are the branch clients; ids n_real.. are virtual
// clients standing for the pre-opened facilities (radius-level -1, F = the
// collocated copies), pinned inside C*.
struct IterState {
    int n_real = 0;
    int n_virtual = 0;
    std::vector<std::vector<int>> F;  // per id: sorted copy ids
    std::vector<std::vector<int>> B;  // per real id: inner ball (full clients)
    std::vector<int> ell;             // per id
    std::vector<char> full;           // per real id
    std::vector<char> in_cstar;       // per id
    std::vector<int> virtual_facility;

    int num_ids() const { return n_real + n_virtual; }
    int count_full() const {
        int c = 0;
        for (int j = 0; j < n_real; ++j) c += full[j] ? 1 : 0;
        return c;
    }
    int count_cstar() const {
        int c = 0;
        for (char f : in_cstar) c += f ? 1 : 0;
        return c;
    }
};

// Static context shared by the rounding loop.
struct IterModel {
    const ClusteringInstance* inst = nullptr;  // branch instance
    const SplitSolution* split = nullptr;
    const DiscretizedMetric* disc = nullptr;
    BudgetSpec budget;
    bool variant_equality = false;  // matroid/knapsack: y(F_j)=1 for partial
    std::vector<Rat> scaled_R;      // per client, scale-adjusted; empty = no cap

    int num_copies() const { return (int)split->y_star.size(); }
    int copy_level(int c, int j) const {
        return disc->level[split->copy_orig[c]][j];
    }
};

inline int compute_initial_level(const IterModel& model, int j) {
    int l = -1;
    for (int c : model.split->F_init[j]) l = std::max(l, model.copy_level(c, j));
    return l;
}

inline std::vector<int> inner_ball(const IterModel& model, const IterState& st, int j) {
    std::vector<int> b;
    for (int c : st.F[j])
        if (model.copy_level(c, j) <= st.ell[j] - 1) b.push_back(c);
    return b;
}

inline IterState init_iter_state(const IterModel& model) {
    const ClusteringInstance& inst = *model.inst;
    IterState st;
    st.n_real = inst.num_clients;
    st.n_virtual = (int)inst.pre_opened.size();
    st.F.resize(st.num_ids());
    st.B.resize(st.n_real);
    st.ell.assign(st.num_ids(), -1);
    st.full.assign(st.n_real, 0);
    st.in_cstar.assign(st.num_ids(), 0);
    for (int j = 0; j < st.n_real; ++j) {
        st.F[j] = model.split->F_init[j];
        st.ell[j] = compute_initial_level(model, j);
    }
    for (int v = 0; v < st.n_virtual; ++v) {
        int fac = inst.pre_opened[v];
        st.virtual_facility.push_back(fac);
        int id = st.n_real + v;
        for (int c = 0; c < model.num_copies(); ++c)
            if (model.split->copy_orig[c] == fac) st.F[id].push_back(c);
        st.ell[id] = -1;
        st.in_cstar[id] = 1;
    }
    return st;
}

// (LP_iter) over the current state; variables are the facility-copies.
// Budget rows range over copies, grouped by their original facility.
inline LinearProgram build_iter_lp(const IterModel& model, const IterState& st) {
    LinearProgram lp;
    const int n = model.num_copies();
    for (int c = 0; c < n; ++c) lp.add_var("y" + std::to_string(c), 0, 1, 0);

    switch (model.budget.kind) {
        case BudgetKind::CardinalityK: {
            if (!model.inst->k) throw BadParams("missing facility budget k");
            std::vector<std::pair<int, Rat>> row;
            for (int c = 0; c < n; ++c) row.push_back({c, 1});
            lp.add_row(std::move(row), Rel::LE, *model.inst->k);
            break;
        }
        case BudgetKind::Partition: {
            auto cls = model.budget.matroid->class_of_facility(model.inst->num_facilities);
            for (int g = 0; g < (int)model.budget.matroid->classes.size(); ++g) {
                std::vector<std::pair<int, Rat>> row;
                for (int c = 0; c < n; ++c)
                    if (cls[model.split->copy_orig[c]] == g) row.push_back({c, 1});
                lp.add_row(std::move(row), Rel::LE,
                           model.budget.matroid->capacities[g]);
            }
            break;
        }
        case BudgetKind::Knapsack: {
            std::vector<std::pair<int, Rat>> row;
            for (int c = 0; c < n; ++c) {
                const Rat& w = model.budget.knapsack->weights[model.split->copy_orig[c]];
                if (w != 0) row.push_back({c, w});
            }
            lp.add_row(std::move(row), Rel::LE, model.budget.knapsack->budget);
            break;
        }
    }

    for (int id = 0; id < st.num_ids(); ++id) {
        if (!st.in_cstar[id]) continue;
        std::vector<std::pair<int, Rat>> row;
        for (int c : st.F[id]) row.push_back({c, 1});
        lp.add_row(std::move(row), Rel::EQ, 1);
    }
    for (int j = 0; j < st.n_real; ++j) {
        if (!st.full[j] || st.B[j].empty()) continue;
        std::vector<std::pair<int, Rat>> row;
        for (int c : st.B[j]) row.push_back({c, 1});
        lp.add_row(std::move(row), Rel::LE, 1);
    }
    for (int j = 0; j < st.n_real; ++j) {
        if (st.full[j]) continue;
        std::vector<std::pair<int, Rat>> row;
        for (int c : st.F[j]) row.push_back({c, 1});
        if (model.variant_equality)
            lp.add_row(std::move(row), Rel::EQ, 1);
        else if (!row.empty())
            lp.add_row(std::move(row), Rel::LE, 1);
    }
    if (!model.variant_equality) {
        int rhs = model.inst->m - [&] {
            int c = 0;
            for (int j = 0; j < st.n_real; ++j) c += st.full[j] ? 1 : 0;
            return c;
        }();
        if (rhs > 0) {
            std::vector<Rat> coef(n, Rat(0));
            for (int j = 0; j < st.n_real; ++j) {
                if (st.full[j]) continue;
                for (int c : st.F[j]) coef[c] += 1;
            }
            std::vector<std::pair<int, Rat>> row;
            for (int c = 0; c < n; ++c)
                if (coef[c] != 0) row.push_back({c, coef[c]});
            lp.add_row(std::move(row), Rel::GE, rhs);
        }
    }

    const int q = model.inst->q;
    for (int j = 0; j < st.n_real; ++j) {
        if (!st.full[j]) {
            for (int c : st.F[j])
                lp.obj[c] += model.disc->Dq(model.copy_level(c, j), q);
        } else {
            Rat Dlq = model.disc->Dq(st.ell[j], q);
            lp.obj_const += Dlq;
            for (int c : st.B[j])
                lp.obj[c] += model.disc->Dq(model.copy_level(c, j), q) - Dlq;
        }
    }
    return lp;
}

inline Rat mass_over(const std::vector<Rat>& y, const std::vector<int>& ids) {
    Rat s = 0;
    for (int c : ids) s += y[c];
    return s;
}

inline bool sets_intersect(const std::vector<int>& a, const std::vector<int>& b) {
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia == *ib) return true;
        (*ia < *ib) ? ++ia : ++ib;
    }
    return false;
}

// Remove overlapping C* members and insert j, unless some member with a
// radius-level <= ell_j already overlaps F_j.
inline void update_cstar(IterState& st, int j) {
    for (int id = 0; id < st.num_ids(); ++id)
        if (st.in_cstar[id] && st.ell[id] <= st.ell[j] &&
            sets_intersect(st.F[id], st.F[j]))
            return;
    for (int id = 0; id < st.num_ids(); ++id)
        if (st.in_cstar[id] && sets_intersect(st.F[id], st.F[j]))
            st.in_cstar[id] = 0;
    st.in_cstar[j] = 1;
}

// The maintained-state invariants (checked after every step in verify mode).
inline void check_iter_invariants(const IterModel& model, const IterState& st,
                                  InvariantLog& log) {
    for (int v = 0; v < st.n_virtual; ++v)
        log.check(st.in_cstar[st.n_real + v] == 1, "iter.1_partition",
                  "virtual client left C*");
    for (int j = 0; j < st.n_real; ++j)
        if (st.in_cstar[j])
            log.check(st.full[j] == 1, "iter.1_partition", "C* client not full");
    for (int a = 0; a < st.num_ids(); ++a)
        for (int b = a + 1; b < st.num_ids(); ++b)
            if (st.in_cstar[a] && st.in_cstar[b])
                log.check(!sets_intersect(st.F[a], st.F[b]), "iter.2_disjoint",
                          std::to_string(a) + "," + std::to_string(b));
    for (int j = 0; j < st.n_real; ++j) {
        if (st.full[j])
            log.check(st.B[j] == inner_ball(model, st, j), "iter.3_inner_ball",
                      "client " + std::to_string(j));
        for (int c : st.F[j])
            log.check(model.copy_level(c, j) <= st.ell[j], "iter.4_level_bound",
                      "client " + std::to_string(j));
        if (!model.scaled_R.empty())
            log.check(model.disc->D(st.ell[j]) <=
                          model.disc->tau * model.scaled_R[j],
                      "iter.5_radius_cap", "client " + std::to_string(j));
        log.check(st.ell[j] >= -1, "iter.6_level_floor");
    }
    for (int v = 0; v < st.n_virtual; ++v) {
        int id = st.n_real + v;
        for (int c : st.F[id])
            log.check(model.split->copy_orig[c] == st.virtual_facility[v],
                      "iter.4_level_bound", "virtual copy not collocated");
    }
}

inline bool lp_satisfied_by(const LinearProgram& lp, const std::vector<Rat>& x) {
    for (int v = 0; v < lp.num_vars(); ++v)
        if (x[v] < lp.lo[v] || (lp.hi_finite[v] && x[v] > lp.hi[v])) return false;
    for (const auto& row : lp.rows) {
        Rat acc = 0;
        for (const auto& [v, a] : row.terms) acc += a * x[v];
        bool ok = row.rel == Rel::LE   ? acc <= row.rhs
                  : row.rel == Rel::GE ? acc >= row.rhs
                                       : acc == row.rhs;
        if (!ok) return false;
    }
    return true;
}

// Terminal properties: ball coverage within (3tau-1)/(tau-1) * D_{ell_j} for
// every full client, and the almost-integrality of the vertex.
inline void check_terminal_properties(const IterModel& model, const IterState& st,
                                      const std::vector<Rat>& y, InvariantLog& log) {
    const Rat& tau = model.disc->tau;
    Rat factor = (3 * tau - 1) / (tau - 1);
    for (int j = 0; j < st.n_real; ++j) {
        if (!st.full[j]) continue;
        Rat radius = factor * model.disc->D(st.ell[j]);
        Rat massv = 0;
        for (int c = 0; c < model.num_copies(); ++c) {
            Rat scaled_d =
                model.disc->scale * model.inst->d_fc(model.split->copy_orig[c], j);
            if (scaled_d <= radius) massv += y[c];
        }
        log.check(massv >= 1, "iter.8_ball_coverage", "client " + std::to_string(j));
    }
    auto [cnt, idx] = count_fractional(y);
    log.check(cnt <= 2, "iter.9_fractionality", "count " + std::to_string(cnt));
    if (cnt == 2 && model.budget.kind == BudgetKind::CardinalityK && model.inst->k) {
        Rat total = 0;
        for (const Rat& v : y) total += v;
        if (total == *model.inst->k)
            log.check(y[idx[0]] + y[idx[1]] == 1, "iter.9_fractionality",
                      "two fractionals at y(F)=k must sum to 1");
    }
    if (cnt == 2 && model.budget.kind == BudgetKind::Knapsack)
        log.check(y[idx[0]] + y[idx[1]] == 1, "iter.9_fractionality",
                  "knapsack fractionals must sum to 1");
}

struct IterTraceEntry {
    Rat objective;
    int fractional = 0;
    int c_full = 0;
    int c_star = 0;
};

struct IterOutcome {
    VertexSolution terminal;
    std::vector<IterTraceEntry> trace;
    int iterations = 0;
};

// Algorithm: solve a vertex of (LP_iter); move the lowest-index partial
// client with y(F_j) = 1 into C_full, else shrink the lowest-index full
// client with y(B_j) = 1 by one radius level; stop when neither rule fires.
inline IterOutcome iterate(const IterModel& model, IterState& st,
                           CheckLevel check = CheckLevel::None,
                           InvariantLog* log = nullptr) {
    IterOutcome out;
    const long cap =
        (long)(st.n_real + 1) * (model.disc->max_level + 3) + st.n_real + 8;
    std::optional<std::vector<Rat>> prev;
    for (;;) {
        if (out.iterations > cap)
            throw NoProgress("iterative rounding exceeded " + std::to_string(cap) +
                             " iterations");
        LinearProgram lp = build_iter_lp(model, st);
        if (log && check == CheckLevel::EveryStep && prev)
            log->check(lp_satisfied_by(lp, *prev), "iter.7_feasible_carryover");
        VertexSolution vs = solve_vertex(lp);
        out.trace.push_back({vs.objective, count_fractional(vs.values).first,
                             st.count_full(), st.count_cstar()});
        if (log && check == CheckLevel::EveryStep) check_iter_invariants(model, st, *log);

        int pick = -1;
        for (int j = 0; j < st.n_real && pick < 0; ++j)
            if (!st.full[j] && !st.F[j].empty() && mass_over(vs.values, st.F[j]) == 1)
                pick = j;
        if (pick >= 0) {
            st.full[pick] = 1;
            st.B[pick] = inner_ball(model, st, pick);
            update_cstar(st, pick);
            prev = vs.values;
            ++out.iterations;
            out.terminal = std::move(vs);
            continue;
        }
        for (int j = 0; j < st.n_real && pick < 0; ++j)
            if (st.full[j] && !st.B[j].empty() && mass_over(vs.values, st.B[j]) == 1)
                pick = j;
        if (pick >= 0) {
            st.ell[pick] -= 1;
            st.F[pick] = st.B[pick];
            st.B[pick] = inner_ball(model, st, pick);
            update_cstar(st, pick);
            prev = vs.values;
            ++out.iterations;
            out.terminal = std::move(vs);
            continue;
        }
        out.terminal = std::move(vs);
        break;
    }
    if (log && check != CheckLevel::None) {
        check_iter_invariants(model, st, *log);
        check_terminal_properties(model, st, out.terminal.values, *log);
    }
    return out;
}

}  // namespace rkm
