#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "rkm/instance.hpp"
#include "rkm/iterround.hpp"

namespace rkm {

namespace detail {

inline std::vector<int> open_originals(const IterModel& model,
                                       const std::vector<Rat>& y) {
    std::vector<int> open;
    for (int c = 0; c < model.num_copies(); ++c)
        if (y[c] == 1) open.push_back(model.split->copy_orig[c]);
    std::sort(open.begin(), open.end());
    open.erase(std::unique(open.begin(), open.end()), open.end());
    return open;
}

inline Solution greedy_on_open(const ClusteringInstance& inst, std::vector<int> open,
                               std::optional<int> serve = std::nullopt) {
    if (open.empty()) {
        if (serve.value_or(inst.m) > 0) throw Infeasible("no open facility");
        return Solution{};
    }
    return solution_cost(inst, open, serve);
}

}  // namespace detail

struct ConversionContext {
    int i1 = -1;  // kept fractional copy
    int i2 = -1;  // closed fractional copy
    std::vector<int> C1, C2;
};

// Conversion of the almost-integral terminal vertex into an integral branch
// solution.  The y mass is first padded to y(F) = k with lowest-index closed
// copies; with two fractional copies the side serving the larger partial set
// is kept.  The returned solution re-serves greedily; the coverage
// certificate (|C_full| + covered partials >= m) is checked on the way.
inline Solution to_integral(const IterModel& model, const IterState& st,
                            std::vector<Rat> y, InvariantLog* log = nullptr,
                            ConversionContext* ctx_out = nullptr,
                            bool* collapsed_copies = nullptr) {
    const ClusteringInstance& inst = *model.inst;
    if (model.budget.kind != BudgetKind::CardinalityK)
        throw BadParams("to_integral applies to the cardinality budget only");
    if (!inst.k) throw BadParams("missing k");

    Rat mass = 0;
    for (const Rat& v : y) mass += v;
    for (int c = 0; c < (int)y.size() && mass + 1 <= *inst.k; ++c)
        if (y[c] == 0) {
            y[c] = 1;
            mass += 1;
        }

    auto [cnt, idx] = count_fractional(y);
    if (cnt > 2) throw NotAlmostIntegral("terminal vertex has " + std::to_string(cnt) +
                                         " fractional values");
    if (cnt == 1) {
        // Lone fractional: round up when the budget allows, else down.
        if (mass - y[idx[0]] + 1 <= *inst.k)
            y[idx[0]] = 1;
        else
            y[idx[0]] = 0;
    } else if (cnt == 2) {
        if (y[idx[0]] + y[idx[1]] != 1)
            throw NotAlmostIntegral("two fractional values do not sum to 1");
        ConversionContext ctx;
        for (int j = 0; j < st.n_real; ++j) {
            if (st.full[j]) continue;
            bool has1 = std::binary_search(st.F[j].begin(), st.F[j].end(), idx[0]);
            bool has2 = std::binary_search(st.F[j].begin(), st.F[j].end(), idx[1]);
            if (has1 && !has2) ctx.C1.push_back(j);
            if (!has1 && has2) ctx.C2.push_back(j);
        }
        if (ctx.C1.size() >= ctx.C2.size()) {
            ctx.i1 = idx[0];
            ctx.i2 = idx[1];
        } else {
            ctx.i1 = idx[1];
            ctx.i2 = idx[0];
            std::swap(ctx.C1, ctx.C2);
        }
        y[ctx.i1] = 1;
        y[ctx.i2] = 0;
        if (ctx_out) *ctx_out = ctx;
        if (log) {
            long covered = st.count_full() + (long)ctx.C1.size();
            log->check(covered >= inst.m, "final.coverage",
                       "C_full + C1 = " + std::to_string(covered));
        }
    }

    long covered = st.count_full();
    for (int j = 0; j < st.n_real; ++j) {
        if (st.full[j]) continue;
        Rat mj = 0;
        for (int c : st.F[j]) mj += y[c];
        if (mj >= 1) ++covered;
    }
    if (log) log->check(covered >= inst.m, "final.coverage");

    int open_copies = 0;
    for (const Rat& v : y) open_copies += (v == 1) ? 1 : 0;
    auto open = detail::open_originals(model, y);
    if (collapsed_copies) *collapsed_copies = (int)open.size() != open_copies;
    if (log) {
        log->check((int)open.size() <= *inst.k, "final.k_budget");
        for (int i : inst.pre_opened)
            log->check(std::binary_search(open.begin(), open.end(), i),
                       "final.preopen_open", "facility " + std::to_string(i));
    }
    return detail::greedy_on_open(inst, open);
}

// Pseudo-approximation output: both fractional copies are rounded up, giving
// at most k+1 open facilities.
inline Solution pseudo_solution(const IterModel& model, const IterState&,
                                std::vector<Rat> y) {
    for (Rat& v : y)
        if (v > 0) v = 1;
    auto open = detail::open_originals(model, y);
    return detail::greedy_on_open(*model.inst, open);
}

// Extends a branch solution back to the original instance by greedily adding
// the m - m' cheapest removed clients; the total cost is recomputed exactly.
inline Solution assemble_original(const Solution& branch_sol,
                                  const ClusteringInstance& original,
                                  const GuessBranch& branch) {
    int need = original.m - branch.m_prime;
    if (need > (int)branch.removed_clients.size())
        throw NotEnoughClients("need " + std::to_string(need) + " of " +
                               std::to_string(branch.removed_clients.size()) +
                               " removed clients");
    Solution out;
    out.open = branch_sol.open;
    for (int j : branch_sol.served) out.served.push_back(branch.client_map[j]);
    if (need > 0) {
        if (out.open.empty()) throw Infeasible("no open facility to reconnect to");
        std::vector<std::pair<Rat, int>> cand;
        for (int j : branch.removed_clients) {
            Rat best = original.dist[out.open[0]][original.client_point(j)];
            for (int i : out.open)
                best = std::min(best, original.dist[i][original.client_point(j)]);
            cand.push_back({rat_pow_q(best, original.q), j});
        }
        std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return a.second < b.second;
        });
        for (int t = 0; t < need; ++t) out.served.push_back(cand[t].second);
    }
    std::sort(out.served.begin(), out.served.end());
    out.cost = 0;
    if (!out.open.empty()) {
        auto nv = nearest_vector_pair(original, out.open);
        for (int j : out.served)
            out.cost += rat_pow_q(nv.c[original.client_point(j)], original.q);
    }
    return out;
}

}  // namespace rkm
