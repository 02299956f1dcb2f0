#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "rkm/finalize.hpp"
#include "rkm/iterround.hpp"
#include "rkm/oracle.hpp"
#include "rkm/preprocess.hpp"

namespace rkm {

inline std::vector<Rat> offsets_list(const Rat& tau, int offsets, std::uint64_t seed) {
    if (offsets <= 1) return {sample_offset(seed, tau)};
    std::vector<Rat> v;
    for (int i = 0; i < offsets; ++i) v.push_back(offset_grid_value(tau, offsets, i));
    return v;
}

// Per-(branch, U, offset) diagnostics consumed by the verification suites.
struct ComboDiag {
    int branch_id = 0;
    Rat U = 0;
    Rat offset_a = 1;
    std::vector<IterTraceEntry> trace;
    int terminal_fractional = 0;
    bool frac_pair_sums_one = true;  // vacuously true unless exactly 2
    bool y_mass_at_budget = false;   // y(F) == k at the terminal vertex
    bool ball_coverage_ok = true;
    bool trace_monotone = true;
    Rat cost = 0;    // assembled cost on the original instance
    bool valid = false;
};

inline bool terminal_ball_coverage_ok(const IterModel& model, const IterState& st,
                                      const std::vector<Rat>& y) {
    const Rat& tau = model.disc->tau;
    Rat factor = (3 * tau - 1) / (tau - 1);
    for (int j = 0; j < st.n_real; ++j) {
        if (!st.full[j]) continue;
        Rat radius = factor * model.disc->D(st.ell[j]);
        Rat massv = 0;
        for (int c = 0; c < model.num_copies(); ++c)
            if (model.disc->scale * model.inst->d_fc(model.split->copy_orig[c], j) <=
                radius)
                massv += y[c];
        if (massv < 1) return false;
    }
    return true;
}

inline void fill_iter_diag(ComboDiag& d, const IterModel& model, const IterState& st,
                           const IterOutcome& out) {
    d.trace = out.trace;
    auto [cnt, idx] = count_fractional(out.terminal.values);
    d.terminal_fractional = cnt;
    if (cnt == 2)
        d.frac_pair_sums_one =
            out.terminal.values[idx[0]] + out.terminal.values[idx[1]] == 1;
    if (model.budget.kind == BudgetKind::CardinalityK && model.inst->k) {
        Rat total = 0;
        for (const Rat& v : out.terminal.values) total += v;
        d.y_mass_at_budget = total == *model.inst->k;
    }
    d.ball_coverage_ok = terminal_ball_coverage_ok(model, st, out.terminal.values);
    for (size_t t = 1; t < out.trace.size(); ++t)
        if (out.trace[t].objective > out.trace[t - 1].objective) d.trace_monotone = false;
}

struct VariantOptions {
    std::optional<Rat> tau;
    std::uint64_t seed = 1;
    int offsets = 1;
    CheckLevel check = CheckLevel::None;
    InvariantLog* log = nullptr;
    std::vector<ComboDiag>* diag = nullptr;
};

// Matroid median restricted to partition matroids: no preprocessing
// (U = infinity disables every U-dependent constraint), iterative rounding
// with per-class capacity rows, and an integral terminal vertex.
inline Solution matroid_median(const ClusteringInstance& input,
                               const PartitionMatroid& matroid,
                               const VariantOptions& opts = {}) {
    if (input.q != 1) throw BadParams("matroid median requires q = 1");
    matroid.validate(input.num_facilities);
    if (!input.pre_opened.empty())
        throw BadParams("matroid median does not take pre-opened facilities");
    if (matroid.total_capacity() < 1 && input.num_clients > 0)
        throw Infeasible("zero total capacity with clients present");

    ClusteringInstance inst = input;
    inst.m = inst.num_clients;  // total coverage
    inst.k.reset();

    StrongLp strong = build_matroid_strong_lp(inst, matroid);
    VertexSolution lp_sol;
    try {
        lp_sol = solve_vertex(strong.lp);
    } catch (const LpInfeasible&) {
        throw Infeasible("matroid LP infeasible");
    }
    SplitSolution split = split_facilities(strong, lp_sol, inst);
    if (opts.log)
        check_split_properties(split, inst, lp_sol.objective, std::nullopt, *opts.log);

    Rat tau = opts.tau.value_or(tau_default(1));
    Rat scale = metric_unit_scale(inst);
    BudgetSpec budget{BudgetKind::Partition, &matroid, nullptr};

    std::optional<Solution> best;
    for (const Rat& a : offsets_list(tau, opts.offsets, opts.seed)) {
        DiscretizedMetric disc = discretize(inst, tau, a, scale);
        IterModel model{&inst, &split, &disc, budget, true, {}};
        IterState st = init_iter_state(model);
        IterOutcome out = iterate(model, st, opts.check, opts.log);

        for (int j = 0; j < st.n_real; ++j)
            if (!st.full[j])
                throw InvariantViolation("matroid rounding left a partial client");
        auto [cnt, idx] = count_fractional(out.terminal.values);
        if (cnt != 0)
            throw InvariantViolation("matroid terminal vertex is fractional (" +
                                     std::to_string(cnt) + ")");
        auto open = detail::open_originals(model, out.terminal.values);
        Solution sol = detail::greedy_on_open(inst, open, inst.num_clients);
        if (!matroid.independent(sol.open, inst.num_facilities))
            throw InvariantViolation("matroid solution not independent");

        if (opts.diag) {
            ComboDiag d;
            d.offset_a = a;
            fill_iter_diag(d, model, st, out);
            d.cost = sol.cost;
            d.valid = true;
            opts.diag->push_back(d);
        }
        if (!best || sol.cost < best->cost) best = sol;
    }
    return *best;
}

namespace detail {

// One knapsack branch at a fixed U: radius rule, (LP_k-strong), splitting,
// rounding, and the smaller-weight integral conversion.
inline std::optional<Solution> knapsack_branch_pipeline(
    const ClusteringInstance& original, const GuessBranch& branch,
    const KnapsackConstraint& knap, const SparsityParams& params, const Rat& tau,
    const std::vector<Rat>& offsets, CheckLevel check, InvariantLog* log,
    std::vector<ComboDiag>* diag, int branch_id) {
    const ClusteringInstance& bi = branch.inst;
    RadiusBounds R = knapsack_R(bi, params);
    StrongLp strong = build_knapsack_strong_lp(branch, knap, params, R);
    VertexSolution lp_sol;
    try {
        lp_sol = solve_vertex(strong.lp);
    } catch (const LpInfeasible&) {
        return std::nullopt;
    }
    SplitSolution split = split_facilities(strong, lp_sol, bi);
    if (log)
        check_split_properties(split, bi, lp_sol.objective, params.rho * params.U, *log);

    Rat scale = metric_unit_scale(bi);
    std::vector<Rat> scaled_R;
    for (const Rat& r : R.R) scaled_R.push_back(scale * r);
    BudgetSpec budget{BudgetKind::Knapsack, nullptr, &knap};

    std::optional<Solution> best;
    for (const Rat& a : offsets) {
        DiscretizedMetric disc = discretize(bi, tau, a, scale);
        IterModel model{&bi, &split, &disc, budget, true, scaled_R};
        IterState st = init_iter_state(model);
        IterOutcome out;
        try {
            out = iterate(model, st, check, log);
        } catch (const LpInfeasible&) {
            continue;
        }
        for (int j = 0; j < st.n_real; ++j)
            if (!st.full[j])
                throw InvariantViolation("knapsack rounding left a partial client");

        std::vector<Rat> y = out.terminal.values;
        auto [cnt, idx] = count_fractional(y);
        if (cnt > 2) throw NotAlmostIntegral("knapsack terminal vertex");
        if (cnt == 1) {
            y[idx[0]] = 0;
        } else if (cnt == 2) {
            if (y[idx[0]] + y[idx[1]] != 1)
                throw NotAlmostIntegral("knapsack fractional pair must sum to 1");
            const Rat& w0 = knap.weights[split.copy_orig[idx[0]]];
            const Rat& w1 = knap.weights[split.copy_orig[idx[1]]];
            int keep = (w0 < w1 || (w0 == w1 && idx[0] < idx[1])) ? idx[0] : idx[1];
            int drop = keep == idx[0] ? idx[1] : idx[0];
            y[keep] = 1;
            y[drop] = 0;
        }
        auto open = open_originals(model, y);
        if (open.empty()) continue;
        if (log)
            log->check(knap.weight_of(open) <= knap.budget, "knap.weight",
                       rat_to_string(knap.weight_of(open)));
        if (knap.weight_of(open) > knap.budget)
            throw InvariantViolation("knapsack weight violated after rounding");
        Solution branch_sol = greedy_on_open(bi, open, bi.num_clients);
        Solution full = assemble_original(branch_sol, original, branch);

        if (diag) {
            ComboDiag d;
            d.branch_id = branch_id;
            d.U = params.U;
            d.offset_a = a;
            fill_iter_diag(d, model, st, out);
            d.cost = full.cost;
            d.valid = true;
            diag->push_back(d);
        }
        if (!best || full.cost < best->cost) best = full;
    }
    return best;
}

}  // namespace detail

// KnapMed sparsification (Definition-style q = 1 conditions over all clients).
inline SparsifyResult sparsify_knapsack(const ClusteringInstance& inst,
                                        const std::vector<int>& s_star,
                                        const SparsityParams& params) {
    std::vector<int> all_clients(inst.num_clients);
    for (int j = 0; j < inst.num_clients; ++j) all_clients[j] = j;
    return sparsify_with_oracle(inst, s_star, all_clients, params, true);
}

struct KnapsackOptions {
    enum class Mode { Full, OracleGuided } mode = Mode::OracleGuided;
    Rat epsilon = Rat(1, 2);
    std::optional<Rat> rho, delta, tau;
    std::uint64_t seed = 1;
    int offsets = 1;
    int max_balls = 2, max_preopen = 2;
    int oracle_cap = 15;
    CheckLevel check = CheckLevel::None;
    InvariantLog* log = nullptr;
    std::vector<ComboDiag>* diag = nullptr;
};

inline Solution knapsack_median(const ClusteringInstance& input,
                                const KnapsackConstraint& knap,
                                const KnapsackOptions& opts = {}) {
    if (input.q != 1) throw BadParams("knapsack median requires q = 1");
    knap.validate(input.num_facilities);
    ClusteringInstance inst = input;
    inst.m = inst.num_clients;
    inst.k.reset();

    auto [rho_d, delta_d] = derive_rho_delta(opts.epsilon, 1);
    Rat rho = opts.rho.value_or(rho_d);
    Rat delta = opts.delta.value_or(delta_d);
    Rat tau = opts.tau.value_or(tau_default(1));
    auto offsets = offsets_list(tau, opts.offsets, opts.seed);
    Rat alpha1 = Rat(7081, 1000);

    std::optional<Solution> best;
    auto consider = [&](const std::optional<Solution>& s) {
        if (s && (!best || s->cost < best->cost)) best = s;
    };

    if (opts.mode == KnapsackOptions::Mode::OracleGuided) {
        OracleConstraint oc{BudgetKind::Knapsack, nullptr, &knap};
        OracleResult opt = brute_force(inst, oc, opts.oracle_cap);
        SparsityParams params = make_params(rho, delta, opt.opt_cost, 1);
        auto sp = sparsify_knapsack(inst, opt.best_open, params);
        if (opts.log) {
            std::vector<int> surviving(sp.branch.inst.num_clients);
            for (int j = 0; j < (int)surviving.size(); ++j) surviving[j] = j;
            check_sparse_conditions(sp.branch, opt.best_open, surviving, params, true,
                                    *opts.log);
        }
        consider(detail::knapsack_branch_pipeline(inst, sp.branch, knap, params, tau,
                                                  offsets, opts.check, opts.log,
                                                  opts.diag, 0));
    } else {
        auto grid = u_grid(inst, opts.epsilon);
        int branch_id = 0;
        for (const Rat& U : grid) {
            SparsityParams params = make_params(rho, delta, U, 1);
            enumerate_sparse_instances(
                inst, params, opts.max_balls, opts.max_preopen,
                [&](const GuessBranch& br) {
                    if (br.m_prime != br.inst.num_clients) return;  // total coverage
                    consider(detail::knapsack_branch_pipeline(
                        inst, br, knap, params, tau, offsets, opts.check, opts.log,
                        opts.diag, branch_id++));
                });
            if (best && best->cost <= alpha1 * (1 + opts.epsilon) * U) break;
        }
    }
    if (!best) throw NoFeasibleSolution("no knapsack branch succeeded");
    return *best;
}

}  // namespace rkm
