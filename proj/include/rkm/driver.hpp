#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "rkm/finalize.hpp"
#include "rkm/instance.hpp"
#include "rkm/iterround.hpp"
#include "rkm/json_io.hpp"
#include "rkm/oracle.hpp"
#include "rkm/preprocess.hpp"
#include "rkm/variants.hpp"

namespace rkm {

enum class Problem { RkMed, RkMeans, MatMed, KnapMed };
enum class Mode { Full, Pseudo, OracleGuided };

// 7.081 and 53.002 as exact rationals (53002/1000 canonicalized)
inline Rat alpha_bound(int q) { return q == 1 ? Rat(7081, 1000) : Rat(26501, 500); }

struct RunConfig {
    Problem problem = Problem::RkMed;
    Mode mode = Mode::Full;
    Rat epsilon = Rat(1, 2);
    std::optional<Rat> rho, delta, tau;
    std::uint64_t seed = 1;
    int offsets = 1;
    int max_balls = 2, max_preopen = 2;
    int oracle_cap = 15;
    CheckLevel check = CheckLevel::None;
    bool trace = false;
    std::string dump_lp_prefix;
};

struct SolutionReport {
    Problem problem = Problem::RkMed;
    Mode mode = Mode::Full;
    Solution solution;
    int branch_id = -1;
    Rat U = 0;
    Rat offset_a = 1;
    int fractional_count = 0;
    std::vector<std::string> invariant_log;
    std::vector<IterTraceEntry> trace;
};

namespace detail {

struct Candidate {
    Solution sol;
    int branch_id = -1;
    Rat U = 0;
    Rat offset_a = 1;
    int offset_idx = 0;
    int terminal_frac = 0;
    std::vector<IterTraceEntry> trace;
};

struct BestTracker {
    std::optional<Candidate> best;
    void consider(const Candidate& c) {
        if (!best || c.sol.cost < best->sol.cost) best = c;
    }
    bool have() const { return best.has_value(); }
};

// Zero-cost probe: try to serve m clients at distance zero.  Each client is
// collocated with at most one facility, so a greedy count argument is exact.
inline std::optional<Solution> zero_cost_probe(const ClusteringInstance& inst,
                                               const BudgetSpec& budget) {
    std::vector<int> host(inst.num_clients, -1);
    std::vector<long> cnt(inst.num_facilities, 0);
    for (int j = 0; j < inst.num_clients; ++j)
        for (int i = 0; i < inst.num_facilities; ++i)
            if (inst.d_fc(i, j) == 0) {
                host[j] = i;
                ++cnt[i];
                break;
            }
    std::set<int> open(inst.pre_opened.begin(), inst.pre_opened.end());
    auto add_hosts_by_count = [&](const std::vector<int>& candidates, int limit) {
        std::vector<int> order = candidates;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (cnt[a] != cnt[b]) return cnt[a] > cnt[b];
            return a < b;
        });
        for (int i : order) {
            if (limit <= 0) break;
            if (cnt[i] == 0) break;
            if (open.insert(i).second) --limit;
        }
    };
    switch (budget.kind) {
        case BudgetKind::CardinalityK: {
            if (!inst.k) return std::nullopt;
            std::vector<int> hosts;
            for (int i = 0; i < inst.num_facilities; ++i)
                if (cnt[i] > 0 && !open.count(i)) hosts.push_back(i);
            add_hosts_by_count(hosts, *inst.k - (int)open.size());
            if ((int)open.size() > *inst.k) return std::nullopt;
            break;
        }
        case BudgetKind::Partition: {
            auto cls = budget.matroid->class_of_facility(inst.num_facilities);
            for (int g = 0; g < (int)budget.matroid->classes.size(); ++g) {
                std::vector<int> hosts;
                for (int i : budget.matroid->classes[g])
                    if (cnt[i] > 0) hosts.push_back(i);
                add_hosts_by_count(hosts, budget.matroid->capacities[g]);
            }
            break;
        }
        case BudgetKind::Knapsack: {
            for (int j = 0; j < inst.num_clients; ++j) {
                if (host[j] < 0) return std::nullopt;
                open.insert(host[j]);
            }
            if (budget.knapsack->weight_of({open.begin(), open.end()}) >
                budget.knapsack->budget)
                return std::nullopt;
            break;
        }
    }
    if (open.empty()) return std::nullopt;
    Solution sol = solution_cost(inst, {open.begin(), open.end()});
    if (sol.cost != 0) return std::nullopt;
    return sol;
}

// The robust pipeline on one branch at one U: radius bounds, (LP_strong),
// splitting, then per offset the rounding loop and the integral conversion.
inline void rkmed_branch_pipeline(const ClusteringInstance& original,
                                  const GuessBranch& branch,
                                  const SparsityParams& params, const Rat& tau,
                                  const std::vector<Rat>& offsets, bool pseudo,
                                  const RunConfig& cfg, InvariantLog* log,
                                  std::vector<ComboDiag>* diag, int branch_id,
                                  BestTracker& best) {
    const ClusteringInstance& bi = branch.inst;
    RadiusBounds R;
    StrongLp strong;
    if (pseudo) {
        strong = build_basic_lp(bi);
    } else {
        R = construct_R(branch, params);
        strong = build_strong_lp(branch, params, R);
    }
    if (!cfg.dump_lp_prefix.empty()) {
        std::ofstream os(cfg.dump_lp_prefix + "_b" + std::to_string(branch_id) +
                         ".lp");
        write_lp_format(strong.lp, os);
    }
    VertexSolution lp_sol;
    try {
        lp_sol = solve_vertex(strong.lp);
    } catch (const LpInfeasible&) {
        return;  // wrong guess; branch contributes nothing
    }
    SplitSolution split = split_facilities(strong, lp_sol, bi);
    if (log)
        check_split_properties(
            split, bi, lp_sol.objective,
            pseudo ? std::nullopt : std::optional<Rat>(params.rho * params.U_tilde),
            *log);

    Rat scale = metric_unit_scale(bi);
    std::vector<Rat> scaled_R;
    if (!pseudo)
        for (const Rat& r : R.R) scaled_R.push_back(scale * r);
    BudgetSpec budget;  // cardinality

    for (int oi = 0; oi < (int)offsets.size(); ++oi) {
        const Rat& a = offsets[oi];
        DiscretizedMetric disc = discretize(bi, tau, a, scale);
        IterModel model{&bi, &split, &disc, budget, false, scaled_R};
        IterState st = init_iter_state(model);
        IterOutcome out;
        try {
            out = iterate(model, st, cfg.check, log);
        } catch (const LpInfeasible&) {
            continue;  // bad guess surfaced mid-loop
        }
        Candidate cand;
        cand.branch_id = branch_id;
        cand.U = params.U;
        cand.offset_a = a;
        cand.offset_idx = oi;
        cand.terminal_frac = count_fractional(out.terminal.values).first;
        cand.trace = out.trace;

        Solution branch_sol;
        try {
            if (pseudo)
                branch_sol = pseudo_solution(model, st, out.terminal.values);
            else
                branch_sol = to_integral(model, st, out.terminal.values, log);
        } catch (const Infeasible&) {
            continue;
        }
        int budget_cap = *bi.k + (pseudo ? 1 : 0);
        if ((int)branch_sol.open.size() > budget_cap) continue;
        Solution full;
        try {
            full = assemble_original(branch_sol, original, branch);
        } catch (const NotEnoughClients&) {
            continue;
        } catch (const Infeasible&) {
            continue;
        }
        if ((int)full.served.size() < original.m) continue;
        cand.sol = std::move(full);

        if (diag) {
            ComboDiag d;
            d.branch_id = branch_id;
            d.U = params.U;
            d.offset_a = a;
            fill_iter_diag(d, model, st, out);
            d.cost = cand.sol.cost;
            d.valid = true;
            diag->push_back(d);
        }
        best.consider(cand);
    }
}

}  // namespace detail

// Robust k-median/k-means driver over (U grid) x (branches) x (offsets).
inline SolutionReport run_rkmed(const ClusteringInstance& inst, const RunConfig& cfg,
                                std::vector<ComboDiag>* diag = nullptr,
                                InvariantLog* log = nullptr) {
    const int q = inst.q;
    if (!inst.k) throw BadParams("robust objective requires k");
    auto [rho_d, delta_d] = derive_rho_delta(cfg.epsilon, q);
    Rat rho = cfg.rho.value_or(rho_d);
    Rat delta = cfg.delta.value_or(delta_d);
    Rat tau = cfg.tau.value_or(tau_default(q));
    auto offsets = offsets_list(tau, cfg.offsets, cfg.seed);

    detail::BestTracker best;

    if (cfg.mode == Mode::Pseudo) {
        GuessBranch trivial = make_branch(inst, {}, inst.pre_opened, inst.m);
        SparsityParams params = make_params(rho, delta, 0, q);
        detail::rkmed_branch_pipeline(inst, trivial, params, tau, offsets, true, cfg,
                                      log, diag, 0, best);
    } else if (cfg.mode == Mode::OracleGuided) {
        OracleResult opt = brute_force(inst, {}, cfg.oracle_cap);
        SparsityParams params = make_params(rho, delta, opt.opt_cost, q);
        auto sp = sparsify_with_oracle(inst, opt.best_open, opt.best_served, params);
        if (log) {
            std::vector<int> surviving;
            std::vector<char> removed(inst.num_clients, 0);
            for (int j : sp.branch.removed_clients) removed[j] = 1;
            std::map<int, int> to_branch;
            for (int bj = 0; bj < (int)sp.branch.client_map.size(); ++bj)
                to_branch[sp.branch.client_map[bj]] = bj;
            for (int j : opt.best_served)
                if (!removed[j]) surviving.push_back(to_branch[j]);
            check_sparse_conditions(sp.branch, opt.best_open, surviving, params, false,
                                    *log);
            check_reduction_cost_bound(inst, sp.branch, opt.best_open, opt.best_served,
                                       params, *log);
            RadiusBounds rb = construct_R(sp.branch, params);
            check_R_property(sp.branch, rb, params, *log);
        }
        detail::rkmed_branch_pipeline(inst, sp.branch, params, tau, offsets, false,
                                      cfg, log, diag, 0, best);
    } else {
        // Full search: ascending U grid with caps-bounded branch enumeration,
        // stopping once the best valid cost meets the alpha_q(1+eps) U bound.
        if (auto zero = detail::zero_cost_probe(inst, BudgetSpec{})) {
            detail::Candidate c;
            c.sol = *zero;
            c.branch_id = -1;
            best.consider(c);
        }
        Rat stop_factor = alpha_bound(q) * (1 + cfg.epsilon);
        auto grid = u_grid(inst, cfg.epsilon);
        int branch_id = 0;
        for (const Rat& U : grid) {
            SparsityParams params = make_params(rho, delta, U, q);
            std::set<std::tuple<std::vector<int>, std::vector<int>, int>> seen;
            enumerate_sparse_instances(
                inst, params, cfg.max_balls, cfg.max_preopen,
                [&](const GuessBranch& br) {
                    int lo = std::max(0, inst.m - (int)br.removed_clients.size());
                    int hi = std::min(inst.m, br.inst.num_clients);
                    if (br.m_prime < lo || br.m_prime > hi) return;
                    if (!seen.insert({br.removed_clients, br.pre_opened, br.m_prime})
                             .second)
                        return;
                    detail::rkmed_branch_pipeline(inst, br, params, tau, offsets,
                                                  false, cfg, log, diag, branch_id++,
                                                  best);
                });
            if (best.have() && best.best->sol.cost <= stop_factor * U) break;
        }
    }

    if (!best.have()) throw NoFeasibleSolution("no (U, branch, offset) combination "
                                               "produced a valid solution");
    SolutionReport rep;
    rep.problem = q == 1 ? Problem::RkMed : Problem::RkMeans;
    rep.mode = cfg.mode;
    rep.solution = best.best->sol;
    rep.branch_id = best.best->branch_id;
    rep.U = best.best->U;
    rep.offset_a = best.best->offset_a;
    rep.fractional_count = best.best->terminal_frac;
    if (cfg.trace) rep.trace = best.best->trace;
    return rep;
}

// Dispatch over the four problems; matroid and knapsack instances carry their
// constraint in the parsed input.
inline SolutionReport run_driver(const ParsedInstance& pin, const RunConfig& cfg,
                                 std::vector<ComboDiag>* diag = nullptr,
                                 InvariantLog* log = nullptr) {
    const ClusteringInstance& inst = pin.inst;
    switch (cfg.problem) {
        case Problem::RkMed:
        case Problem::RkMeans: {
            int want_q = cfg.problem == Problem::RkMed ? 1 : 2;
            if (inst.q != want_q)
                throw BadParams("instance q does not match the requested problem");
            return run_rkmed(inst, cfg, diag, log);
        }
        case Problem::MatMed: {
            if (cfg.mode == Mode::Pseudo)
                throw BadParams("matroid median has no pseudo mode");
            if (!pin.matroid) throw BadParams("instance carries no partition");
            VariantOptions vo;
            vo.tau = cfg.tau;
            vo.seed = cfg.seed;
            vo.offsets = cfg.offsets;
            vo.check = cfg.check;
            vo.log = log;
            vo.diag = diag;
            SolutionReport rep;
            rep.problem = Problem::MatMed;
            rep.mode = cfg.mode;
            rep.solution = matroid_median(inst, *pin.matroid, vo);
            rep.fractional_count = 0;
            if (diag && !diag->empty()) {
                rep.offset_a = diag->back().offset_a;
                if (cfg.trace) {
                    for (const auto& d : *diag)
                        if (d.cost == rep.solution.cost) {
                            rep.trace = d.trace;
                            rep.offset_a = d.offset_a;
                            break;
                        }
                }
            }
            return rep;
        }
        case Problem::KnapMed: {
            if (cfg.mode == Mode::Pseudo)
                throw BadParams("knapsack median has no pseudo mode");
            if (!pin.knapsack) throw BadParams("instance carries no weights");
            KnapsackOptions ko;
            ko.mode = cfg.mode == Mode::Full ? KnapsackOptions::Mode::Full
                                             : KnapsackOptions::Mode::OracleGuided;
            ko.epsilon = cfg.epsilon;
            ko.rho = cfg.rho;
            ko.delta = cfg.delta;
            ko.tau = cfg.tau;
            ko.seed = cfg.seed;
            ko.offsets = cfg.offsets;
            ko.max_balls = cfg.max_balls;
            ko.max_preopen = cfg.max_preopen;
            ko.oracle_cap = cfg.oracle_cap;
            ko.check = cfg.check;
            ko.log = log;
            ko.diag = diag;
            SolutionReport rep;
            rep.problem = Problem::KnapMed;
            rep.mode = cfg.mode;
            rep.solution = knapsack_median(inst, *pin.knapsack, ko);
            if (diag)
                for (const auto& d : *diag)
                    if (d.cost == rep.solution.cost) {
                        rep.U = d.U;
                        rep.offset_a = d.offset_a;
                        rep.branch_id = d.branch_id;
                        rep.fractional_count = d.terminal_fractional;
                        if (cfg.trace) rep.trace = d.trace;
                        break;
                    }
            return rep;
        }
    }
    throw BadParams("unknown problem");
}

inline const char* problem_name(Problem p) {
    switch (p) {
        case Problem::RkMed: return "rkmed";
        case Problem::RkMeans: return "rkmeans";
        case Problem::MatMed: return "matmed";
        case Problem::KnapMed: return "knapmed";
    }
    return "?";
}

inline const char* mode_name(Mode m) {
    switch (m) {
        case Mode::Full: return "full";
        case Mode::Pseudo: return "pseudo";
        case Mode::OracleGuided: return "oracle-guided";
    }
    return "?";
}

inline Json report_to_json(const SolutionReport& rep, const ClusteringInstance& inst) {
    Json j;
    j["problem"] = problem_name(rep.problem);
    j["mode"] = mode_name(rep.mode);
    j["open"] = Json::array();
    for (int i : rep.solution.open) j["open"].push_back(inst.facility_label(i));
    j["served"] = Json::array();
    for (int c : rep.solution.served) j["served"].push_back(inst.client_label(c));
    j["cost"] = rat_to_string(rep.solution.cost);
    j["branch_id"] = rep.branch_id;
    j["U"] = rat_to_string(rep.U);
    j["offset_a"] = rat_to_string(rep.offset_a);
    j["fractional_count"] = rep.fractional_count;
    j["invariant_log"] = rep.invariant_log;
    if (!rep.trace.empty()) {
        Json tr = Json::array();
        for (const auto& e : rep.trace)
            tr.push_back(Json{{"objective", rat_to_string(e.objective)},
                              {"fractional", e.fractional},
                              {"c_full", e.c_full},
                              {"c_star", e.c_star}});
        j["trace"] = std::move(tr);
    }
    return j;
}

// Aggregates an invariant log into per-name pass/fail counts.
inline std::vector<std::string> summarize_log(const InvariantLog& log) {
    std::map<std::string, std::pair<long, long>> agg;  // name -> (pass, fail)
    for (const auto& e : log.entries) {
        auto& pf = agg[e.name];
        (e.pass ? pf.first : pf.second) += 1;
    }
    std::vector<std::string> out;
    for (const auto& [name, pf] : agg)
        out.push_back(name + ": " + std::to_string(pf.first) + " pass, " +
                      std::to_string(pf.second) + " fail");
    return out;
}

}  // namespace rkm
