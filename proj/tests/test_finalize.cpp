#include <catch2/catch_amalgamated.hpp>

#include "rkm/driver.hpp"
#include "rkm/finalize.hpp"
#include "rkm/generators.hpp"
#include "rkm/oracle.hpp"

using namespace rkm;

namespace {

struct Run {
    ClusteringInstance inst;
    GuessBranch branch;
    SparsityParams params{Rat(1, 16), Rat(1, 4), 0, 0};
    RadiusBounds R;
    StrongLp strong;
    SplitSolution split;
    DiscretizedMetric disc;
    std::vector<Rat> scaled_R;
    IterState st;
    IterOutcome out;
    // model pieces must outlive the IterModel pointers
    std::unique_ptr<IterModel> model;

    static Run make(std::uint64_t seed, int n = 12, std::uint64_t offset_seed = 1) {
        Run r;
        r.inst = random_metric(n, seed, 4);
        auto opt = brute_force(r.inst);
        r.params = make_params(Rat(1, 16), Rat(1, 4), opt.opt_cost, r.inst.q);
        r.branch = sparsify_with_oracle(r.inst, opt.best_open, opt.best_served,
                                        r.params)
                       .branch;
        r.R = construct_R(r.branch, r.params);
        r.strong = build_strong_lp(r.branch, r.params, r.R);
        auto vs = solve_vertex(r.strong.lp);
        r.split = split_facilities(r.strong, vs, r.branch.inst);
        Rat tau = tau_default(r.inst.q);
        Rat scale = metric_unit_scale(r.branch.inst);
        r.disc = discretize(r.branch.inst, tau, sample_offset(offset_seed, tau), scale);
        for (const Rat& x : r.R.R) r.scaled_R.push_back(scale * x);
        r.model = std::make_unique<IterModel>(IterModel{
            &r.branch.inst, &r.split, &r.disc, BudgetSpec{}, false, r.scaled_R});
        r.st = init_iter_state(*r.model);
        r.out = iterate(*r.model, r.st);
        return r;
    }
};

}  // namespace

TEST_CASE("integral terminal vertices pass through unchanged") {
    for (std::uint64_t seed : {3u, 10u, 41u}) {
        auto r = Run::make(seed);
        if (count_fractional(r.out.terminal.values).first != 0) continue;
        InvariantLog log;
        Solution sol = to_integral(*r.model, r.st, r.out.terminal.values, &log);
        REQUIRE(log.all_pass());
        REQUIRE((int)sol.open.size() <= *r.branch.inst.k);
        // every copy at one stays open after dedup to originals
        for (int c = 0; c < (int)r.split.y_star.size(); ++c)
            if (r.out.terminal.values[c] == 1)
                REQUIRE(std::binary_search(sol.open.begin(), sol.open.end(),
                                           r.split.copy_orig[c]));
        REQUIRE((int)sol.served.size() >= r.branch.inst.m);
    }
}

TEST_CASE("two-fractional conversion keeps the larger partial side") {
    bool exercised = false;
    for (std::uint64_t seed = 1; seed < 200 && !exercised; ++seed) {
        auto r = Run::make(seed, 12, seed);
        auto [cnt, idx] = count_fractional(r.out.terminal.values);
        if (cnt != 2) continue;
        exercised = true;
        InvariantLog log;
        ConversionContext ctx;
        Solution sol = to_integral(*r.model, r.st, r.out.terminal.values, &log, &ctx);
        REQUIRE(log.all_pass());
        REQUIRE(ctx.C1.size() >= ctx.C2.size());
        REQUIRE((int)sol.open.size() <= *r.branch.inst.k);
        for (int i : r.branch.pre_opened)
            REQUIRE(std::binary_search(sol.open.begin(), sol.open.end(), i));
        long covered = r.st.count_full() + (long)ctx.C1.size();
        REQUIRE(covered >= r.branch.inst.m);
    }
    INFO("no two-fractional terminal found in the sweep");
    CHECK(exercised);
}

TEST_CASE("pseudo rounding opens at most k+1 facilities") {
    for (std::uint64_t seed : {4u, 9u, 16u}) {
        auto inst = random_metric(12, seed, 4);
        GuessBranch trivial = make_branch(inst, {}, {}, inst.m);
        auto strong = build_basic_lp(trivial.inst);
        auto vs = solve_vertex(strong.lp);
        auto split = split_facilities(strong, vs, trivial.inst);
        Rat tau = tau_default(inst.q);
        Rat scale = metric_unit_scale(trivial.inst);
        auto disc = discretize(trivial.inst, tau, sample_offset(seed, tau), scale);
        std::vector<Rat> no_R;
        IterModel model{&trivial.inst, &split, &disc, BudgetSpec{}, false, no_R};
        auto st = init_iter_state(model);
        auto out = iterate(model, st);
        auto [cnt, idx] = count_fractional(out.terminal.values);
        Solution sol = pseudo_solution(model, st, out.terminal.values);
        REQUIRE((int)sol.open.size() <= *inst.k + 1);
        if (cnt == 0) REQUIRE((int)sol.open.size() <= *inst.k);
    }
}

TEST_CASE("assembly over an identity branch is the identity") {
    auto inst = random_metric(10, 30, 3);
    GuessBranch br = make_branch(inst, {}, {}, inst.m);
    Solution bsol = solution_cost(br.inst, {0, 1});
    Solution full = assemble_original(bsol, inst, br);
    REQUIRE(full.cost == bsol.cost);
    REQUIRE(full.served == bsol.served);
}

TEST_CASE("assembly adds the cheapest removed clients") {
    auto inst = random_metric(11, 31, 3);
    inst.m = 6;
    std::vector<int> removed{0, 2, 5, 7};
    GuessBranch br = make_branch(inst, removed, {}, 4);  // need = 2
    Solution bsol = solution_cost(br.inst, {0, 1}, 4);
    Solution full = assemble_original(bsol, inst, br);
    REQUIRE((int)full.served.size() == 6);
    // the two added clients are the two nearest removed ones
    auto nv = nearest_vector_pair(inst, full.open);
    std::vector<std::pair<Rat, int>> order;
    for (int j : removed)
        order.push_back({rat_pow_q(nv.c[inst.client_point(j)], inst.q), j});
    std::stable_sort(order.begin(), order.end());
    for (int t = 0; t < 2; ++t)
        REQUIRE(std::binary_search(full.served.begin(), full.served.end(),
                                   order[t].second));
    // exact recomputation from scratch
    Rat want = 0;
    for (int j : full.served) want += rat_pow_q(nv.c[inst.client_point(j)], inst.q);
    REQUIRE(full.cost == want);

    GuessBranch impossible = make_branch(inst, {0}, {}, 3);  // need = 3 > removed
    REQUIRE_THROWS_AS(assemble_original(solution_cost(impossible.inst, {0, 1}, 3), inst,
                                        impossible),
                      NotEnoughClients);
}

TEST_CASE("zero-cost probe finds collocated coverage in full mode") {
    // m clients collocated with a facility, k = 1
    ClusteringInstance inst;
    inst.num_facilities = 2;
    inst.num_clients = 4;
    std::vector<long> pos{0, 9, 0, 0, 0, 5};
    int n = 6;
    inst.dist.assign(n, std::vector<Rat>(n));
    for (int p = 0; p < n; ++p)
        for (int r = 0; r < n; ++r) inst.dist[p][r] = std::abs(pos[p] - pos[r]);
    inst.k = 1;
    inst.m = 3;
    inst.q = 1;
    RunConfig cfg;
    cfg.mode = Mode::Full;
    auto rep = run_rkmed(inst, cfg);
    REQUIRE(rep.solution.cost == 0);
    REQUIRE((int)rep.solution.served.size() >= 3);
}
