#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rkm/finalize.hpp"
#include "rkm/generators.hpp"
#include "rkm/iterround.hpp"
#include "rkm/oracle.hpp"
#include "rkm/preprocess.hpp"

using namespace rkm;

namespace {

struct PipelineRig {
    ClusteringInstance inst;
    GuessBranch branch;
    SparsityParams params{Rat(1, 10), Rat(1, 4), 0, 0};
    RadiusBounds R;
    StrongLp strong;
    VertexSolution lp_sol;
    SplitSolution split;
    Rat scale = 1;

    static PipelineRig oracle_guided(const ClusteringInstance& in, Rat rho = Rat(1, 16),
                                     Rat delta = Rat(1, 4)) {
        PipelineRig rig;
        rig.inst = in;
        auto opt = brute_force(rig.inst);
        rig.params = make_params(rho, delta, opt.opt_cost, rig.inst.q);
        rig.branch =
            sparsify_with_oracle(rig.inst, opt.best_open, opt.best_served, rig.params)
                .branch;
        rig.R = construct_R(rig.branch, rig.params);
        rig.strong = build_strong_lp(rig.branch, rig.params, rig.R);
        rig.lp_sol = solve_vertex(rig.strong.lp);
        rig.split = split_facilities(rig.strong, rig.lp_sol, rig.branch.inst);
        rig.scale = metric_unit_scale(rig.branch.inst);
        return rig;
    }

    IterModel model(const DiscretizedMetric& disc, std::vector<Rat>& scaled_R) const {
        scaled_R.clear();
        for (const Rat& r : R.R) scaled_R.push_back(scale * r);
        return IterModel{&branch.inst, &split, &disc, BudgetSpec{}, false, scaled_R};
    }
};

}  // namespace

TEST_CASE("pseudo mode strengthened LP coincides with the natural LP") {
    auto inst = gap_a(3);
    auto basic = build_basic_lp(inst);
    REQUIRE(solve_vertex(basic.lp).objective == 12);
    // no cutoffs, no star rows, no fixings
    for (int i = 0; i < inst.num_facilities; ++i)
        for (int j = 0; j < inst.num_clients; ++j) REQUIRE(basic.x_var[i][j] >= 0);
}

TEST_CASE("a client with R below every distance cannot be served") {
    auto inst = random_metric(9, 2, 3);
    GuessBranch br = make_branch(inst, {}, {}, 0);  // m' = 0 keeps the LP feasible
    auto params = make_params(Rat(1, 10), Rat(1, 4), Rat(1000), inst.q);
    RadiusBounds rb;
    rb.R.assign(inst.num_clients, Rat(1000));
    rb.R_hat = rb.R;
    rb.R[0] = 0;  // below the smallest positive distance to client 0
    bool collocated = false;
    for (int i = 0; i < inst.num_facilities; ++i)
        if (inst.d_fc(i, 0) == 0) collocated = true;
    auto strong = build_strong_lp(br, params, rb);
    if (!collocated) {
        for (int i = 0; i < inst.num_facilities; ++i)
            REQUIRE(strong.x_var[i][0] == -1);
    }
}

TEST_CASE("oracle-guided strengthened LP value is near the branch optimum") {
    auto inst = random_metric(12, 8, 4);
    auto opt = brute_force(inst);
    auto params = make_params(Rat(1, 16), Rat(1, 4), opt.opt_cost, inst.q);
    auto res = sparsify_with_oracle(inst, opt.best_open, opt.best_served, params);
    auto rb = construct_R(res.branch, params);
    auto strong = build_strong_lp(res.branch, params, rb);
    auto vs = solve_vertex(strong.lp);
    Solution branch_opt = solution_cost(
        res.branch.inst,
        [&] {
            auto open = opt.best_open;
            for (int i : res.branch.pre_opened)
                if (std::find(open.begin(), open.end(), i) == open.end())
                    open.push_back(i);
            return open;
        }());
    REQUIRE(vs.objective <=
            rat_pow_q(1 + params.delta / 2, inst.q) * branch_opt.cost);
}

TEST_CASE("splitting without fractional x keeps one copy per facility") {
    // k = |F|: the LP opens everything integrally, x in {0, y}
    auto inst = random_metric(9, 4, 3);
    inst.k = inst.num_facilities;
    auto strong = build_basic_lp(inst);
    auto vs = solve_vertex(strong.lp);
    bool split_free = true;
    for (int i = 0; i < inst.num_facilities && split_free; ++i)
        for (int j = 0; j < inst.num_clients && split_free; ++j)
            if (strong.x_var[i][j] >= 0) {
                const Rat& x = vs.values[strong.x_var[i][j]];
                if (x != 0 && x != vs.values[strong.y_var[i]]) split_free = false;
            }
    if (split_free) {
        auto sp = split_facilities(strong, vs, inst);
        REQUIRE((int)sp.y_star.size() == inst.num_facilities);
    }
}

TEST_CASE("splitting a half-half facility balances the star costs") {
    // one facility fully open, two clients each connected one half
    ClusteringInstance inst;
    inst.num_facilities = 1;
    inst.num_clients = 2;
    std::vector<long> pos{0, 2, 5};
    inst.dist.assign(3, std::vector<Rat>(3));
    for (int p = 0; p < 3; ++p)
        for (int r = 0; r < 3; ++r) inst.dist[p][r] = std::abs(pos[p] - pos[r]);
    inst.k = 1;
    inst.m = 1;
    inst.q = 1;
    StrongLp model = build_basic_lp(inst);
    VertexSolution vs;
    vs.values.assign(model.lp.num_vars(), Rat(0));
    vs.values[model.y_var[0]] = 1;
    vs.values[model.x_var[0][0]] = Rat(1, 2);
    vs.values[model.x_var[0][1]] = Rat(1, 2);
    auto sp = split_facilities(model, vs, inst);
    REQUIRE(sp.y_star.size() == 2);
    REQUIRE(sp.F_init[0] == std::vector<int>{0});
    REQUIRE(sp.F_init[1] == std::vector<int>{1});
    REQUIRE(sp.y_star[0] == Rat(1, 2));
    REQUIRE(sp.y_star[1] == Rat(1, 2));
    REQUIRE(sp.star_cost[0] == 2);
    REQUIRE(sp.star_cost[1] == 5);
}

TEST_CASE("split solutions satisfy the six structural properties") {
    for (std::uint64_t seed : {6u, 13u, 29u}) {
        auto rig = PipelineRig::oracle_guided(random_metric(12, seed, 4));
        InvariantLog log;
        check_split_properties(rig.split, rig.branch.inst, rig.lp_sol.objective,
                               rig.params.rho * rig.params.U_tilde, log);
        REQUIRE(log.all_pass());
    }
}

TEST_CASE("offset sampling: determinism and the u = 0 endpoint") {
    Rat tau = tau_default(1);
    REQUIRE(offset_grid_value(tau, 8, 0) == 1);
    REQUIRE(sample_offset(42, tau) == sample_offset(42, tau));
    Rat a = sample_offset(7, tau);
    REQUIRE(a >= 1);
    REQUIRE(a < tau);
}

TEST_CASE("discretization basics") {
    ClusteringInstance inst;
    inst.num_facilities = 1;
    inst.num_clients = 2;
    inst.dist.assign(3, std::vector<Rat>(3, Rat(0)));
    inst.dist[0][1] = inst.dist[1][0] = 3;
    inst.dist[0][2] = inst.dist[2][0] = 0;
    inst.dist[1][2] = inst.dist[2][1] = 3;
    inst.m = 2;
    inst.q = 1;
    auto dm = discretize(inst, Rat(2), Rat(1));
    REQUIRE(dm.level[0][1] == -1);          // d = 0 stays at level -1
    REQUIRE(dm.dprime_scaled(0, 1) == 0);
    REQUIRE(dm.level[0][0] == 2);           // smallest power of 2 above 3
    REQUIRE(dm.dprime_scaled(0, 0) == 4);
}

TEST_CASE("discretized distances dominate and stay within a tau factor") {
    auto inst = random_metric(12, 33, 4);
    Rat tau = tau_default(inst.q);
    Rat scale = metric_unit_scale(inst);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto dm = discretize(inst, tau, sample_offset(seed, tau), scale);
        for (int i = 0; i < inst.num_facilities; ++i)
            for (int j = 0; j < inst.num_clients; ++j) {
                Rat dprime = dm.dprime_scaled(i, j);
                Rat scaled = scale * inst.d_fc(i, j);
                REQUIRE(dprime >= scaled);
                REQUIRE(dprime <= tau * scaled);
            }
    }
}

TEST_CASE("initial state: levels, virtual clients, inner balls") {
    auto rig = PipelineRig::oracle_guided(random_metric(12, 44, 4));
    Rat tau = tau_default(rig.inst.q);
    auto dm = discretize(rig.branch.inst, tau, sample_offset(5, tau), rig.scale);
    std::vector<Rat> scaled_R;
    auto model = rig.model(dm, scaled_R);
    auto st = init_iter_state(model);
    REQUIRE(st.n_virtual == (int)rig.branch.pre_opened.size());
    for (int j = 0; j < st.n_real; ++j) {
        int want = -1;
        for (int c : st.F[j]) want = std::max(want, model.copy_level(c, j));
        REQUIRE(st.ell[j] == want);
        REQUIRE(!st.full[j]);
    }
    for (int v = 0; v < st.n_virtual; ++v) {
        int id = st.n_real + v;
        REQUIRE(st.ell[id] == -1);
        REQUIRE(st.in_cstar[id]);
        Rat mass = 0;
        for (int c : st.F[id]) mass += rig.split.y_star[c];
        REQUIRE(mass == 1);
    }
}

TEST_CASE("initial auxiliary objective matches the split cost under d'") {
    auto rig = PipelineRig::oracle_guided(random_metric(11, 3, 4));
    Rat tau = tau_default(rig.inst.q);
    auto dm = discretize(rig.branch.inst, tau, sample_offset(9, tau), rig.scale);
    std::vector<Rat> scaled_R;
    auto model = rig.model(dm, scaled_R);
    auto st = init_iter_state(model);
    auto lp = build_iter_lp(model, st);
    // feasibility of the split y*
    REQUIRE(lp_satisfied_by(lp, rig.split.y_star));
    Rat at_split = lp.eval_objective(rig.split.y_star);
    Rat direct = 0;
    for (int j = 0; j < st.n_real; ++j)
        for (int c : st.F[j])
            direct += dm.Dq(model.copy_level(c, j), rig.inst.q) * rig.split.y_star[c];
    REQUIRE(at_split == direct);
}

TEST_CASE("rounding terminates immediately when nothing is tight") {
    // k = |F| and m = 0: the optimum vertex is all-zero, no rule fires
    auto inst = random_metric(8, 21, 3, 3, 0);
    GuessBranch br = make_branch(inst, {}, {}, 0);
    auto params = make_params(Rat(1, 10), Rat(1, 4), Rat(100), inst.q);
    auto rb = construct_R(br, params);
    auto strong = build_strong_lp(br, params, rb);
    auto vs = solve_vertex(strong.lp);
    auto sp = split_facilities(strong, vs, br.inst);
    Rat tau = tau_default(inst.q);
    Rat scale = metric_unit_scale(br.inst);
    auto dm = discretize(br.inst, tau, Rat(1), scale);
    std::vector<Rat> scaled_R;
    for (const Rat& r : rb.R) scaled_R.push_back(scale * r);
    IterModel model{&br.inst, &sp, &dm, BudgetSpec{}, false, scaled_R};
    auto st = init_iter_state(model);
    auto out = iterate(model, st);
    REQUIRE(out.iterations == 0);
    REQUIRE(out.trace.size() == 1);
}

TEST_CASE("rounding yields almost-integral vertices with monotone objectives") {
    for (std::uint64_t seed : {2u, 7u, 18u, 25u}) {
        auto rig = PipelineRig::oracle_guided(random_metric(12, seed, 4));
        Rat tau = tau_default(rig.inst.q);
        auto dm = discretize(rig.branch.inst, tau, sample_offset(seed, tau), rig.scale);
        std::vector<Rat> scaled_R;
        auto model = rig.model(dm, scaled_R);
        auto st = init_iter_state(model);
        InvariantLog log;
        auto out = iterate(model, st, CheckLevel::EveryStep, &log);
        REQUIRE(log.all_pass());
        REQUIRE(count_fractional(out.terminal.values).first <= 2);
        for (size_t t = 1; t < out.trace.size(); ++t)
            REQUIRE(out.trace[t].objective <= out.trace[t - 1].objective);
    }
}

TEST_CASE("C* update rules") {
    IterState st;
    st.n_real = 3;
    st.n_virtual = 0;
    st.F = {{0, 1}, {1, 2}, {5}};
    st.B = {{}, {}, {}};
    st.ell = {2, 1, 0};
    st.full = {1, 1, 1};
    st.in_cstar = {0, 0, 0};

    update_cstar(st, 0);  // C* empty: j is added
    REQUIRE(st.in_cstar[0]);
    update_cstar(st, 1);  // overlaps 0 with smaller level: 0 evicted
    REQUIRE(!st.in_cstar[0]);
    REQUIRE(st.in_cstar[1]);
    update_cstar(st, 0);  // guard: member 1 has smaller level and overlaps
    REQUIRE(!st.in_cstar[0]);
    update_cstar(st, 2);  // disjoint: both stay
    REQUIRE(st.in_cstar[1]);
    REQUIRE(st.in_cstar[2]);
    // pairwise disjointness of C* supports
    REQUIRE(!sets_intersect(st.F[1], st.F[2]));
}

TEST_CASE("fault injection: a corrupted inner ball is reported") {
    auto rig = PipelineRig::oracle_guided(random_metric(12, 57, 4));
    Rat tau = tau_default(rig.inst.q);
    auto dm = discretize(rig.branch.inst, tau, sample_offset(3, tau), rig.scale);
    std::vector<Rat> scaled_R;
    auto model = rig.model(dm, scaled_R);
    auto st = init_iter_state(model);
    iterate(model, st);
    int victim = -1;
    for (int j = 0; j < st.n_real && victim < 0; ++j)
        if (st.full[j] && !st.B[j].empty()) victim = j;
    if (victim < 0) return;  // nothing to corrupt on this seed
    st.B[victim].pop_back();
    InvariantLog log;
    log.throw_on_fail = false;
    check_iter_invariants(model, st, log);
    bool saw_failure = false;
    for (const auto& e : log.entries)
        if (e.name == "iter.3_inner_ball" && !e.pass) saw_failure = true;
    REQUIRE(saw_failure);
}

TEST_CASE("discretization expectation, light Monte Carlo") {
    Rat tau = tau_default(1);
    double target = (rat_to_double(tau) - 1) / std::log(rat_to_double(tau));
    double d = 3.0;
    double sum = 0;
    const int N = 20000;
    DiscretizedMetric dm;
    dm.tau = tau;
    for (int s = 1; s <= N; ++s) {
        dm.a = sample_offset(s, tau);
        sum += rat_to_double(dm.D(dm.level_of(Rat(3)))) / d;
    }
    double mean = sum / N;
    REQUIRE(std::abs(mean - target) / target < 0.05);
}
