#include <catch2/catch_amalgamated.hpp>

#include "rkm/generators.hpp"
#include "rkm/oracle.hpp"
#include "rkm/variants.hpp"

using namespace rkm;

TEST_CASE("one class with capacity k behaves like k-median") {
    auto inst = random_metric(12, 51, 4, std::nullopt, std::nullopt, 1);
    inst.k.reset();
    PartitionMatroid mat;
    mat.classes = {{0, 1, 2, 3}};
    mat.capacities = {2};
    VariantOptions vo;
    vo.offsets = 4;
    auto sol = matroid_median(inst, mat, vo);
    auto oinst = inst;
    oinst.m = oinst.num_clients;
    OracleConstraint oc{BudgetKind::Partition, &mat, nullptr};
    auto opt = brute_force(oinst, oc);
    REQUIRE(sol.cost >= opt.opt_cost);
    REQUIRE(sol.cost <= Rat(7081, 1000) * opt.opt_cost);
}

TEST_CASE("red-blue instance rounds to an integral vertex") {
    auto inst = random_metric(11, 52, 4, std::nullopt, std::nullopt, 1);
    inst.k.reset();
    PartitionMatroid mat;
    mat.classes = {{0, 2}, {1, 3}};
    mat.capacities = {1, 1};
    VariantOptions vo;
    std::vector<ComboDiag> diag;
    vo.diag = &diag;
    InvariantLog log;
    vo.log = &log;
    vo.check = CheckLevel::EveryStep;
    auto sol = matroid_median(inst, mat, vo);
    REQUIRE(log.all_pass());
    for (const auto& d : diag) REQUIRE(d.terminal_fractional == 0);
    for (int g = 0; g < 2; ++g) {
        int cnt = 0;
        for (int i : sol.open)
            if (std::find(mat.classes[g].begin(), mat.classes[g].end(), i) !=
                mat.classes[g].end())
                ++cnt;
        REQUIRE(cnt <= mat.capacities[g]);
    }
}

TEST_CASE("zero total capacity with clients present is infeasible") {
    auto inst = random_metric(8, 53, 3, std::nullopt, std::nullopt, 1);
    inst.k.reset();
    PartitionMatroid mat;
    mat.classes = {{0, 1, 2}};
    mat.capacities = {0};
    REQUIRE_THROWS_AS(matroid_median(inst, mat), Infeasible);
}

TEST_CASE("unit weights with budget k match the k-median shape") {
    auto inst = random_metric(11, 54, 4, std::nullopt, std::nullopt, 1);
    inst.k.reset();
    KnapsackConstraint kn;
    kn.weights.assign(4, Rat(1));
    kn.budget = 2;
    KnapsackOptions ko;
    ko.rho = Rat(1, 10);
    auto sol = knapsack_median(inst, kn, ko);
    REQUIRE((int)sol.open.size() <= 2);
    auto oinst = inst;
    oinst.m = oinst.num_clients;
    OracleConstraint oc{BudgetKind::Knapsack, nullptr, &kn};
    auto opt = brute_force(oinst, oc);
    REQUIRE(sol.cost >= opt.opt_cost);
}

TEST_CASE("knapsack rounding keeps the smaller-weight fractional copy") {
    bool exercised = false;
    for (std::uint64_t seed = 1; seed < 120 && !exercised; ++seed) {
        auto inst = random_metric(11, seed, 4, std::nullopt, std::nullopt, 1);
        inst.k.reset();
        auto kn = random_knapsack(inst, seed + 5);
        std::vector<ComboDiag> diag;
        KnapsackOptions ko;
        ko.rho = Rat(1, 10);
        ko.diag = &diag;
        Solution sol;
        try {
            sol = knapsack_median(inst, kn, ko);
        } catch (const NoFeasibleSolution&) {
            continue;
        }
        REQUIRE(kn.weight_of(sol.open) <= kn.budget);
        for (const auto& d : diag) {
            REQUIRE(d.terminal_fractional <= 2);
            if (d.terminal_fractional == 2) {
                REQUIRE(d.frac_pair_sums_one);
                exercised = true;
            }
        }
    }
    INFO("no two-fractional knapsack terminal in the sweep");
    CHECK(exercised);
}

TEST_CASE("knapsack sparsification mirrors the robust one under its q=1 rule") {
    auto inst = random_metric(12, 57, 4, std::nullopt, std::nullopt, 1);
    inst.k.reset();
    inst.m = inst.num_clients;
    auto kn = random_knapsack(inst, 8);
    OracleConstraint oc{BudgetKind::Knapsack, nullptr, &kn};
    auto opt = brute_force(inst, oc);

    SECTION("sparse input is unchanged") {
        auto params = make_params(Rat(1, 4), Rat(1, 4), opt.opt_cost * 1000 + 1, 1);
        auto res = sparsify_knapsack(inst, opt.best_open, params);
        REQUIRE(res.branch.removed_clients.empty());
        REQUIRE(res.branch.pre_opened.empty());
    }
    SECTION("conditions hold exhaustively after sparsification") {
        if (opt.opt_cost == 0) return;
        auto params = make_params(Rat(1, 12), Rat(1, 4), opt.opt_cost, 1);
        auto res = sparsify_knapsack(inst, opt.best_open, params);
        std::vector<int> surviving(res.branch.inst.num_clients);
        for (int j = 0; j < (int)surviving.size(); ++j) surviving[j] = j;
        InvariantLog log;
        check_sparse_conditions(res.branch, opt.best_open, surviving, params, true, log);
        REQUIRE(log.all_pass());
    }
}

TEST_CASE("a dense collocated cluster is removed under the knapsack rule") {
    // one facility far from a heap of collocated clients, another nearby
    ClusteringInstance inst;
    inst.num_facilities = 2;
    inst.num_clients = 6;
    std::vector<long> pos{0, 50, 49, 49, 49, 49, 49, 0};
    int n = 8;
    inst.dist.assign(n, std::vector<Rat>(n));
    for (int p = 0; p < n; ++p)
        for (int r = 0; r < n; ++r) inst.dist[p][r] = std::abs(pos[p] - pos[r]);
    inst.m = 6;
    inst.q = 1;
    KnapsackConstraint kn;
    kn.weights = {1, 1};
    kn.budget = 1;  // only one facility can open
    OracleConstraint oc{BudgetKind::Knapsack, nullptr, &kn};
    auto opt = brute_force(inst, oc);  // open f1: cost 5*1 + 50
    REQUIRE(opt.best_open == std::vector<int>{1});
    auto params = make_params(Rat(1, 10), Rat(1, 4), opt.opt_cost, 1);
    auto res = sparsify_knapsack(inst, opt.best_open, params);
    REQUIRE(!res.branch.removed_clients.empty());
    REQUIRE(res.branch.pre_opened == std::vector<int>{1});
}
