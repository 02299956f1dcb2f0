// Command-line front end: instance generation, pipeline runs, invariant
// verification, brute-force oracles and ratio benchmarks.  JSON in, JSON out.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rkm/rkm.hpp"

using namespace rkm;

namespace {

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path);
    if (!in) throw BadParams("cannot open input '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const Json& j) {
    std::string text = j.dump(2);
    text.push_back('\n');
    if (path == "-" || path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw BadParams("cannot open output '" + path + "'");
    out << text;
}

struct CommonFlags {
    std::string problem = "rkmed";
    std::string mode = "full";
    double epsilon = 0.5;
    std::string rho, delta, tau;  // rationals as strings, empty = default
    std::uint64_t seed = 1;
    int offsets = 1;
    int max_balls = 2, max_preopen = 2;
    int oracle_cap = 15;
    bool pseudo = false;
    bool trace = false;
    std::string input = "-";
    std::string output = "-";
    std::string dump_lp;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_mode = true) {
    cmd->add_option("--problem", f.problem, "rkmed | rkmeans | matmed | knapmed");
    if (with_mode)
        cmd->add_option("--mode", f.mode,
                        "full (a.k.a. enumerate) | pseudo | oracle-guided");
    cmd->add_option("--epsilon", f.epsilon, "approximation slack (default 0.5)");
    cmd->add_option("--rho", f.rho, "sparsity parameter as p/q (default from epsilon)");
    cmd->add_option("--delta", f.delta, "ball parameter as p/q (default from epsilon)");
    cmd->add_option("--tau", f.tau, "discretization base as p/q (default per q)");
    cmd->add_option("--seed", f.seed, "random offset seed");
    cmd->add_option("--offsets", f.offsets,
                    "N > 1 evaluates N grid offsets and keeps the best");
    cmd->add_option("--max-balls", f.max_balls, "enumeration cap on removed balls");
    cmd->add_option("--max-preopen", f.max_preopen,
                    "enumeration cap on pre-opened facilities");
    cmd->add_option("--oracle-cap", f.oracle_cap, "brute-force facility cap");
    cmd->add_flag("--pseudo", f.pseudo, "pseudo-approximation mode (k+1 facilities)");
    cmd->add_flag("--trace", f.trace, "embed the per-iteration rounding trace");
    cmd->add_option("--input", f.input, "instance JSON path, - for stdin");
    cmd->add_option("--output", f.output, "report path, - for stdout");
    cmd->add_option("--dump-lp", f.dump_lp, "prefix for LP interchange dumps");
}

RunConfig to_config(const CommonFlags& f) {
    RunConfig cfg;
    if (f.problem == "rkmed") cfg.problem = Problem::RkMed;
    else if (f.problem == "rkmeans") cfg.problem = Problem::RkMeans;
    else if (f.problem == "matmed") cfg.problem = Problem::MatMed;
    else if (f.problem == "knapmed") cfg.problem = Problem::KnapMed;
    else throw BadParams("unknown problem '" + f.problem + "'");

    std::string mode = f.pseudo ? "pseudo" : f.mode;
    if (mode == "full" || mode == "enumerate") cfg.mode = Mode::Full;
    else if (mode == "pseudo") cfg.mode = Mode::Pseudo;
    else if (mode == "oracle-guided") cfg.mode = Mode::OracleGuided;
    else throw BadParams("unknown mode '" + mode + "'");

    if (cfg.problem == Problem::MatMed && cfg.mode == Mode::Pseudo)
        throw BadParams("matmed forbids --pseudo");
    if (cfg.problem == Problem::KnapMed && cfg.mode == Mode::Pseudo)
        throw BadParams("knapmed forbids --pseudo");

    cfg.epsilon = rat_from_string(std::to_string(f.epsilon));
    if (!f.rho.empty()) cfg.rho = rat_from_string(f.rho);
    if (!f.delta.empty()) cfg.delta = rat_from_string(f.delta);
    if (!f.tau.empty()) cfg.tau = rat_from_string(f.tau);
    cfg.seed = f.seed;
    cfg.offsets = f.offsets;
    cfg.max_balls = f.max_balls;
    cfg.max_preopen = f.max_preopen;
    cfg.oracle_cap = f.oracle_cap;
    cfg.trace = f.trace;
    cfg.dump_lp_prefix = f.dump_lp;
    return cfg;
}

int cmd_generate(const std::string& family, int t, int n, int dim, std::uint64_t seed,
                 int q, std::optional<int> nF, std::optional<int> k,
                 std::optional<int> m, int partition_classes, bool with_weights,
                 const std::string& output) {
    ClusteringInstance inst;
    if (family == "gap-a") inst = gap_a(t);
    else if (family == "gap-b") inst = gap_b(t);
    else if (family == "random-metric") inst = random_metric(n, seed, nF, k, m, q);
    else if (family == "euclidean") inst = euclidean(n, dim, seed, q, 20, nF, k, m);
    else throw BadParams("unknown family '" + family + "'");
    validate_instance(inst);

    std::optional<PartitionMatroid> mat;
    std::optional<KnapsackConstraint> kn;
    if (partition_classes > 0) {
        mat = random_partition(inst, partition_classes, seed + 101);
        mat->validate(inst.num_facilities);
    }
    if (with_weights) kn = random_knapsack(inst, seed + 202);
    write_output(output, instance_to_json(inst, mat ? &*mat : nullptr,
                                          kn ? &*kn : nullptr));
    return 0;
}

int cmd_run(const CommonFlags& flags) {
    RunConfig cfg = to_config(flags);
    auto pin = instance_from_json(nlohmann::json::parse(read_input(flags.input)));
    validate_instance(pin.inst);
    SolutionReport rep = run_driver(pin, cfg);
    write_output(flags.output, report_to_json(rep, pin.inst));
    return 0;
}

int cmd_verify(const CommonFlags& flags) {
    RunConfig cfg = to_config(flags);
    cfg.check = CheckLevel::EveryStep;
    auto pin = instance_from_json(nlohmann::json::parse(read_input(flags.input)));
    validate_instance(pin.inst);
    InvariantLog log;
    Json out;
    try {
        SolutionReport rep = run_driver(pin, cfg, nullptr, &log);
        rep.invariant_log = summarize_log(log);
        out = report_to_json(rep, pin.inst);
        out["status"] = log.all_pass() ? "pass" : "fail";
        write_output(flags.output, out);
        return log.all_pass() ? 0 : 1;
    } catch (const InvariantViolation& e) {
        out["status"] = "fail";
        out["error"] = e.what();
        out["invariant_log"] = summarize_log(log);
        write_output(flags.output, out);
        return 1;
    }
}

int cmd_oracle(const CommonFlags& flags) {
    RunConfig cfg = to_config(flags);
    auto pin = instance_from_json(nlohmann::json::parse(read_input(flags.input)));
    validate_instance(pin.inst);
    ClusteringInstance inst = pin.inst;
    OracleConstraint oc;
    if (cfg.problem == Problem::MatMed) {
        if (!pin.matroid) throw BadParams("matmed oracle needs a partition");
        oc = {BudgetKind::Partition, &*pin.matroid, nullptr};
        inst.m = inst.num_clients;
    } else if (cfg.problem == Problem::KnapMed) {
        if (!pin.knapsack) throw BadParams("knapmed oracle needs weights");
        oc = {BudgetKind::Knapsack, nullptr, &*pin.knapsack};
        inst.m = inst.num_clients;
    }
    OracleResult res = brute_force(inst, oc, cfg.oracle_cap);
    Json j;
    j["opt_cost"] = rat_to_string(res.opt_cost);
    j["open"] = Json::array();
    for (int i : res.best_open) j["open"].push_back(inst.facility_label(i));
    j["served"] = Json::array();
    for (int c : res.best_served) j["served"].push_back(inst.client_label(c));
    j["enumerated"] = res.enumerated;
    if (pin.inst.k) j["lp_basic"] = rat_to_string(lp_basic_value(pin.inst));
    write_output(flags.output, j);
    return 0;
}

int cmd_bench(const CommonFlags& flags, int count, int n, int q) {
    RunConfig cfg = to_config(flags);
    if (cfg.mode == Mode::Full) cfg.mode = Mode::OracleGuided;
    Json runs = Json::array();
    std::vector<Json> slots(count);
    parallel_for_indexed(count, [&](int idx) {
        std::uint64_t seed = flags.seed + idx;
        ClusteringInstance inst = random_metric(n, seed, std::nullopt, std::nullopt,
                                                std::nullopt, q);
        ParsedInstance pin;
        pin.inst = inst;
        if (cfg.problem == Problem::MatMed) {
            pin.matroid = random_partition(inst, 2 + (int)(seed % 2), seed + 101);
            pin.inst.k.reset();
        }
        if (cfg.problem == Problem::KnapMed) {
            pin.knapsack = random_knapsack(inst, seed + 202);
            pin.inst.k.reset();
        }
        RunConfig rc = cfg;
        rc.seed = seed;
        SolutionReport rep = run_driver(pin, rc);

        ClusteringInstance oinst = pin.inst;
        OracleConstraint oc;
        if (cfg.problem == Problem::MatMed) {
            oc = {BudgetKind::Partition, &*pin.matroid, nullptr};
            oinst.m = oinst.num_clients;
        } else if (cfg.problem == Problem::KnapMed) {
            oc = {BudgetKind::Knapsack, nullptr, &*pin.knapsack};
            oinst.m = oinst.num_clients;
        }
        OracleResult opt = brute_force(oinst, oc, cfg.oracle_cap);
        Json r;
        r["seed"] = seed;
        r["cost"] = rat_to_string(rep.solution.cost);
        r["opt"] = rat_to_string(opt.opt_cost);
        r["ratio"] = opt.opt_cost == 0
                         ? (rep.solution.cost == 0 ? 1.0 : -1.0)
                         : rat_to_double(rep.solution.cost / opt.opt_cost);
        slots[idx] = std::move(r);
    });
    double worst = 0, sum = 0;
    for (auto& r : slots) {
        worst = std::max(worst, r["ratio"].get<double>());
        sum += r["ratio"].get<double>();
        runs.push_back(std::move(r));
    }
    Json j;
    j["problem"] = flags.problem;
    j["count"] = count;
    j["max_ratio"] = worst;
    j["mean_ratio"] = count ? sum / count : 0.0;
    j["runs"] = std::move(runs);
    write_output(flags.output, j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact LP-rounding solver for robust and constrained median problems"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "emit an instance as JSON");
    std::string family = "random-metric";
    int t = 3, n = 12, dim = 2, q = 1, partition_classes = 0;
    std::uint64_t gseed = 1;
    int nF = -1, k = -1, m = -1;
    bool with_weights = false;
    std::string goutput = "-";
    gen->add_option("--family", family, "gap-a | gap-b | random-metric | euclidean");
    gen->add_option("--t", t, "gap family parameter");
    gen->add_option("--n", n, "number of points");
    gen->add_option("--dim", dim, "euclidean dimension");
    gen->add_option("--seed", gseed, "generator seed");
    gen->add_option("--q", q, "objective exponent (1 or 2)");
    gen->add_option("--facilities", nF, "facility count override");
    gen->add_option("--k", k, "facility budget override");
    gen->add_option("--m", m, "coverage requirement override");
    gen->add_option("--partition-classes", partition_classes,
                    "attach a random partition matroid with this many classes");
    gen->add_flag("--with-weights", with_weights, "attach random knapsack weights");
    gen->add_option("--output", goutput, "path or - for stdout");

    CommonFlags runf, verf, oraf, benf;
    auto* run = app.add_subcommand("run", "run a solve pipeline");
    add_common(run, runf);
    auto* ver = app.add_subcommand("verify", "run with every per-step invariant check");
    add_common(ver, verf);
    auto* ora = app.add_subcommand("oracle", "exact brute-force optimum");
    add_common(ora, oraf, false);
    auto* ben = app.add_subcommand("bench", "ratio benchmark over random instances");
    add_common(ben, benf);
    int count = 10, bn = 12, bq = 1;
    ben->add_option("--count", count, "number of instances");
    ben->add_option("--n", bn, "points per instance");
    ben->add_option("--q", bq, "objective exponent");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_generate(family, t, n, dim, gseed, q,
                                nF < 0 ? std::nullopt : std::optional<int>(nF),
                                k < 0 ? std::nullopt : std::optional<int>(k),
                                m < 0 ? std::nullopt : std::optional<int>(m),
                                partition_classes, with_weights, goutput);
        if (run->parsed()) return cmd_run(runf);
        if (ver->parsed()) return cmd_verify(verf);
        if (ora->parsed()) return cmd_oracle(oraf);
        if (ben->parsed()) return cmd_bench(benf, count, bn, bq);
    } catch (const NoFeasibleSolution& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant failure: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
