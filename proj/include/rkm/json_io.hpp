#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rkm/common.hpp"
#include "rkm/constraints.hpp"
#include "rkm/instance.hpp"

namespace rkm {

using Json = nlohmann::ordered_json;

inline Rat rat_from_json(const nlohmann::json& v) {
    if (v.is_number_integer()) return Rat((long)v.get<long long>());
    if (v.is_number_float()) return Rat(v.get<double>());  // exact binary value
    if (v.is_string()) return rat_from_string(v.get<std::string>());
    throw BadParams("cannot parse rational from JSON value " + v.dump());
}

struct ParsedInstance {
    ClusteringInstance inst;
    std::optional<PartitionMatroid> matroid;
    std::optional<KnapsackConstraint> knapsack;
};

namespace detail {

inline std::vector<std::string> labels_from_json(const nlohmann::json& arr) {
    std::vector<std::string> out;
    for (const auto& v : arr)
        out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    return out;
}

inline int label_index(const std::vector<std::string>& labels, const nlohmann::json& id) {
    std::string s = id.is_string() ? id.get<std::string>() : id.dump();
    for (int i = 0; i < (int)labels.size(); ++i)
        if (labels[i] == s) return i;
    throw BadParams("unknown id '" + s + "'");
}

// ceil of sqrt(s) to a multiple of 2^-prec_bits, exactly
inline Rat ceil_sqrt_to_grid(const Rat& s, int prec_bits) {
    if (s == 0) return Rat(0);
    mpz_class den4 = mpz_class(1) << (2 * prec_bits);
    mpz_class num = s.get_num() * den4;
    mpz_class floor_div = num / s.get_den();
    mpz_class g;
    mpz_sqrt(g.get_mpz_t(), floor_div.get_mpz_t());
    while (g * g * s.get_den() < num) g += 1;
    Rat r{g, mpz_class(1) << prec_bits};
    r.canonicalize();
    return r;
}

}  // namespace detail

inline ParsedInstance instance_from_json(const nlohmann::json& j, int sqrt_prec_bits = 20) {
    ParsedInstance out;
    ClusteringInstance& inst = out.inst;
    if (!j.contains("facilities") || !j.contains("clients") || !j.contains("dist"))
        throw BadParams("instance JSON needs facilities, clients and dist");
    inst.facility_labels = detail::labels_from_json(j.at("facilities"));
    inst.client_labels = detail::labels_from_json(j.at("clients"));
    inst.num_facilities = (int)inst.facility_labels.size();
    inst.num_clients = (int)inst.client_labels.size();
    inst.q = j.value("q", 1);
    if (j.contains("k") && !j.at("k").is_null()) inst.k = j.at("k").get<int>();
    inst.m = j.contains("m") && !j.at("m").is_null() ? j.at("m").get<int>()
                                                     : inst.num_clients;

    const int n = inst.num_points();
    const auto& dist = j.at("dist");
    std::string mode = dist.value("mode", "matrix");
    if (mode == "matrix") {
        const auto& rows = dist.at("rows");
        if ((int)rows.size() != n) throw BadParams("dist rows must cover F then C");
        inst.dist.assign(n, std::vector<Rat>(n));
        for (int p = 0; p < n; ++p) {
            if ((int)rows[p].size() != n) throw BadParams("dist matrix not square");
            for (int r = 0; r < n; ++r) inst.dist[p][r] = rat_from_json(rows[p][r]);
        }
    } else if (mode == "points") {
        int dim = dist.at("dim").get<int>();
        const auto& coords = dist.at("coords");
        if ((int)coords.size() != n) throw BadParams("coords must cover F then C");
        std::vector<std::vector<Rat>> pts(n);
        for (int p = 0; p < n; ++p) {
            if ((int)coords[p].size() != dim) throw BadParams("coord dim mismatch");
            for (const auto& c : coords[p]) pts[p].push_back(rat_from_json(c));
        }
        inst.dist.assign(n, std::vector<Rat>(n, Rat(0)));
        for (int p = 0; p < n; ++p)
            for (int r = p + 1; r < n; ++r) {
                Rat s = 0;
                for (int c = 0; c < dim; ++c) {
                    Rat diff = pts[p][c] - pts[r][c];
                    s += diff * diff;
                }
                inst.dist[p][r] = inst.dist[r][p] =
                    inst.q == 2 ? s : detail::ceil_sqrt_to_grid(s, sqrt_prec_bits);
            }
    } else {
        throw BadParams("dist mode must be 'matrix' or 'points'");
    }

    if (j.contains("pre_opened"))
        for (const auto& id : j.at("pre_opened"))
            inst.pre_opened.push_back(detail::label_index(inst.facility_labels, id));
    std::sort(inst.pre_opened.begin(), inst.pre_opened.end());

    if (j.contains("partition") && !j.at("partition").is_null()) {
        PartitionMatroid mat;
        for (const auto& cls : j.at("partition").at("classes")) {
            std::vector<int> g;
            for (const auto& id : cls)
                g.push_back(detail::label_index(inst.facility_labels, id));
            mat.classes.push_back(std::move(g));
        }
        for (const auto& c : j.at("partition").at("capacities"))
            mat.capacities.push_back(c.get<int>());
        mat.validate(inst.num_facilities);
        out.matroid = std::move(mat);
    }
    if (j.contains("weights") && !j.at("weights").is_null()) {
        KnapsackConstraint kn;
        for (const auto& w : j.at("weights").at("w")) kn.weights.push_back(rat_from_json(w));
        kn.budget = rat_from_json(j.at("weights").at("W"));
        kn.validate(inst.num_facilities);
        out.knapsack = std::move(kn);
    }
    return out;
}

inline Json instance_to_json(const ClusteringInstance& inst,
                             const PartitionMatroid* matroid = nullptr,
                             const KnapsackConstraint* knapsack = nullptr) {
    Json j;
    j["q"] = inst.q;
    if (inst.k) j["k"] = *inst.k;
    j["m"] = inst.m;
    j["facilities"] = Json::array();
    for (int i = 0; i < inst.num_facilities; ++i)
        j["facilities"].push_back(inst.facility_label(i));
    j["clients"] = Json::array();
    for (int c = 0; c < inst.num_clients; ++c) j["clients"].push_back(inst.client_label(c));
    Json rows = Json::array();
    for (const auto& row : inst.dist) {
        Json r = Json::array();
        for (const Rat& v : row) r.push_back(rat_to_string(v));
        rows.push_back(std::move(r));
    }
    j["dist"] = Json{{"mode", "matrix"}, {"rows", std::move(rows)}};
    j["pre_opened"] = Json::array();
    for (int i : inst.pre_opened) j["pre_opened"].push_back(inst.facility_label(i));
    if (matroid) {
        Json classes = Json::array();
        for (const auto& g : matroid->classes) {
            Json cls = Json::array();
            for (int i : g) cls.push_back(inst.facility_label(i));
            classes.push_back(std::move(cls));
        }
        j["partition"] = Json{{"classes", std::move(classes)},
                              {"capacities", matroid->capacities}};
    }
    if (knapsack) {
        Json w = Json::array();
        for (const Rat& v : knapsack->weights) w.push_back(rat_to_string(v));
        j["weights"] = Json{{"w", std::move(w)}, {"W", rat_to_string(knapsack->budget)}};
    }
    return j;
}

}  // namespace rkm
