#pragma once

#include <algorithm>
#include <functional>
#include <set>
#include <vector>

#include "rkm/common.hpp"
#include "rkm/constraints.hpp"
#include "rkm/instance.hpp"

namespace rkm {

// Sparsification parameters: the instance is sparsified against a guessed
// cost bound U; U_tilde = (1+delta/2)^q * U feeds the strengthened LP.
struct SparsityParams {
    Rat rho;
    Rat delta;
    Rat U;
    Rat U_tilde;
    int q = 1;
};

inline SparsityParams make_params(const Rat& rho, const Rat& delta, const Rat& U, int q) {
    if (!(rho > 0 && rho < Rat(1, 2)) || !(delta > 0 && delta < Rat(1, 2)))
        throw BadParams("rho and delta must lie in (0, 1/2)");
    if (U < 0) throw BadParams("U must be nonnegative");
    SparsityParams p{rho, delta, U, rat_pow_q(1 + delta / 2, q) * U, q};
    return p;
}

// Default epsilon -> (rho, delta) so that (1+delta/2)^q <= 1+eps/2 and the
// additive conversion term stays below (eps/2) U.
inline std::pair<Rat, Rat> derive_rho_delta(const Rat& epsilon, int q) {
    Rat delta = (q == 1) ? epsilon / 2 : epsilon / 5;
    if (delta >= Rat(1, 2)) delta = Rat(49, 100);
    Rat rho = epsilon * rat_pow_q(delta, q) / 20;
    if (rho >= Rat(1, 2)) rho = Rat(49, 100);
    return {rho, delta};
}

// Per-client connection-cost caps.  R_j = R_hat_j * (1 + 3 delta / 4) for the
// k-median/k-means rule; the knapsack rule sets R_hat = R.
struct RadiusBounds {
    std::vector<Rat> R;
    std::vector<Rat> R_hat;
};

// One guessed residual instance: removed clients, pre-opened facilities, and
// the number of clients the residual solution must serve.
struct GuessBranch {
    std::vector<int> removed_clients;  // original client indices, sorted
    std::vector<int> pre_opened;       // facility indices, sorted
    int m_prime = 0;
    ClusteringInstance inst;      // induced extended instance
    std::vector<int> client_map;  // branch client index -> original client index
};

inline GuessBranch make_branch(const ClusteringInstance& orig,
                               std::vector<int> removed, std::vector<int> s0,
                               int m_prime) {
    std::sort(removed.begin(), removed.end());
    removed.erase(std::unique(removed.begin(), removed.end()), removed.end());
    std::sort(s0.begin(), s0.end());
    s0.erase(std::unique(s0.begin(), s0.end()), s0.end());

    GuessBranch br;
    br.removed_clients = removed;
    br.pre_opened = s0;
    br.m_prime = m_prime;
    for (int j = 0; j < orig.num_clients; ++j)
        if (!std::binary_search(removed.begin(), removed.end(), j))
            br.client_map.push_back(j);

    ClusteringInstance& bi = br.inst;
    bi.num_facilities = orig.num_facilities;
    bi.num_clients = (int)br.client_map.size();
    bi.k = orig.k;
    bi.m = m_prime;
    bi.q = orig.q;
    bi.pre_opened = s0;
    std::vector<int> pts;
    for (int i = 0; i < orig.num_facilities; ++i) pts.push_back(i);
    for (int j : br.client_map) pts.push_back(orig.client_point(j));
    bi.dist.assign(pts.size(), std::vector<Rat>(pts.size()));
    for (size_t a = 0; a < pts.size(); ++a)
        for (size_t b = 0; b < pts.size(); ++b) bi.dist[a][b] = orig.dist[pts[a]][pts[b]];
    bi.facility_labels = orig.facility_labels;
    for (int j : br.client_map) bi.client_labels.push_back(orig.client_label(j));
    return br;
}

namespace detail {
inline std::vector<Rat> all_nonzero_distances(const ClusteringInstance& inst) {
    std::set<Rat> ds;
    for (int p = 0; p < inst.num_points(); ++p)
        for (int r = p + 1; r < inst.num_points(); ++r)
            if (inst.dist[p][r] != 0) ds.insert(inst.dist[p][r]);
    return {ds.begin(), ds.end()};
}

inline std::vector<Rat> fc_nonzero_distances(const ClusteringInstance& inst) {
    std::set<Rat> ds;
    for (int i = 0; i < inst.num_facilities; ++i)
        for (int j = 0; j < inst.num_clients; ++j)
            if (inst.d_fc(i, j) != 0) ds.insert(inst.d_fc(i, j));
    return {ds.begin(), ds.end()};
}
}  // namespace detail

struct SparsifyResult {
    GuessBranch branch;
    int ball_iterations = 0;
};

// Constructive sparsification against a known solution (S*, C*) of cost <= U:
// pre-open expensive stars, then repeatedly remove a dense ball around the
// lowest-index violating point and pre-open its serving facility.
// `knapsack_rule` switches to the q=1 conditions of the KnapMed variant,
// where the ball condition ranges over all remaining clients.
inline SparsifyResult sparsify_with_oracle(const ClusteringInstance& inst,
                                           const std::vector<int>& s_star,
                                           const std::vector<int>& c_star,
                                           const SparsityParams& params,
                                           bool knapsack_rule = false) {
    auto nv = nearest_vector_pair(inst, s_star);
    Rat cost = 0;
    for (int j : c_star) cost += rat_pow_q(nv.c[inst.client_point(j)], inst.q);
    if (cost > params.U)
        throw SolutionCostExceedsU("solution cost " + rat_to_string(cost) +
                                   " > U = " + rat_to_string(params.U));

    const int q = inst.q;
    std::vector<char> in_cstar(inst.num_clients, 0);
    for (int j : c_star) in_cstar[j] = 1;
    std::vector<char> removed(inst.num_clients, 0);
    std::set<int> s0;

    // Expensive stars first.
    for (int i : s_star) {
        Rat star = 0;
        for (int j : c_star)
            if (nv.kappa[inst.client_point(j)] == i)
                star += rat_pow_q(nv.c[inst.client_point(j)], q);
        if (star > params.rho * params.U) s0.insert(i);
    }

    // Ball-removal loop; the counted set is C* ∩ C' for the k-median rule and
    // all of C' for the knapsack rule.
    int iters = 0;
    for (;;) {
        int viol = -1;
        for (int p = 0; p < inst.num_points() && viol < 0; ++p) {
            const Rat& cp = nv.c[p];
            if (cp == 0) continue;
            Rat radius = params.delta * cp;
            long cnt = 0;
            for (int j = 0; j < inst.num_clients; ++j) {
                if (removed[j]) continue;
                if (!knapsack_rule && !in_cstar[j]) continue;
                if (inst.dist[p][inst.client_point(j)] <= radius) ++cnt;
            }
            if (Rat(cnt) * rat_pow_q(cp, q) > params.rho * params.U) viol = p;
        }
        if (viol < 0) break;
        ++iters;
        s0.insert(nv.kappa[viol]);
        Rat radius = params.delta * nv.c[viol];
        for (int j = 0; j < inst.num_clients; ++j)
            if (!removed[j] && inst.dist[viol][inst.client_point(j)] <= radius)
                removed[j] = 1;
    }

    std::vector<int> removed_list;
    int m_prime = 0;
    for (int j = 0; j < inst.num_clients; ++j) {
        if (removed[j])
            removed_list.push_back(j);
        else if (knapsack_rule || in_cstar[j])
            ++m_prime;
    }
    SparsifyResult res{
        make_branch(inst, removed_list, {s0.begin(), s0.end()}, m_prime), iters};
    return res;
}

// Exhaustive check of the sparse-instance conditions (both variants) for a
// branch w.r.t. the surviving solution.
inline void check_sparse_conditions(const GuessBranch& br, const std::vector<int>& s_star,
                                    const std::vector<int>& surviving_branch_clients,
                                    const SparsityParams& params, bool knapsack_rule,
                                    InvariantLog& log) {
    const ClusteringInstance& bi = br.inst;
    auto nv = nearest_vector_pair(bi, s_star);
    std::vector<char> surv(bi.num_clients, 0);
    for (int j : surviving_branch_clients) surv[j] = 1;
    std::vector<char> s0(bi.num_facilities, 0);
    for (int i : br.pre_opened) s0[i] = 1;

    for (int i : s_star) {
        if (s0[i]) continue;
        Rat star = 0;
        for (int j = 0; j < bi.num_clients; ++j)
            if (surv[j] && nv.kappa[bi.client_point(j)] == i)
                star += rat_pow_q(nv.c[bi.client_point(j)], bi.q);
        log.check(star <= params.rho * params.U, "sparse.star_cost",
                  "facility " + std::to_string(i));
    }
    for (int p = 0; p < bi.num_points(); ++p) {
        const Rat& cp = nv.c[p];
        long cnt = 0;
        for (int j = 0; j < bi.num_clients; ++j) {
            if (!knapsack_rule && !surv[j]) continue;
            if (bi.dist[p][bi.client_point(j)] <= params.delta * cp) ++cnt;
        }
        log.check(Rat(cnt) * rat_pow_q(cp, bi.q) <= params.rho * params.U,
                  "sparse.ball", "point " + std::to_string(p));
    }
}

// Reduction cost bound, checked exactly in oracle mode:
//   (1-d)^q/(1+d)^q * sum_{j in C* \ C'} d^q(j, S0) + sum_{j in C* n C'} d^q(j, S*) <= U.
inline void check_reduction_cost_bound(const ClusteringInstance& orig,
                                       const GuessBranch& br,
                                       const std::vector<int>& s_star,
                                       const std::vector<int>& c_star,
                                       const SparsityParams& params, InvariantLog& log) {
    std::vector<char> removed(orig.num_clients, 0);
    for (int j : br.removed_clients) removed[j] = 1;
    auto nv = nearest_vector_pair(orig, s_star);
    Rat removed_part = 0, kept_part = 0;
    for (int j : c_star) {
        if (removed[j]) {
            Rat best = 0;
            bool first = true;
            for (int i : br.pre_opened) {
                const Rat& d = orig.dist[i][orig.client_point(j)];
                if (first || d < best) best = d;
                first = false;
            }
            if (first) {
                log.check(false, "prep.reduction_bound", "removed client with empty S0");
                return;
            }
            removed_part += rat_pow_q(best, orig.q);
        } else {
            kept_part += rat_pow_q(nv.c[orig.client_point(j)], orig.q);
        }
    }
    Rat lhs = rat_pow_q(1 - params.delta, orig.q) / rat_pow_q(1 + params.delta, orig.q) *
                  removed_part +
              kept_part;
    log.check(lhs <= params.U, "prep.reduction_bound");
}

// Enumerates guessed branches: unions of <= max_balls candidate balls
// Ball_C(p, delta*r), <= max_preopen pre-opened facilities, and every
// m' in 0..|C'|.  Deterministic lexicographic order; (p, r) candidates are
// deduplicated by their removed-client set.
inline void enumerate_sparse_instances(
    const ClusteringInstance& inst, const SparsityParams& params,
    int max_balls, int max_preopen,
    const std::function<void(const GuessBranch&)>& sink) {
    if (max_balls < 0 || max_preopen < 0) throw BadParams("negative caps");

    std::vector<std::vector<int>> ball_sets;
    {
        std::set<std::vector<int>> seen;
        auto radii = detail::all_nonzero_distances(inst);
        for (int p = 0; p < inst.num_points(); ++p)
            for (const Rat& r : radii) {
                std::vector<int> ball;
                for (int j = 0; j < inst.num_clients; ++j)
                    if (inst.dist[p][inst.client_point(j)] <= params.delta * r)
                        ball.push_back(j);
                if (!ball.empty() && seen.insert(ball).second)
                    ball_sets.push_back(std::move(ball));
            }
    }

    std::vector<std::vector<int>> preopen_sets{{}};
    {
        std::vector<int> cur;
        std::function<void(int, int)> rec = [&](int start, int left) {
            if (left == 0) return;
            for (int i = start; i < inst.num_facilities; ++i) {
                cur.push_back(i);
                preopen_sets.push_back(cur);
                rec(i + 1, left - 1);
                cur.pop_back();
            }
        };
        rec(0, max_preopen);
    }

    std::vector<int> combo;
    std::function<void(int, int)> rec_balls = [&](int start, int left) {
        std::vector<int> removed;
        for (int b : combo)
            removed.insert(removed.end(), ball_sets[b].begin(), ball_sets[b].end());
        std::sort(removed.begin(), removed.end());
        removed.erase(std::unique(removed.begin(), removed.end()), removed.end());
        int c_left = inst.num_clients - (int)removed.size();
        for (const auto& s0 : preopen_sets) {
            GuessBranch base = make_branch(inst, removed, s0, 0);
            for (int mp = 0; mp <= c_left; ++mp) {
                GuessBranch b = base;
                b.m_prime = mp;
                b.inst.m = mp;
                sink(b);
            }
        }
        if (left == 0) return;
        for (int b = start; b < (int)ball_sets.size(); ++b) {
            combo.push_back(b);
            rec_balls(b + 1, left - 1);
            combo.pop_back();
        }
    };
    rec_balls(0, max_balls);
}

// Algorithm "Construct R_hat": assign radii in decreasing distance order,
// accepting a radius only when it keeps, for t = t' and every p in F u C',
//   |{j in Ball_{C'}(p, delta*t/4) : R_hat_j >= t}| <= rho U / ((1-delta/4)^q t^q).
// Finally R_j = R_hat_j (1 + 3 delta / 4).
inline RadiusBounds construct_R(const GuessBranch& br, const SparsityParams& params) {
    const ClusteringInstance& bi = br.inst;
    const int nc = bi.num_clients;
    const int q = bi.q;
    RadiusBounds rb;
    rb.R_hat.assign(nc, Rat(0));
    rb.R.assign(nc, Rat(0));

    auto dists = detail::fc_nonzero_distances(bi);  // ascending
    Rat one_minus = rat_pow_q(1 - params.delta / 4, q);

    std::vector<char> assigned(nc, 0);
    for (auto it = dists.rbegin(); it != dists.rend(); ++it) {
        const Rat& t = *it;
        Rat radius = params.delta * t / 4;
        Rat cap = params.rho * params.U;  // compare cnt * one_minus * t^q <= cap
        Rat tq = rat_pow_q(t, q);
        // Current per-point counts of already-assigned clients in the ball
        // (every assigned R_hat is >= t, by decreasing order).
        std::vector<long> cnt(bi.num_points(), 0);
        for (int p = 0; p < bi.num_points(); ++p)
            for (int j = 0; j < nc; ++j)
                if (assigned[j] && bi.dist[p][bi.client_point(j)] <= radius) ++cnt[p];
        for (int j = 0; j < nc; ++j) {
            if (assigned[j]) continue;
            bool ok = true;
            for (int p = 0; p < bi.num_points() && ok; ++p) {
                if (bi.dist[p][bi.client_point(j)] > radius) continue;
                if (Rat(cnt[p] + 1) * one_minus * tq > cap) ok = false;
            }
            if (!ok) continue;
            assigned[j] = 1;
            rb.R_hat[j] = t;
            for (int p = 0; p < bi.num_points(); ++p)
                if (bi.dist[p][bi.client_point(j)] <= radius) ++cnt[p];
        }
    }
    Rat inflate = 1 + 3 * params.delta / 4;
    for (int j = 0; j < nc; ++j) rb.R[j] = rb.R_hat[j] * inflate;
    return rb;
}

// Exhaustive check of the restated sparsity property for the inflated R:
// for all t in the candidate set and p in F u C',
//   |{j in Ball(p, delta t/(4+3delta)) : R_j >= t}| <= rho (1+3d/4)^q/(1-d/4)^q U/t^q.
inline void check_R_property(const GuessBranch& br, const RadiusBounds& rb,
                             const SparsityParams& params, InvariantLog& log) {
    const ClusteringInstance& bi = br.inst;
    std::set<Rat> ts;
    for (const Rat& d : detail::fc_nonzero_distances(bi)) ts.insert(d);
    for (const Rat& r : rb.R)
        if (r > 0) ts.insert(r);
    Rat factor = params.rho * rat_pow_q(1 + 3 * params.delta / 4, bi.q) /
                 rat_pow_q(1 - params.delta / 4, bi.q) * params.U;
    for (const Rat& t : ts) {
        Rat radius = params.delta * t / (4 + 3 * params.delta);
        for (int p = 0; p < bi.num_points(); ++p) {
            long cnt = 0;
            for (int j = 0; j < bi.num_clients; ++j)
                if (rb.R[j] >= t && bi.dist[p][bi.client_point(j)] <= radius) ++cnt;
            log.check(Rat(cnt) * rat_pow_q(t, bi.q) <= factor, "prep.R_property",
                      "t=" + rat_to_string(t) + " p=" + std::to_string(p));
        }
    }
}

// KnapMed radius rule: R_j is the largest R with |Ball_C(j, delta R)| * R <= rho U;
// the maximum is attained on the candidate grid {rho U / s : s = 1..|C|}.
inline RadiusBounds knapsack_R(const ClusteringInstance& inst,
                               const SparsityParams& params) {
    if (inst.q != 1) throw BadParams("knapsack radius rule requires q = 1");
    RadiusBounds rb;
    rb.R.assign(inst.num_clients, Rat(0));
    for (int j = 0; j < inst.num_clients; ++j) {
        Rat best = 0;
        for (int s = 1; s <= inst.num_clients; ++s) {
            Rat cand = params.rho * params.U / s;
            long cnt = 0;
            for (int j2 = 0; j2 < inst.num_clients; ++j2)
                if (inst.dist[inst.client_point(j)][inst.client_point(j2)] <=
                    params.delta * cand)
                    ++cnt;
            if (cnt <= s && cand > best) best = cand;
        }
        rb.R[j] = best;
    }
    rb.R_hat = rb.R;
    return rb;
}

// Geometric guess grid {L (1+eps)^t} covering [L, H]; OPT = 0 is probed
// separately by the driver.
inline std::vector<Rat> u_grid(const ClusteringInstance& inst, const Rat& epsilon) {
    if (!(epsilon > 0)) throw BadParams("epsilon must be positive");
    Rat L = 0, H = 0;
    for (int j = 0; j < inst.num_clients; ++j) {
        Rat worst = 0;
        for (int i = 0; i < inst.num_facilities; ++i) {
            Rat dq = inst.dq_fc(i, j);
            if (dq > worst) worst = dq;
            if (dq != 0 && (L == 0 || dq < L)) L = dq;
        }
        H += worst;
    }
    std::vector<Rat> grid;
    if (L == 0) return grid;
    Rat g = L;
    for (;;) {
        grid.push_back(g);
        if (g >= H) break;
        g *= (1 + epsilon);
    }
    return grid;
}

}  // namespace rkm
