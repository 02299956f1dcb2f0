#pragma once

// Shared test helpers: an independent vertex-enumeration LP oracle and small
// instance builders.  The oracle never calls the simplex path it checks.

#include <optional>
#include <vector>

#include "rkm/instance.hpp"
#include "rkm/lp.hpp"

namespace rkm_test {

using rkm::LinearProgram;
using rkm::Rat;
using rkm::Rel;

// Solves the square system rows * x = rhs by exact Gaussian elimination.
inline std::optional<std::vector<Rat>> solve_square(std::vector<std::vector<Rat>> a,
                                                    std::vector<Rat> b) {
    const int n = (int)b.size();
    for (int col = 0; col < n; ++col) {
        int p = -1;
        for (int r = col; r < n; ++r)
            if (a[r][col] != 0) { p = r; break; }
        if (p < 0) return std::nullopt;  // singular
        std::swap(a[col], a[p]);
        std::swap(b[col], b[p]);
        for (int r = 0; r < n; ++r) {
            if (r == col || a[r][col] == 0) continue;
            Rat f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<Rat> x(n);
    for (int i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
    return x;
}

inline bool feasible_point(const LinearProgram& lp, const std::vector<Rat>& x) {
    for (int v = 0; v < lp.num_vars(); ++v) {
        if (x[v] < lp.lo[v]) return false;
        if (lp.hi_finite[v] && x[v] > lp.hi[v]) return false;
    }
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

// Brute-force optimum over all basic feasible points: every full-rank choice
// of n active constraints (rows as equalities plus variable bounds).
inline std::optional<Rat> enumerate_vertex_optimum(const LinearProgram& lp) {
    const int n = lp.num_vars();
    struct Cand {
        std::vector<Rat> row;
        Rat rhs;
    };
    std::vector<Cand> cands;
    for (const auto& row : lp.rows) {
        Cand c;
        c.row.assign(n, Rat(0));
        for (const auto& [v, a] : row.terms) c.row[v] += a;
        c.rhs = row.rhs;
        cands.push_back(std::move(c));
    }
    for (int v = 0; v < n; ++v) {
        Cand c;
        c.row.assign(n, Rat(0));
        c.row[v] = 1;
        c.rhs = lp.lo[v];
        cands.push_back(c);
        if (lp.hi_finite[v] && lp.hi[v] != lp.lo[v]) {
            c.rhs = lp.hi[v];
            cands.push_back(c);
        }
    }
    std::optional<Rat> best;
    std::vector<int> pick;
    auto consider = [&]() {
        std::vector<std::vector<Rat>> a;
        std::vector<Rat> b;
        for (int idx : pick) {
            a.push_back(cands[idx].row);
            b.push_back(cands[idx].rhs);
        }
        auto x = solve_square(std::move(a), std::move(b));
        if (!x || !feasible_point(lp, *x)) return;
        Rat obj = lp.eval_objective(*x);
        if (!best || obj < *best) best = obj;
    };
    std::function<void(int)> rec = [&](int start) {
        if ((int)pick.size() == n) {
            consider();
            return;
        }
        for (int i = start; i < (int)cands.size(); ++i) {
            pick.push_back(i);
            rec(i + 1);
            pick.pop_back();
        }
    };
    rec(0);
    return best;
}

}  // namespace rkm_test
