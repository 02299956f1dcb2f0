#pragma once

#include <algorithm>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rkm/common.hpp"

namespace rkm {

// Exact rational LP:  min c.x  s.t.  rows (<=, =, >=),  lo <= x <= hi.
// Every model built by this library is box-bounded, but an infinite upper
// bound is supported (hi_finite[v] = false).

enum class Rel { LE, EQ, GE };

struct LinearProgram {
    struct Row {
        std::vector<std::pair<int, Rat>> terms;
        Rel rel = Rel::LE;
        Rat rhs = 0;
    };

    std::vector<Rat> lo, hi;
    std::vector<bool> hi_finite;
    std::vector<Rat> obj;
    Rat obj_const = 0;
    std::vector<std::string> names;
    std::vector<Row> rows;

    int num_vars() const { return (int)lo.size(); }

    int add_var(std::string name, Rat lb, Rat ub, Rat cost) {
        lo.push_back(std::move(lb));
        hi.push_back(std::move(ub));
        hi_finite.push_back(true);
        obj.push_back(std::move(cost));
        names.push_back(std::move(name));
        return num_vars() - 1;
    }

    int add_var_unbounded_above(std::string name, Rat lb, Rat cost) {
        int v = add_var(std::move(name), std::move(lb), 0, std::move(cost));
        hi_finite[v] = false;
        return v;
    }

    void fix_var(int v, const Rat& value) {
        lo[v] = value;
        hi[v] = value;
        hi_finite[v] = true;
    }

    void add_row(std::vector<std::pair<int, Rat>> terms, Rel rel, Rat rhs) {
        rows.push_back(Row{std::move(terms), rel, std::move(rhs)});
    }

    Rat eval_objective(const std::vector<Rat>& x) const {
        Rat v = obj_const;
        for (int j = 0; j < num_vars(); ++j)
            if (obj[j] != 0) v += obj[j] * x[j];
        return v;
    }
};

struct TightConstraint {
    enum Kind { RowTight, VarLower, VarUpper };
    Kind kind;
    int index;  // row index, or variable index for bound constraints
};

// An optimal basic feasible solution; the tight constraints in
// basis_certificate define the vertex (full rank, checkable exactly).
struct VertexSolution {
    std::vector<Rat> values;
    Rat objective = 0;
    std::vector<TightConstraint> basis_certificate;
};

namespace detail {

// Two-phase primal simplex on the bounded-variable form.  GE rows are negated
// to LE; each row gets a slack (LE: [0, inf), EQ: [0, 0]); rows whose slack
// basis is infeasible get a phase-1 artificial.  Bland's rule (lowest eligible
// index) for both entering and leaving, so no cycling.  Dense tableau, exact
// pivots.
class Simplex {
  public:
    explicit Simplex(const LinearProgram& lp) : lp_(lp) {}

    VertexSolution solve() {
        build();
        phase1();
        phase2();
        return extract();
    }

  private:
    enum class St { Basic, AtLo, AtUp };

    const LinearProgram& lp_;
    int n_ = 0;       // primal vars
    int m_ = 0;       // rows
    int slack0_ = 0;  // first slack column
    int art0_ = 0;    // first artificial column
    int cols_ = 0;
    std::vector<std::vector<Rat>> tab_;  // m_ x cols_
    std::vector<Rat> lo2_, hi2_;
    std::vector<bool> hifin_;
    std::vector<St> state_;
    std::vector<Rat> val_;
    std::vector<int> basic_;   // row -> col
    std::vector<bool> active_; // row in use
    std::vector<bool> dead_;   // banned columns (spent artificials)
    std::vector<Rat> obj1_, obj2_;
    std::vector<int> art_row_; // artificial col -> its row

    void build() {
        n_ = lp_.num_vars();
        m_ = (int)lp_.rows.size();
        slack0_ = n_;
        art0_ = n_ + m_;
        cols_ = n_ + m_;  // artificials appended below

        lo2_ = lp_.lo;
        hi2_ = lp_.hi;
        hifin_.assign(lp_.hi_finite.begin(), lp_.hi_finite.end());
        for (int v = 0; v < n_; ++v)
            if (hifin_[v] && hi2_[v] < lo2_[v]) throw LpInfeasible("empty variable box");

        tab_.assign(m_, std::vector<Rat>(cols_, Rat(0)));
        val_.assign(cols_, Rat(0));
        state_.assign(cols_, St::AtLo);
        basic_.assign(m_, -1);
        active_.assign(m_, true);
        dead_.assign(cols_, false);

        for (int v = 0; v < n_; ++v) val_[v] = lo2_[v];

        std::vector<Rat> resid(m_);
        for (int r = 0; r < m_; ++r) {
            const auto& row = lp_.rows[r];
            Rat sign = (row.rel == Rel::GE) ? Rat(-1) : Rat(1);
            Rat rhs = sign * row.rhs;
            for (const auto& [v, a] : row.terms) tab_[r][v] += sign * a;
            // slack
            int s = slack0_ + r;
            tab_[r][s] = 1;
            lo2_.push_back(0);
            if (row.rel == Rel::EQ) {
                hi2_.push_back(0);
                hifin_.push_back(true);
            } else {
                hi2_.push_back(0);
                hifin_.push_back(false);
            }
            Rat acc = 0;
            for (int v = 0; v < n_; ++v)
                if (tab_[r][v] != 0) acc += tab_[r][v] * val_[v];
            resid[r] = rhs - acc;  // would-be slack value
        }

        // Choose initial basis per row: the slack when feasible, else an
        // artificial holding the residual.
        std::vector<int> art_of_row(m_, -1);
        for (int r = 0; r < m_; ++r) {
            bool slack_ok =
                (resid[r] == 0) || (!hifin_[slack0_ + r] && resid[r] > 0);
            if (slack_ok) {
                basic_[r] = slack0_ + r;
                state_[slack0_ + r] = St::Basic;
                val_[slack0_ + r] = resid[r];
            } else {
                if (resid[r] < 0) {
                    for (auto& c : tab_[r]) if (c != 0) c = -c;
                    resid[r] = -resid[r];
                }
                int a = cols_++;
                art_of_row[r] = a;
                art_row_.push_back(r);
                for (int r2 = 0; r2 < m_; ++r2) tab_[r2].push_back(Rat(0));
                tab_[r][a] = 1;
                lo2_.push_back(0);
                hi2_.push_back(0);
                hifin_.push_back(false);
                val_.push_back(resid[r]);
                state_.push_back(St::Basic);
                dead_.push_back(false);
                basic_[r] = a;
            }
        }

        obj1_.assign(cols_, Rat(0));
        obj2_.assign(cols_, Rat(0));
        for (int v = 0; v < n_; ++v) obj2_[v] = lp_.obj[v];
        for (int r = 0; r < m_; ++r)
            if (art_of_row[r] >= 0)
                for (int c = 0; c < cols_; ++c)
                    if (c != art_of_row[r] && tab_[r][c] != 0) obj1_[c] -= tab_[r][c];
    }

    bool fixed(int c) const { return hifin_[c] && lo2_[c] == hi2_[c]; }

    int pick_entering(const std::vector<Rat>& objrow, bool allow_art) const {
        for (int c = 0; c < cols_; ++c) {
            if (state_[c] == St::Basic || dead_[c] || fixed(c)) continue;
            if (!allow_art && c >= art0_) continue;
            int s = sgn(objrow[c]);
            if ((state_[c] == St::AtLo && s < 0) || (state_[c] == St::AtUp && s > 0))
                return c;
        }
        return -1;
    }

    void pivot(int r, int e) {
        Rat piv = tab_[r][e];
        if (piv != 1)
            for (int c = 0; c < cols_; ++c)
                if (tab_[r][c] != 0) tab_[r][c] /= piv;
        auto eliminate = [&](std::vector<Rat>& row) {
            Rat f = row[e];
            if (f == 0) return;
            for (int c = 0; c < cols_; ++c)
                if (tab_[r][c] != 0) row[c] -= f * tab_[r][c];
        };
        for (int r2 = 0; r2 < m_; ++r2)
            if (r2 != r && active_[r2]) eliminate(tab_[r2]);
        eliminate(obj1_);
        eliminate(obj2_);
    }

    // One simplex step for the given objective row; returns false at optimum.
    bool step(const std::vector<Rat>& objrow, bool allow_art, bool phase_one) {
        int e = pick_entering(objrow, allow_art);
        if (e < 0) return false;
        int dir = (state_[e] == St::AtLo) ? 1 : -1;

        bool has_limit = false;
        Rat best_t = 0;
        int leave_row = -1;
        bool leave_up = false;
        for (int r = 0; r < m_; ++r) {
            if (!active_[r]) continue;
            const Rat& g = tab_[r][e];
            if (g == 0) continue;
            int b = basic_[r];
            Rat c = Rat(dir) * g;
            Rat t;
            bool hits_up;
            if (c > 0) {
                t = (val_[b] - lo2_[b]) / c;
                hits_up = false;
            } else {
                if (!hifin_[b]) continue;
                t = (hi2_[b] - val_[b]) / (-c);
                hits_up = true;
            }
            if (!has_limit || t < best_t ||
                (t == best_t && leave_row >= 0 && b < basic_[leave_row])) {
                has_limit = true;
                best_t = t;
                leave_row = r;
                leave_up = hits_up;
            }
        }
        bool flip = false;
        if (hifin_[e]) {
            Rat span = hi2_[e] - lo2_[e];
            if (!has_limit || span <= best_t) {
                has_limit = true;
                best_t = span;
                flip = true;
            }
        }
        if (!has_limit) {
            if (phase_one) throw Error("Internal", "phase-1 unbounded");
            throw LpUnbounded("unbounded improving ray");
        }

        if (best_t != 0) {
            val_[e] += Rat(dir) * best_t;
            for (int r = 0; r < m_; ++r) {
                if (!active_[r]) continue;
                if (tab_[r][e] != 0) val_[basic_[r]] -= Rat(dir) * best_t * tab_[r][e];
            }
        }
        if (flip) {
            state_[e] = (dir == 1) ? St::AtUp : St::AtLo;
            return true;
        }
        int lv = basic_[leave_row];
        pivot(leave_row, e);
        basic_[leave_row] = e;
        state_[e] = St::Basic;
        state_[lv] = leave_up ? St::AtUp : St::AtLo;
        if (lv >= art0_) dead_[lv] = true;  // artificials never re-enter
        return true;
    }

    void phase1() {
        if (art0_ == cols_) return;  // no artificials needed
        while (step(obj1_, true, true)) {}
        Rat infeas = 0;
        for (int c = art0_; c < cols_; ++c)
            if (state_[c] == St::Basic) infeas += val_[c];
        if (infeas != 0) throw LpInfeasible("phase-1 optimum positive");
        // Drive remaining zero-valued artificials out of the basis.
        for (int r = 0; r < m_; ++r) {
            if (!active_[r] || basic_[r] < art0_) continue;
            int e = -1;
            for (int c = 0; c < art0_ && e < 0; ++c)
                if (!dead_[c] && state_[c] != St::Basic && tab_[r][c] != 0) e = c;
            if (e < 0) {
                active_[r] = false;  // redundant row
                dead_[basic_[r]] = true;
                continue;
            }
            int lv = basic_[r];
            pivot(r, e);
            basic_[r] = e;
            state_[e] = St::Basic;
            state_[lv] = St::AtLo;
            dead_[lv] = true;
        }
        for (int c = art0_; c < cols_; ++c) dead_[c] = true;
    }

    void phase2() {
        while (step(obj2_, false, false)) {}
    }

    VertexSolution extract() {
        VertexSolution vs;
        vs.values.assign(val_.begin(), val_.begin() + n_);
        vs.objective = lp_.eval_objective(vs.values);
        // Exact feasibility re-check against the original model.
        for (int v = 0; v < n_; ++v) {
            if (vs.values[v] < lp_.lo[v] ||
                (lp_.hi_finite[v] && vs.values[v] > lp_.hi[v]))
                throw Error("Internal", "simplex produced out-of-bound value");
        }
        for (int r = 0; r < m_; ++r) {
            Rat acc = 0;
            for (const auto& [v, a] : lp_.rows[r].terms) acc += a * vs.values[v];
            const Rat& rhs = lp_.rows[r].rhs;
            bool ok = lp_.rows[r].rel == Rel::LE   ? acc <= rhs
                      : lp_.rows[r].rel == Rel::GE ? acc >= rhs
                                                   : acc == rhs;
            if (!ok) throw Error("Internal", "simplex produced infeasible row");
            if (acc == rhs)
                vs.basis_certificate.push_back({TightConstraint::RowTight, r});
        }
        for (int v = 0; v < n_; ++v) {
            if (vs.values[v] == lp_.lo[v])
                vs.basis_certificate.push_back({TightConstraint::VarLower, v});
            if (lp_.hi_finite[v] && vs.values[v] == lp_.hi[v] && lp_.hi[v] != lp_.lo[v])
                vs.basis_certificate.push_back({TightConstraint::VarUpper, v});
        }
        return vs;
    }
};

}  // namespace detail

// Optimal basic feasible solution via exact two-phase simplex, Bland's rule.
inline VertexSolution solve_vertex(const LinearProgram& lp) {
    detail::Simplex s(lp);
    return s.solve();
}

inline std::pair<int, std::vector<int>> count_fractional(const std::vector<Rat>& values) {
    std::vector<int> idx;
    for (int i = 0; i < (int)values.size(); ++i)
        if (values[i] > 0 && values[i] < 1) idx.push_back(i);
    return {(int)idx.size(), idx};
}

// Exact rank of the tight-constraint rows; a vertex certificate must have
// rank equal to the number of variables.
inline bool verify_vertex_certificate(const LinearProgram& lp, const VertexSolution& vs) {
    const int n = lp.num_vars();
    std::vector<std::vector<Rat>> mat;
    for (const auto& tc : vs.basis_certificate) {
        std::vector<Rat> row(n, Rat(0));
        switch (tc.kind) {
            case TightConstraint::RowTight: {
                const auto& lr = lp.rows[tc.index];
                Rat acc = 0;
                for (const auto& [v, a] : lr.terms) {
                    row[v] += a;
                    acc += a * vs.values[v];
                }
                if (acc != lr.rhs) return false;  // not actually active
                break;
            }
            case TightConstraint::VarLower:
                if (vs.values[tc.index] != lp.lo[tc.index]) return false;
                row[tc.index] = 1;
                break;
            case TightConstraint::VarUpper:
                if (!lp.hi_finite[tc.index] || vs.values[tc.index] != lp.hi[tc.index])
                    return false;
                row[tc.index] = 1;
                break;
        }
        mat.push_back(std::move(row));
    }
    int rank = 0;
    for (int col = 0; col < n && rank < (int)mat.size(); ++col) {
        int p = -1;
        for (int r = rank; r < (int)mat.size(); ++r)
            if (mat[r][col] != 0) { p = r; break; }
        if (p < 0) continue;
        std::swap(mat[rank], mat[p]);
        for (int r = 0; r < (int)mat.size(); ++r) {
            if (r == rank || mat[r][col] == 0) continue;
            Rat f = mat[r][col] / mat[rank][col];
            for (int c = col; c < n; ++c)
                if (mat[rank][c] != 0) mat[r][c] -= f * mat[rank][c];
        }
        ++rank;
    }
    return rank == n;
}

// Textual dump in CPLEX LP interchange format, for external cross-checking.
inline void write_lp_format(const LinearProgram& lp, std::ostream& os) {
    auto coef = [](const Rat& c) { return c.get_str(); };
    os << "\\ exact rational model; coefficients printed as p/q\n";
    os << "Minimize\n obj:";
    bool first = true;
    for (int v = 0; v < lp.num_vars(); ++v) {
        if (lp.obj[v] == 0) continue;
        os << (first ? " " : " + ") << coef(lp.obj[v]) << " " << lp.names[v];
        first = false;
    }
    if (first) os << " 0 " << (lp.num_vars() ? lp.names[0] : "x");
    os << "\nSubject To\n";
    for (int r = 0; r < (int)lp.rows.size(); ++r) {
        os << " r" << r << ":";
        for (const auto& [v, a] : lp.rows[r].terms)
            os << " + " << coef(a) << " " << lp.names[v];
        const char* rel = lp.rows[r].rel == Rel::LE   ? "<="
                          : lp.rows[r].rel == Rel::GE ? ">="
                                                      : "=";
        os << " " << rel << " " << coef(lp.rows[r].rhs) << "\n";
    }
    os << "Bounds\n";
    for (int v = 0; v < lp.num_vars(); ++v) {
        if (lp.hi_finite[v])
            os << " " << coef(lp.lo[v]) << " <= " << lp.names[v] << " <= "
               << coef(lp.hi[v]) << "\n";
        else
            os << " " << lp.names[v] << " >= " << coef(lp.lo[v]) << "\n";
    }
    os << "End\n";
}

}  // namespace rkm
