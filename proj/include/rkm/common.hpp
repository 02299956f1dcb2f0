#pragma once

#include <gmpxx.h>

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rkm {

// All distances, costs and LP coefficients are exact rationals.
using Rat = mpq_class;

inline Rat rat_pow_q(const Rat& v, int q) {
    return q == 2 ? Rat(v * v) : v;
}

// Parses "p/q", plain integers, and decimal strings like "1.25".
inline Rat rat_from_string(const std::string& s) {
    auto dot = s.find('.');
    if (dot == std::string::npos) {
        mpq_class r;
        if (r.set_str(s, 10) != 0)
            throw std::invalid_argument("bad rational: '" + s + "'");
        r.canonicalize();
        return r;
    }
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    std::size_t frac_len = s.size() - dot - 1;
    mpz_class num(digits, 10);
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_len);
    Rat r(num, den);
    r.canonicalize();
    return r;
}

inline std::string rat_to_string(const Rat& v) { return v.get_str(); }

// v^(1/1) stays exact; used where doubles are acceptable (reports, Monte Carlo).
inline double rat_to_double(const Rat& v) { return v.get_d(); }

struct Error : std::runtime_error {
    std::string code;
    Error(std::string c, const std::string& msg)
        : std::runtime_error(c + ": " + msg), code(std::move(c)) {}
};

#define RKM_ERROR_TYPE(Name)                                            \
    struct Name : Error {                                               \
        explicit Name(const std::string& msg) : Error(#Name, msg) {}    \
    }

RKM_ERROR_TYPE(TriangleViolation);
RKM_ERROR_TYPE(DuplicateFacilityLocation);
RKM_ERROR_TYPE(BudgetOutOfRange);
RKM_ERROR_TYPE(EmptyOpenSet);
RKM_ERROR_TYPE(InfeasiblePreopen);
RKM_ERROR_TYPE(LpInfeasible);
RKM_ERROR_TYPE(LpUnbounded);
RKM_ERROR_TYPE(SolutionCostExceedsU);
RKM_ERROR_TYPE(NoProgress);
RKM_ERROR_TYPE(NotAlmostIntegral);
RKM_ERROR_TYPE(NotEnoughClients);
RKM_ERROR_TYPE(TooLarge);
RKM_ERROR_TYPE(Infeasible);
RKM_ERROR_TYPE(BadParams);
RKM_ERROR_TYPE(NoFeasibleSolution);
RKM_ERROR_TYPE(InvariantViolation);

#undef RKM_ERROR_TYPE

// Worker count for embarrassingly parallel fan-out (RKM_WORKERS, default 1).
inline int worker_count() {
    if (const char* env = std::getenv("RKM_WORKERS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

// Runs fn(0..n-1), possibly on worker_count() threads.  Results must be
// written to per-index slots; exceptions are rethrown on the caller thread.
inline void parallel_for_indexed(int n, const std::function<void(int)>& fn) {
    int workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace rkm
