// Throwaway benchmark/smoke test for the simplex (not part of the suite).
#include <chrono>
#include <iostream>
#include <random>

#include "rkm/lp.hpp"

using namespace rkm;

int main() {
    // tiny sanity: min -x-y st x+y<=1, x<=0.6 -> obj -1
    {
        LinearProgram lp;
        int x = lp.add_var("x", 0, 1, -1);
        int y = lp.add_var("y", 0, 1, -1);
        lp.add_row({{x, 1}, {y, 1}}, Rel::LE, 1);
        lp.add_row({{x, 1}}, Rel::LE, Rat(3, 5));
        auto vs = solve_vertex(lp);
        std::cout << "smoke obj = " << vs.objective.get_str()
                  << " x=" << vs.values[x].get_str() << " y=" << vs.values[y].get_str()
                  << " cert_ok=" << verify_vertex_certificate(lp, vs) << "\n";
    }
    // infeasible
    {
        LinearProgram lp;
        int x = lp.add_var("x", 0, 1, 1);
        lp.add_row({{x, 1}}, Rel::GE, 2);
        try {
            solve_vertex(lp);
            std::cout << "BUG: infeasible not detected\n";
        } catch (const LpInfeasible&) {
            std::cout << "infeasible detected ok\n";
        }
    }
    // equality + ge mix
    {
        LinearProgram lp;
        int x = lp.add_var("x", 0, 10, 2);
        int y = lp.add_var("y", 0, 10, 3);
        lp.add_row({{x, 1}, {y, 1}}, Rel::EQ, 4);
        lp.add_row({{x, 1}}, Rel::GE, 1);
        auto vs = solve_vertex(lp);
        std::cout << "eq/ge obj = " << vs.objective.get_str() << " (want 9)\n";
    }

    // benchmark: facility-location-shaped LP, nF=10, nC=15
    auto bench = [](int nF, int nC, unsigned seed) {
        std::mt19937 rng(seed);
        std::uniform_int_distribution<int> dd(1, 40);
        LinearProgram lp;
        std::vector<int> yv(nF);
        for (int i = 0; i < nF; ++i) yv[i] = lp.add_var("y" + std::to_string(i), 0, 1, 0);
        std::vector<std::vector<int>> xv(nF, std::vector<int>(nC));
        std::vector<std::vector<Rat>> c(nF, std::vector<Rat>(nC));
        for (int i = 0; i < nF; ++i)
            for (int j = 0; j < nC; ++j) {
                c[i][j] = dd(rng);
                xv[i][j] = lp.add_var("x" + std::to_string(i) + "_" + std::to_string(j),
                                      0, 1, c[i][j]);
            }
        std::vector<std::pair<int, Rat>> krow;
        for (int i = 0; i < nF; ++i) krow.push_back({yv[i], 1});
        lp.add_row(krow, Rel::LE, 3);
        for (int i = 0; i < nF; ++i)
            for (int j = 0; j < nC; ++j)
                lp.add_row({{xv[i][j], 1}, {yv[i], -1}}, Rel::LE, 0);
        std::vector<std::pair<int, Rat>> cov;
        for (int j = 0; j < nC; ++j) {
            std::vector<std::pair<int, Rat>> row;
            for (int i = 0; i < nF; ++i) row.push_back({xv[i][j], 1});
            lp.add_row(row, Rel::LE, 1);
            for (int i = 0; i < nF; ++i) cov.push_back({xv[i][j], 1});
        }
        lp.add_row(cov, Rel::GE, nC * 2 / 3);
        auto t0 = std::chrono::steady_clock::now();
        auto vs = solve_vertex(lp);
        auto t1 = std::chrono::steady_clock::now();
        double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        std::cout << "bench nF=" << nF << " nC=" << nC << " obj=" << vs.objective.get_str()
                  << "  " << ms << " ms\n";
        return ms;
    };
    double total = 0;
    for (unsigned s = 1; s <= 5; ++s) total += bench(10, 15, s);
    std::cout << "avg " << total / 5 << " ms\n";
    total = 0;
    for (unsigned s = 1; s <= 3; ++s) total += bench(2, 63, s);
    std::cout << "avg (gap-a-like) " << total / 3 << " ms\n";
    return 0;
}
