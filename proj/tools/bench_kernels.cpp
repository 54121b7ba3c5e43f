// Times the serial reference kernels against the OpenMP paths.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "peg/kernels.hpp"

using clk = std::chrono::high_resolution_clock;
using peg::dense_matrix;
using peg::sparse_matrix;

namespace {

double ms_since(clk::time_point t0) {
    return std::chrono::duration<double, std::milli>(clk::now() - t0).count();
}

dense_matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    dense_matrix m(r, c);
    for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
    return m;
}

template <typename F>
double best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = clk::now();
        f();
        best = std::min(best, ms_since(t0));
    }
    return best;
}

} // namespace

int main(int argc, char** argv) {
    std::size_t n = 512;
    int reps = 3;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string a = argv[i];
        if (a == "--n") n = std::stoul(argv[i + 1]);
        if (a == "--reps") reps = std::stoi(argv[i + 1]);
    }

    std::mt19937_64 rng(42);
    dense_matrix a = random_matrix(n, n, rng);
    dense_matrix b = random_matrix(n, n, rng);

    // sparse operand: ~16 neighbours per row
    sparse_matrix s;
    s.n = n;
    s.row_ptr.assign(n + 1, 0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::vector<std::size_t>> cols(n);
    for (std::size_t u = 0; u < n; ++u)
        for (int k = 0; k < 16; ++k) cols[u].push_back(pick(rng));
    for (std::size_t u = 0; u < n; ++u) s.row_ptr[u + 1] = s.row_ptr[u] + cols[u].size();
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v : cols[u]) {
            s.col_idx.push_back(v);
            s.values.push_back(1.0);
        }
    std::vector<std::size_t> edge_id(s.nnz());
    for (std::size_t k = 0; k < edge_id.size(); ++k) edge_id[k] = k;
    std::vector<double> scale(s.nnz(), 0.5);

    std::printf("%-14s %10s %10s %8s\n", "kernel", "serial ms", "omp ms", "speedup");

    const double mm_s = best_of(reps, [&] { peg::kernels::matmul_serial(a, b); });
    peg::kernels::set_parallel(true);
    const double mm_p = best_of(reps, [&] { peg::kernels::matmul(a, b); });
    std::printf("%-14s %10.2f %10.2f %8.2fx\n", "matmul", mm_s, mm_p, mm_s / mm_p);

    const double sp_s = best_of(reps, [&] { peg::kernels::spmm_serial(s, a); });
    const double sp_p = best_of(reps, [&] { peg::kernels::spmm(s, a); });
    std::printf("%-14s %10.2f %10.2f %8.2fx\n", "spmm", sp_s, sp_p, sp_s / sp_p);

    const double ss_s =
        best_of(reps, [&] { peg::kernels::spmm_scaled_serial(s, edge_id, scale, a); });
    const double ss_p = best_of(reps, [&] { peg::kernels::spmm_scaled(s, edge_id, scale, a); });
    std::printf("%-14s %10.2f %10.2f %8.2fx\n", "spmm_scaled", ss_s, ss_p, ss_s / ss_p);

    // bitwise agreement check
    dense_matrix c1 = peg::kernels::matmul_serial(a, b);
    dense_matrix c2 = peg::kernels::matmul(a, b);
    bool same = true;
    for (std::size_t k = 0; k < c1.size(); ++k)
        if (c1.data()[k] != c2.data()[k]) same = false;
    std::printf("matmul serial/omp bitwise identical: %s\n", same ? "yes" : "NO");
    return same ? 0 : 1;
}
