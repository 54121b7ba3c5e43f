#include "peg/kernels.hpp"

#include <atomic>

#include "peg/errors.hpp"

namespace peg::kernels {

namespace {
std::atomic<bool> g_parallel{true};

void check_matmul(std::size_t ac, std::size_t br, const char* what) {
    if (ac != br) throw shape_mismatch_error(std::string(what) + ": inner dimensions differ");
}
} // namespace

void set_parallel(bool enabled) { g_parallel.store(enabled); }
bool parallel_enabled() { return g_parallel.load(); }

dense_matrix matmul_serial(const dense_matrix& a, const dense_matrix& b) {
    check_matmul(a.cols(), b.rows(), "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    dense_matrix c(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t l = 0; l < k; ++l) {
            const double av = ai[l];
            const double* bl = b.row(l);
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
    return c;
}

dense_matrix matmul(const dense_matrix& a, const dense_matrix& b) {
    if (!g_parallel.load()) return matmul_serial(a, b);
    check_matmul(a.cols(), b.rows(), "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    dense_matrix c(m, n);
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < static_cast<long long>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t l = 0; l < k; ++l) {
            const double av = ai[l];
            const double* bl = b.row(l);
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
    return c;
}

dense_matrix matmul_at_b_serial(const dense_matrix& a, const dense_matrix& b) {
    check_matmul(a.rows(), b.rows(), "matmul_at_b");
    const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
    dense_matrix c(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c.row(i);
        for (std::size_t l = 0; l < k; ++l) {
            const double av = a(l, i);
            const double* bl = b.row(l);
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
    return c;
}

dense_matrix matmul_at_b(const dense_matrix& a, const dense_matrix& b) {
    if (!g_parallel.load()) return matmul_at_b_serial(a, b);
    check_matmul(a.rows(), b.rows(), "matmul_at_b");
    const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
    dense_matrix c(m, n);
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < static_cast<long long>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* ci = c.row(i);
        for (std::size_t l = 0; l < k; ++l) {
            const double av = a(l, i);
            const double* bl = b.row(l);
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
    return c;
}

dense_matrix matmul_a_bt_serial(const dense_matrix& a, const dense_matrix& b) {
    check_matmul(a.cols(), b.cols(), "matmul_a_bt");
    const std::size_t m = a.rows(), n = b.rows(), k = a.cols();
    dense_matrix c(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t j = 0; j < n; ++j) ci[j] = dot(ai, b.row(j), k);
    }
    return c;
}

dense_matrix matmul_a_bt(const dense_matrix& a, const dense_matrix& b) {
    if (!g_parallel.load()) return matmul_a_bt_serial(a, b);
    check_matmul(a.cols(), b.cols(), "matmul_a_bt");
    const std::size_t m = a.rows(), n = b.rows(), k = a.cols();
    dense_matrix c(m, n);
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < static_cast<long long>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t j = 0; j < n; ++j) ci[j] = dot(ai, b.row(j), k);
    }
    return c;
}

dense_matrix spmm_serial(const sparse_matrix& s, const dense_matrix& x) {
    check_matmul(s.n, x.rows(), "spmm");
    const std::size_t f = x.cols();
    dense_matrix y(s.n, f);
    for (std::size_t u = 0; u < s.n; ++u) {
        double* yu = y.row(u);
        for (std::size_t k = s.row_ptr[u]; k < s.row_ptr[u + 1]; ++k) {
            const double w = s.values[k];
            const double* xv = x.row(s.col_idx[k]);
            for (std::size_t j = 0; j < f; ++j) yu[j] += w * xv[j];
        }
    }
    return y;
}

dense_matrix spmm(const sparse_matrix& s, const dense_matrix& x) {
    if (!g_parallel.load()) return spmm_serial(s, x);
    check_matmul(s.n, x.rows(), "spmm");
    const std::size_t f = x.cols();
    dense_matrix y(s.n, f);
#pragma omp parallel for schedule(static)
    for (long long uu = 0; uu < static_cast<long long>(s.n); ++uu) {
        const std::size_t u = static_cast<std::size_t>(uu);
        double* yu = y.row(u);
        for (std::size_t k = s.row_ptr[u]; k < s.row_ptr[u + 1]; ++k) {
            const double w = s.values[k];
            const double* xv = x.row(s.col_idx[k]);
            for (std::size_t j = 0; j < f; ++j) yu[j] += w * xv[j];
        }
    }
    return y;
}

dense_matrix spmm_scaled_serial(const sparse_matrix& s, const std::vector<std::size_t>& edge_id,
                                const std::vector<double>& edge_scale, const dense_matrix& x) {
    check_matmul(s.n, x.rows(), "spmm_scaled");
    if (edge_id.size() != s.nnz()) throw shape_mismatch_error("spmm_scaled: edge_id length != nnz");
    const std::size_t f = x.cols();
    dense_matrix y(s.n, f);
    for (std::size_t u = 0; u < s.n; ++u) {
        double* yu = y.row(u);
        for (std::size_t k = s.row_ptr[u]; k < s.row_ptr[u + 1]; ++k) {
            const double w = s.values[k] * edge_scale[edge_id[k]];
            const double* xv = x.row(s.col_idx[k]);
            for (std::size_t j = 0; j < f; ++j) yu[j] += w * xv[j];
        }
    }
    return y;
}

dense_matrix spmm_scaled(const sparse_matrix& s, const std::vector<std::size_t>& edge_id,
                         const std::vector<double>& edge_scale, const dense_matrix& x) {
    if (!g_parallel.load()) return spmm_scaled_serial(s, edge_id, edge_scale, x);
    check_matmul(s.n, x.rows(), "spmm_scaled");
    if (edge_id.size() != s.nnz()) throw shape_mismatch_error("spmm_scaled: edge_id length != nnz");
    const std::size_t f = x.cols();
    dense_matrix y(s.n, f);
#pragma omp parallel for schedule(static)
    for (long long uu = 0; uu < static_cast<long long>(s.n); ++uu) {
        const std::size_t u = static_cast<std::size_t>(uu);
        double* yu = y.row(u);
        for (std::size_t k = s.row_ptr[u]; k < s.row_ptr[u + 1]; ++k) {
            const double w = s.values[k] * edge_scale[edge_id[k]];
            const double* xv = x.row(s.col_idx[k]);
            for (std::size_t j = 0; j < f; ++j) yu[j] += w * xv[j];
        }
    }
    return y;
}

} // namespace peg::kernels
