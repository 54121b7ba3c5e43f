#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "peg/errors.hpp"
#include "peg/kernels.hpp"

using namespace peg;

namespace {

dense_matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    dense_matrix m(r, c);
    for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
    return m;
}

sparse_matrix random_sparse(std::size_t n, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    sparse_matrix s;
    s.n = n;
    s.row_ptr.assign(n + 1, 0);
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (u(rng) < density) rows[i].push_back({j, g(rng)});
    for (std::size_t i = 0; i < n; ++i) s.row_ptr[i + 1] = s.row_ptr[i] + rows[i].size();
    for (std::size_t i = 0; i < n; ++i)
        for (auto& [j, v] : rows[i]) {
            s.col_idx.push_back(j);
            s.values.push_back(v);
        }
    return s;
}

bool bitwise_equal(const dense_matrix& a, const dense_matrix& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a.data()[k] != b.data()[k]) return false;
    return true;
}

} // namespace

TEST_CASE("matmul matches a naive triple loop") {
    std::mt19937_64 rng(1);
    dense_matrix a = random_matrix(7, 5, rng), b = random_matrix(5, 9, rng);
    dense_matrix c = kernels::matmul(a, b);
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 9; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 5; ++k) s += a(i, k) * b(k, j);
            CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-14));
        }
}

TEST_CASE("transposed-variant kernels agree with explicit transposes") {
    std::mt19937_64 rng(2);
    dense_matrix a = random_matrix(6, 4, rng), b = random_matrix(6, 3, rng);
    dense_matrix atb = kernels::matmul_at_b(a, b);
    dense_matrix atb_ref = kernels::matmul(a.transposed(), b);
    for (std::size_t k = 0; k < atb.size(); ++k)
        CHECK(atb.data()[k] == doctest::Approx(atb_ref.data()[k]).epsilon(1e-14));

    dense_matrix c = random_matrix(5, 4, rng);
    dense_matrix abt = kernels::matmul_a_bt(a, c);
    dense_matrix abt_ref = kernels::matmul(a, c.transposed());
    for (std::size_t k = 0; k < abt.size(); ++k)
        CHECK(abt.data()[k] == doctest::Approx(abt_ref.data()[k]).epsilon(1e-14));
}

TEST_CASE("parallel kernels are bitwise identical to the serial reference") {
    std::mt19937_64 rng(3);
    dense_matrix a = random_matrix(65, 33, rng), b = random_matrix(33, 41, rng);
    kernels::set_parallel(true);
    CHECK(bitwise_equal(kernels::matmul(a, b), kernels::matmul_serial(a, b)));
    CHECK(bitwise_equal(kernels::matmul_at_b(a, a), kernels::matmul_at_b_serial(a, a)));
    CHECK(bitwise_equal(kernels::matmul_a_bt(a, a), kernels::matmul_a_bt_serial(a, a)));

    sparse_matrix s = random_sparse(64, 0.1, rng);
    dense_matrix x = random_matrix(64, 17, rng);
    CHECK(bitwise_equal(kernels::spmm(s, x), kernels::spmm_serial(s, x)));

    std::vector<std::size_t> edge_id(s.nnz());
    for (std::size_t k = 0; k < edge_id.size(); ++k) edge_id[k] = k % 13;
    std::vector<double> scale(13);
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& v : scale) v = g(rng);
    CHECK(bitwise_equal(kernels::spmm_scaled(s, edge_id, scale, x),
                        kernels::spmm_scaled_serial(s, edge_id, scale, x)));
}

TEST_CASE("disabling the parallel path still yields identical results") {
    std::mt19937_64 rng(4);
    dense_matrix a = random_matrix(20, 20, rng), b = random_matrix(20, 20, rng);
    kernels::set_parallel(false);
    dense_matrix off = kernels::matmul(a, b);
    kernels::set_parallel(true);
    dense_matrix on = kernels::matmul(a, b);
    CHECK(bitwise_equal(off, on));
}

TEST_CASE("shape errors are reported") {
    dense_matrix a(3, 4), b(5, 2);
    CHECK_THROWS_AS((void)kernels::matmul(a, b), shape_mismatch_error);
    sparse_matrix s;
    s.n = 3;
    s.row_ptr = {0, 0, 0, 0};
    CHECK_THROWS_AS((void)kernels::spmm(s, b), shape_mismatch_error);
}
