#include "peg/procrustes.hpp"

#include <cmath>

#include "peg/errors.hpp"
#include "peg/kernels.hpp"
#include "peg/svd.hpp"

namespace peg {

procrustes_result pe_match(const dense_matrix& z1, const dense_matrix& z2) {
    if (!z1.same_shape(z2)) throw shape_mismatch_error("pe_match: shapes differ");
    const std::size_t p = z1.cols();
    dense_matrix cross = kernels::matmul_at_b(z2, z1);  // z2^T z1, p-by-p
    singular_value_decomposition svd = jacobi_svd(cross);
    dense_matrix q = kernels::matmul_a_bt(svd.u, svd.v);
    dense_matrix aligned = kernels::matmul(z2, q);
    double s = 0.0;
    for (std::size_t i = 0; i < z1.rows(); ++i)
        for (std::size_t j = 0; j < p; ++j) {
            const double d = z1(i, j) - aligned(i, j);
            s += d * d;
        }
    return procrustes_result{std::move(q), std::sqrt(s)};
}

namespace {

sign_match_result per_column_signs(const dense_matrix& z1, const dense_matrix& z2) {
    const std::size_t n = z1.rows(), p = z1.cols();
    sign_match_result r;
    r.signs.resize(p, 1.0);
    double total = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double dplus = 0.0, dminus = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = z1(i, j) - z2(i, j);
            const double b = z1(i, j) + z2(i, j);
            dplus += a * a;
            dminus += b * b;
        }
        if (dminus < dplus) {
            r.signs[j] = -1.0;
            total += dminus;
        } else {
            total += dplus;
        }
    }
    r.distance = std::sqrt(total);
    return r;
}

} // namespace

sign_match_result sign_match(const dense_matrix& z1, const dense_matrix& z2) {
    if (!z1.same_shape(z2)) throw shape_mismatch_error("sign_match: shapes differ");
    if (z1.cols() > 16) throw too_large_error("sign_match: p > 16");
    return per_column_signs(z1, z2);
}

double per_column_sign_distance(const dense_matrix& z1, const dense_matrix& z2) {
    if (!z1.same_shape(z2))
        throw shape_mismatch_error("per_column_sign_distance: shapes differ");
    return per_column_signs(z1, z2).distance;
}

double sign_match_distance_enumerated(const dense_matrix& z1, const dense_matrix& z2) {
    if (!z1.same_shape(z2)) throw shape_mismatch_error("sign_match enumeration: shapes differ");
    const std::size_t n = z1.rows(), p = z1.cols();
    if (p > 16) throw too_large_error("sign_match enumeration: p > 16");
    double best = -1.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << p); ++mask) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double sg = (mask >> j) & 1 ? -1.0 : 1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = z1(i, j) - sg * z2(i, j);
                s += d * d;
            }
        }
        if (best < 0.0 || s < best) best = s;
    }
    return std::sqrt(best);
}

} // namespace peg
