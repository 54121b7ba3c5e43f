#include "peg/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "peg/errors.hpp"

namespace peg {

namespace {

// Orthonormal completion of the zero columns of u against its nonzero ones.
void complete_null_columns(dense_matrix& u, const std::vector<bool>& is_null) {
    const std::size_t m = u.rows(), n = u.cols();
    std::size_t basis_cursor = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!is_null[j]) continue;
        // try canonical basis vectors until one survives projection
        for (; basis_cursor < m; ++basis_cursor) {
            std::vector<double> cand(m, 0.0);
            cand[basis_cursor] = 1.0;
            for (std::size_t c = 0; c < n; ++c) {
                if (c == j || (is_null[c] && c > j)) continue;
                double proj = 0.0;
                for (std::size_t r = 0; r < m; ++r) proj += cand[r] * u(r, c);
                for (std::size_t r = 0; r < m; ++r) cand[r] -= proj * u(r, c);
            }
            double norm = 0.0;
            for (double x : cand) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > 1e-8) {
                for (std::size_t r = 0; r < m; ++r) u(r, j) = cand[r] / norm;
                ++basis_cursor;
                break;
            }
        }
    }
}

} // namespace

singular_value_decomposition jacobi_svd(const dense_matrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    if (m < n) throw shape_mismatch_error("jacobi_svd: requires rows >= cols");

    dense_matrix u = a;
    dense_matrix v = dense_matrix::identity(n);

    const double scale = std::max(a.max_abs(), 1e-300);
    const double tol = 1e-14;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t r = 0; r < m; ++r) {
                    app += u(r, p) * u(r, p);
                    aqq += u(r, q) * u(r, q);
                    apq += u(r, p) * u(r, q);
                }
                if (std::abs(apq) <= tol * scale * scale) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t r = 0; r < m; ++r) {
                    const double up = u(r, p), uq = u(r, q);
                    u(r, p) = c * up - s * uq;
                    u(r, q) = s * up + c * uq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double vp = v(r, p), vq = v(r, q);
                    v(r, p) = c * vp - s * vq;
                    v(r, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sigma(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0.0;
        for (std::size_t r = 0; r < m; ++r) norm += u(r, j) * u(r, j);
        sigma[j] = std::sqrt(norm);
    }

    // sort descending, permuting u and v columns
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });
    dense_matrix us(m, n), vs(n, n);
    std::vector<double> ss(n);
    for (std::size_t j = 0; j < n; ++j) {
        ss[j] = sigma[order[j]];
        for (std::size_t r = 0; r < m; ++r) us(r, j) = u(r, order[j]);
        for (std::size_t r = 0; r < n; ++r) vs(r, j) = v(r, order[j]);
    }

    const double null_tol = 1e-12 * std::max(ss.empty() ? 0.0 : ss[0], 1.0);
    std::vector<bool> is_null(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        if (ss[j] > null_tol) {
            for (std::size_t r = 0; r < m; ++r) us(r, j) /= ss[j];
        } else {
            is_null[j] = true;
            ss[j] = std::max(ss[j], 0.0);
        }
    }
    complete_null_columns(us, is_null);

    return singular_value_decomposition{std::move(us), std::move(ss), std::move(vs)};
}

} // namespace peg
