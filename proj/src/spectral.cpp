#include "peg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "peg/errors.hpp"
#include "peg/kernels.hpp"
#include "peg/procrustes.hpp"

namespace peg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Householder reduction of a symmetric matrix (held in z) to tridiagonal
/// form. On exit d holds the diagonal, e the subdiagonal (e[0] = 0) and z the
/// accumulated orthogonal transform.
void householder_tridiagonalize(dense_matrix& z, std::vector<double>& d, std::vector<double>& e) {
    const std::size_t n = z.rows();
    d.assign(n, 0.0);
    e.assign(n, 0.0);
    if (n == 1) {
        d[0] = z(0, 0);
        z(0, 0) = 1.0;
        return;
    }

    for (std::size_t i = n - 1; i >= 1; --i) {
        const std::size_t l = i - 1;
        double h = 0.0;
        if (l > 0) {
            double scale = 0.0;
            for (std::size_t k = 0; k <= l; ++k) scale += std::abs(z(i, k));
            if (scale == 0.0) {
                e[i] = z(i, l);
            } else {
                for (std::size_t k = 0; k <= l; ++k) {
                    z(i, k) /= scale;
                    h += z(i, k) * z(i, k);
                }
                double f = z(i, l);
                const double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                z(i, l) = f - g;
#pragma omp parallel for schedule(static) if (l > 127)
                for (long long jj = 0; jj <= static_cast<long long>(l); ++jj) {
                    const std::size_t j = static_cast<std::size_t>(jj);
                    z(j, i) = z(i, j) / h;  // stash u/h for the accumulation pass
                    double g2 = 0.0;
                    for (std::size_t k = 0; k <= j; ++k) g2 += z(j, k) * z(i, k);
                    for (std::size_t k = j + 1; k <= l; ++k) g2 += z(k, j) * z(i, k);
                    e[j] = g2 / h;
                }
                double f2 = 0.0;
                for (std::size_t j = 0; j <= l; ++j) f2 += e[j] * z(i, j);
                const double hh = f2 / (h + h);
                for (std::size_t j = 0; j <= l; ++j) e[j] -= hh * z(i, j);
#pragma omp parallel for schedule(static) if (l > 127)
                for (long long jj = 0; jj <= static_cast<long long>(l); ++jj) {
                    const std::size_t j = static_cast<std::size_t>(jj);
                    const double fj = z(i, j);
                    const double gj = e[j];
                    for (std::size_t k = 0; k <= j; ++k) z(j, k) -= fj * e[k] + gj * z(i, k);
                }
            }
        } else {
            e[i] = z(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] != 0.0) {
#pragma omp parallel for schedule(static) if (i > 127)
            for (long long jj = 0; jj < static_cast<long long>(i); ++jj) {
                const std::size_t j = static_cast<std::size_t>(jj);
                double g = 0.0;
                for (std::size_t k = 0; k < i; ++k) g += z(i, k) * z(k, j);
                for (std::size_t k = 0; k < i; ++k) z(k, j) -= g * z(k, i);
            }
        }
        d[i] = z(i, i);
        z(i, i) = 1.0;
        for (std::size_t j = 0; j < i; ++j) {
            z(i, j) = 0.0;
            z(j, i) = 0.0;
        }
    }
}

/// Implicit-shift QL iteration on a tridiagonal matrix, rotations applied to
/// the columns of z. d enters as the diagonal, e as the subdiagonal with
/// e[0] unused; d exits as the (unsorted) eigenvalues.
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, dense_matrix& z) {
    const std::size_t n = d.size();
    if (n <= 1) return;
    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;

    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
            }
            if (m != l) {
                if (iter++ == 50)
                    throw convergence_failure_error("tridiagonal QL exceeded 50 iterations");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                bool deflated = false;
                for (std::size_t i = m; i-- > l;) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        deflated = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    const std::size_t rows = z.rows();
#pragma omp parallel for schedule(static) if (rows > 255)
                    for (long long kk = 0; kk < static_cast<long long>(rows); ++kk) {
                        const std::size_t k = static_cast<std::size_t>(kk);
                        const double zk = z(k, i + 1);
                        z(k, i + 1) = s * z(k, i) + c * zk;
                        z(k, i) = c * z(k, i) - s * zk;
                    }
                }
                if (deflated) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

void sort_ascending(std::vector<double>& d, dense_matrix& z) {
    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    std::vector<double> ds(n);
    dense_matrix zs(z.rows(), n);
    for (std::size_t j = 0; j < n; ++j) {
        ds[j] = d[order[j]];
        for (std::size_t r = 0; r < z.rows(); ++r) zs(r, j) = z(r, order[j]);
    }
    d = std::move(ds);
    z = std::move(zs);
}

void apply_sign_convention(dense_matrix& z) {
    for (std::size_t j = 0; j < z.cols(); ++j) {
        std::size_t imax = 0;
        double best = std::abs(z(0, j));
        for (std::size_t i = 1; i < z.rows(); ++i) {
            const double v = std::abs(z(i, j));
            if (v > best) {
                best = v;
                imax = i;
            }
        }
        if (z(imax, j) < 0.0)
            for (std::size_t i = 0; i < z.rows(); ++i) z(i, j) = -z(i, j);
    }
}

void check_symmetric(const dense_matrix& b) {
    if (b.rows() != b.cols()) throw not_symmetric_error("symmetric_eig: matrix is not square");
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = i + 1; j < b.cols(); ++j)
            if (std::abs(b(i, j) - b(j, i)) > 1e-10)
                throw not_symmetric_error("symmetric_eig: asymmetry exceeds 1e-10 at (" +
                                          std::to_string(i) + "," + std::to_string(j) + ")");
}

std::vector<double> csr_matvec(const sparse_matrix& b, const std::vector<double>& x) {
    std::vector<double> y(b.n, 0.0);
#pragma omp parallel for schedule(static) if (b.n > 511)
    for (long long uu = 0; uu < static_cast<long long>(b.n); ++uu) {
        const std::size_t u = static_cast<std::size_t>(uu);
        double s = 0.0;
        for (std::size_t k = b.row_ptr[u]; k < b.row_ptr[u + 1]; ++k)
            s += b.values[k] * x[b.col_idx[k]];
        y[u] = s;
    }
    return y;
}

} // namespace

spectral_decomposition symmetric_eig(const dense_matrix& b, std::size_t dense_limit) {
    check_symmetric(b);
    if (b.rows() > dense_limit)
        throw too_large_error("symmetric_eig: N = " + std::to_string(b.rows()) +
                              " exceeds the dense-path limit " + std::to_string(dense_limit));
    spectral_decomposition out;
    out.eigenvectors = b;
    std::vector<double> e;
    householder_tridiagonalize(out.eigenvectors, out.eigenvalues, e);
    tridiagonal_ql(out.eigenvalues, e, out.eigenvectors);
    sort_ascending(out.eigenvalues, out.eigenvectors);
    apply_sign_convention(out.eigenvectors);
    return out;
}

spectral_decomposition lanczos_smallest(const sparse_matrix& b, std::size_t p,
                                        const lanczos_options& opts) {
    const std::size_t n = b.n;
    if (p == 0 || p > n) throw bad_dimension_error("lanczos_smallest: p out of range");

    double norm_est = 0.0;
    for (double v : b.values) norm_est += v * v;
    norm_est = std::max(std::sqrt(norm_est), 1e-300);

    std::size_t m = opts.max_subspace ? opts.max_subspace
                                      : std::max(std::size_t{2} * p + 50, std::size_t{4} * p);
    m = std::min(std::max(m, p), n);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (std::size_t attempt = 0;; ++attempt) {
        dense_matrix q(m, n);  // Lanczos vectors as rows
        std::vector<double> alpha(m, 0.0), beta(m, 0.0);

        std::vector<double> v(n);
        for (double& x : v) x = gauss(rng);
        double nv = std::sqrt(dot(v.data(), v.data(), n));
        for (std::size_t i = 0; i < n; ++i) q(0, i) = v[i] / nv;

        std::size_t built = 0;
        double tail_beta = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            built = j + 1;
            std::vector<double> qj(q.row(j), q.row(j) + n);
            std::vector<double> w = csr_matvec(b, qj);
            alpha[j] = dot(w.data(), qj.data(), n);
            // full reorthogonalization, two passes
            for (int pass = 0; pass < 2; ++pass)
                for (std::size_t i = 0; i <= j; ++i) {
                    const double proj = dot(w.data(), q.row(i), n);
                    for (std::size_t k = 0; k < n; ++k) w[k] -= proj * q(i, k);
                }
            if (j + 1 == m) {
                tail_beta = std::sqrt(dot(w.data(), w.data(), n));
                break;
            }
            double bnorm = std::sqrt(dot(w.data(), w.data(), n));
            if (bnorm < 1e-13 * norm_est) {
                // invariant subspace: continue in a fresh orthogonal direction
                beta[j] = 0.0;
                for (double& x : w) x = gauss(rng);
                for (int pass = 0; pass < 2; ++pass)
                    for (std::size_t i = 0; i <= j; ++i) {
                        const double proj = dot(w.data(), q.row(i), n);
                        for (std::size_t k = 0; k < n; ++k) w[k] -= proj * q(i, k);
                    }
                bnorm = std::sqrt(dot(w.data(), w.data(), n));
                if (bnorm < 1e-13 * norm_est) {
                    built = j + 1;
                    break;
                }
                for (std::size_t k = 0; k < n; ++k) q(j + 1, k) = w[k] / bnorm;
            } else {
                beta[j] = bnorm;
                for (std::size_t k = 0; k < n; ++k) q(j + 1, k) = w[k] / bnorm;
            }
        }

        // Ritz pairs of the built tridiagonal section
        std::vector<double> d(alpha.begin(), alpha.begin() + built);
        std::vector<double> e(built, 0.0);
        for (std::size_t i = 1; i < built; ++i) e[i] = beta[i - 1];
        dense_matrix y = dense_matrix::identity(built);
        tridiagonal_ql(d, e, y);
        sort_ascending(d, y);

        if (built >= p) {
            if (built < m) tail_beta = 0.0;  // stopped on an invariant subspace
            bool converged = true;
            for (std::size_t i = 0; i < p; ++i) {
                const double resid = std::abs(tail_beta * y(built - 1, i));
                if (resid > opts.tol * norm_est) {
                    converged = false;
                    break;
                }
            }
            if (converged || built == n) {
                spectral_decomposition out;
                out.eigenvalues.assign(d.begin(), d.begin() + p);
                out.eigenvectors = dense_matrix(n, p);
                for (std::size_t i = 0; i < p; ++i)
                    for (std::size_t k = 0; k < n; ++k) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < built; ++j) s += q(j, k) * y(j, i);
                        out.eigenvectors(k, i) = s;
                    }
                apply_sign_convention(out.eigenvectors);
                return out;
            }
        }

        if (attempt >= opts.max_restarts || m == n)
            throw convergence_failure_error("lanczos_smallest: residuals above tolerance after " +
                                            std::to_string(attempt + 1) + " attempts");
        m = std::min(n, m * 2);
    }
}

positional_encoding laplacian_eigenmap(const graph& g, std::size_t p,
                                       const eigenmap_options& opts) {
    const std::size_t n = g.num_nodes();
    if (p < 1 || p >= n) throw bad_dimension_error("laplacian_eigenmap: requires 1 <= p < N");

    sparse_matrix lap = normalized_laplacian(g, opts.policy);
    std::vector<double> eigs;
    dense_matrix vects;
    if (n <= opts.dense_cutoff) {
        spectral_decomposition full = symmetric_eig(lap.to_dense(), opts.dense_cutoff);
        eigs = std::move(full.eigenvalues);
        vects = std::move(full.eigenvectors);
    } else {
        spectral_decomposition part = lanczos_smallest(lap, p + 1, opts.lanczos);
        eigs = std::move(part.eigenvalues);
        vects = std::move(part.eigenvectors);
    }

    positional_encoding pe;
    pe.method = pe_method::laplacian_eigenmap;
    pe.p = p;
    pe.z = dense_matrix(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) pe.z(i, j) = vects(i, j);
    pe.eigenvalues_used.assign(eigs.begin(), eigs.begin() + p);

    const double gap = eigs[p] - eigs[p - 1];
    const double tol = 1e-9 * std::max(1.0, std::max(std::abs(eigs[p]), std::abs(eigs[p - 1])));
    pe.degenerate_gap_warning = gap <= tol;
    return pe;
}

eigengap_diagnostics_result eigengap_diagnostics(const std::vector<double>& eigenvalues,
                                                 std::size_t p) {
    if (p < 1 || eigenvalues.size() < p + 1)
        throw too_few_eigenvalues_error("eigengap_diagnostics: need at least p+1 eigenvalues");
    eigengap_diagnostics_result r;
    r.p = p;
    r.gap_p = eigenvalues[p] - eigenvalues[p - 1];
    r.min_consecutive_gap = kInf;
    for (std::size_t k = 0; k < p; ++k)
        r.min_consecutive_gap =
            std::min(r.min_consecutive_gap, std::abs(eigenvalues[k + 1] - eigenvalues[k]));
    r.stability_ratio =
        r.min_consecutive_gap > 0.0 ? std::abs(r.gap_p) / r.min_consecutive_gap : kInf;
    r.delta = r.gap_p > 0.0 ? 1.0 / r.gap_p : kInf;
    return r;
}

dense_matrix pe_of_matrix(const dense_matrix& b, std::size_t p) {
    if (p == 0 || p > b.rows()) throw bad_dimension_error("pe_of_matrix: p out of range");
    spectral_decomposition dec = symmetric_eig(b);
    dense_matrix z(b.rows(), p);
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < p; ++j) z(i, j) = dec.eigenvectors(i, j);
    return z;
}

adversarial_result adversarial_perturbation(const dense_matrix& b, std::size_t p, double eps) {
    const std::size_t n = b.rows();
    if (p < 1 || p + 1 > n) throw bad_dimension_error("adversarial_perturbation: p out of range");
    if (eps < 0.0 || eps > 0.05)
        throw eps_too_large_error("adversarial_perturbation: eps must lie in [0, 0.05]");

    spectral_decomposition dec = symmetric_eig(b);
    for (std::size_t i = 0; i < p; ++i)
        if (dec.eigenvalues[i + 1] - dec.eigenvalues[i] <= 1e-9)
            throw multiple_eigenvalues_error(
                "adversarial_perturbation: eigenvalues " + std::to_string(i) + " and " +
                std::to_string(i + 1) + " coincide within 1e-9");

    adversarial_result out;
    if (eps == 0.0) {
        out.perturbed = b;
        out.delta = dense_matrix(n, n);
        return out;  // delta_norm = pe_change = ratio = 0 sentinels
    }

    std::size_t k = 0;
    double min_gap = kInf;
    for (std::size_t i = 0; i < p; ++i) {
        const double gap = dec.eigenvalues[i + 1] - dec.eigenvalues[i];
        if (gap < min_gap) {
            min_gap = gap;
            k = i;
        }
    }

    const double ce = std::sqrt(1.0 - eps * eps);
    dense_matrix u_rot = dec.eigenvectors;
    for (std::size_t r = 0; r < n; ++r) {
        const double uk = dec.eigenvectors(r, k);
        const double uk1 = dec.eigenvectors(r, k + 1);
        u_rot(r, k) = ce * uk + eps * uk1;
        u_rot(r, k + 1) = -eps * uk + ce * uk1;
    }
    dense_matrix scaled = u_rot;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) scaled(r, c) *= dec.eigenvalues[c];
    dense_matrix perturbed = kernels::matmul_a_bt(scaled, u_rot);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = r + 1; c < n; ++c) {
            const double sym = 0.5 * (perturbed(r, c) + perturbed(c, r));
            perturbed(r, c) = sym;
            perturbed(c, r) = sym;
        }

    out.perturbed = perturbed;
    out.delta = perturbed - b;
    out.delta_norm = out.delta.frobenius_norm();

    dense_matrix pe_before(n, p), pe_after = pe_of_matrix(perturbed, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) pe_before(i, j) = dec.eigenvectors(i, j);
    out.pe_change = (p <= 16) ? sign_match_distance_enumerated(pe_before, pe_after)
                              : per_column_sign_distance(pe_before, pe_after);
    out.ratio = out.delta_norm > 0.0 ? out.pe_change / out.delta_norm : 0.0;
    return out;
}

double davis_kahan_bound(const dense_matrix& b1, const dense_matrix& b2, std::size_t p,
                         const permutation& perm) {
    const std::size_t n = b1.rows();
    if (b2.rows() != n || perm.size() != n)
        throw shape_mismatch_error("davis_kahan_bound: dimensions disagree");
    if (p < 1 || p + 1 > n) throw bad_dimension_error("davis_kahan_bound: p out of range");

    spectral_decomposition d1 = symmetric_eig(b1);
    spectral_decomposition d2 = symmetric_eig(b2);
    const double gap1 = d1.eigenvalues[p] - d1.eigenvalues[p - 1];
    const double gap2 = d2.eigenvalues[p] - d2.eigenvalues[p - 1];
    const double inv1 = gap1 > 0.0 ? 1.0 / gap1 : kInf;
    const double inv2 = gap2 > 0.0 ? 1.0 / gap2 : kInf;
    const double delta = std::min(inv1, inv2);
    if (!std::isfinite(delta))
        throw zero_eigengap_error("davis_kahan_bound: both eigengaps at p vanish");

    dense_matrix diff(n, n);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
            diff(perm(u), perm(v)) = b2(u, v);  // P b2 P^T
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) diff(u, v) = b1(u, v) - diff(u, v);

    spectral_decomposition dd = symmetric_eig(diff);
    double op = 0.0;
    for (double lam : dd.eigenvalues) op = std::max(op, std::abs(lam));
    const double fro = diff.frobenius_norm();
    return std::pow(2.0, 1.5) * delta * std::min(std::sqrt(double(p)) * op, fro);
}

double operator_norm(const dense_matrix& a) {
    if (a.empty()) return 0.0;
    dense_matrix gram = a.rows() <= a.cols() ? kernels::matmul_a_bt(a, a)
                                             : kernels::matmul_at_b(a, a);
    spectral_decomposition dec = symmetric_eig(gram);
    return std::sqrt(std::max(dec.eigenvalues.back(), 0.0));
}

} // namespace peg
