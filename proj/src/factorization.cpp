#include "peg/factorization.hpp"

#include <cmath>
#include <random>
#include <string>

#include "peg/autodiff.hpp"
#include "peg/errors.hpp"
#include "peg/kernels.hpp"

namespace peg {

double log_sigmoid(double x) {
    if (x <= 0.0) return x - std::log1p(std::exp(x));
    return -std::log1p(std::exp(-x));
}

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Adjacency with unit self loops padded onto zero-degree nodes, plus the
/// resulting degree vector.
std::pair<dense_matrix, std::vector<double>> padded_adjacency(const graph& g) {
    dense_matrix a = g.adjacency().to_dense();
    degree_info d = compute_degrees(g);
    for (std::size_t v = 0; v < g.num_nodes(); ++v)
        if (d.degrees[v] == 0.0) {
            a(v, v) = 1.0;
            d.degrees[v] = 1.0;
        }
    return {std::move(a), std::move(d.degrees)};
}

} // namespace

factorization_objective line_targets(const graph& g, double c) {
    if (c <= 0.0) throw bad_dimension_error("line_targets: c must be positive");
    auto [a, deg] = padded_adjacency(g);
    const std::size_t n = g.num_nodes();
    factorization_objective obj;
    obj.f_plus = std::move(a);
    obj.f_minus = dense_matrix(n, n);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) obj.f_minus(u, v) = c * std::pow(deg[v], 0.75);
    return obj;
}

factorization_objective deepwalk_targets(const graph& g, std::size_t window, double c) {
    if (c <= 0.0) throw bad_dimension_error("deepwalk_targets: c must be positive");
    if (window < 1 || window > 10)
        throw bad_dimension_error("deepwalk_targets: window must lie in [1, 10]");
    const std::size_t n = g.num_nodes();
    if (n > 3000) throw too_large_error("deepwalk_targets: N > 3000 (dense random-walk matrix)");
    degree_info d = compute_degrees(g);
    for (std::size_t v = 0; v < n; ++v)
        if (d.degrees[v] == 0.0)
            throw isolated_node_error("deepwalk_targets: node " + std::to_string(v) +
                                      " is isolated");

    const sparse_matrix& a = g.adjacency();
    // phi_pow holds Phi^k, advanced by one sparse-dense multiply per step
    dense_matrix phi_pow = dense_matrix::identity(n);
    factorization_objective obj;
    obj.f_plus = dense_matrix(n, n);
    for (std::size_t k = 1; k <= window; ++k) {
        dense_matrix next = kernels::spmm(a, phi_pow);  // A * Phi^{k-1}
        for (std::size_t u = 0; u < n; ++u) {
            const double inv = 1.0 / d.degrees[u];
            for (std::size_t v = 0; v < n; ++v) next(u, v) *= inv;  // Phi^k
        }
        phi_pow = std::move(next);
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = 0; v < n; ++v) {
                const double dp = d.degrees[u] * phi_pow(u, v);  // (D Phi^k)_{uv}
                obj.f_plus(u, v) += dp;
                obj.f_plus(v, u) += dp;  // transpose term
            }
    }
    obj.f_minus = dense_matrix(n, n);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) obj.f_minus(u, v) = c * d.degrees[u] * d.degrees[v];
    return obj;
}

double factorization_objective_value(const factorization_objective& obj, const dense_matrix& m) {
    if (!m.same_shape(obj.f_plus)) throw shape_mismatch_error("objective_value: M shape mismatch");
    const std::size_t n = m.rows();
    std::vector<double> row_sum(n, 0.0);
#pragma omp parallel for schedule(static) if (n > 63)
    for (long long uu = 0; uu < static_cast<long long>(n); ++uu) {
        const std::size_t u = static_cast<std::size_t>(uu);
        double s = 0.0;
        for (std::size_t v = 0; v < m.cols(); ++v) {
            const double mv = m(u, v);
            s += obj.f_plus(u, v) * log_sigmoid(mv) + obj.f_minus(u, v) * log_sigmoid(-mv);
        }
        row_sum[u] = s;
    }
    double total = 0.0;
    for (double s : row_sum) total += s;
    return total;
}

dense_matrix factorization_gradient(const factorization_objective& obj, const dense_matrix& m) {
    if (!m.same_shape(obj.f_plus)) throw shape_mismatch_error("gradient: M shape mismatch");
    dense_matrix g(m.rows(), m.cols());
#pragma omp parallel for schedule(static) if (m.rows() > 63)
    for (long long uu = 0; uu < static_cast<long long>(m.rows()); ++uu) {
        const std::size_t u = static_cast<std::size_t>(uu);
        for (std::size_t v = 0; v < m.cols(); ++v) {
            const double mv = m(u, v);
            g(u, v) = obj.f_plus(u, v) * logistic(-mv) - obj.f_minus(u, v) * logistic(mv);
        }
    }
    return g;
}

factorization_pe solve_factorization(const factorization_objective& obj, std::size_t p,
                                     std::uint64_t seed, std::size_t max_iters,
                                     const factorization_solve_options& opts) {
    const std::size_t n = obj.f_plus.rows();
    if (p == 0 || p > n) throw bad_dimension_error("solve_factorization: requires 1 <= p <= N");

    dense_matrix z(n, p), zp(n, p);
    if (opts.init_z && opts.init_z_prime) {
        if (opts.init_z->rows() != n || opts.init_z->cols() != p ||
            opts.init_z_prime->rows() != n || opts.init_z_prime->cols() != p)
            throw shape_mismatch_error("solve_factorization: init shapes disagree");
        z = *opts.init_z;
        zp = *opts.init_z_prime;
    } else {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, std::pow(static_cast<double>(p), -0.25));
        for (std::size_t k = 0; k < z.size(); ++k) z.data()[k] = gauss(rng);
        for (std::size_t k = 0; k < zp.size(); ++k) zp.data()[k] = gauss(rng);
    }

    nn::adam_optimizer adam({opts.lr, 0.9, 0.999, 1e-8});
    const double tol = opts.grad_tol_per_node * static_cast<double>(n);
    double lr = opts.lr;

    factorization_pe out;
    dense_matrix best_z = z, best_zp = zp;
    double best_obj = factorization_objective_value(obj, kernels::matmul_a_bt(zp, z));
    out.trace.best_objective_history.push_back(best_obj);
    double grad_norm = 0.0;
    std::size_t it = 0;
    bool converged = false;

    for (; it < max_iters; ++it) {
        dense_matrix m = kernels::matmul_a_bt(zp, z);
        dense_matrix g = factorization_gradient(obj, m);
        dense_matrix gzp = kernels::matmul(g, z);        // dObj/dZ'
        dense_matrix gz = kernels::matmul_at_b(g, zp);   // dObj/dZ
        grad_norm = std::sqrt(gzp.frobenius_norm() * gzp.frobenius_norm() +
                              gz.frobenius_norm() * gz.frobenius_norm());
        if (grad_norm < tol) {
            converged = true;
            break;
        }
        // ascent: Adam minimizes, so feed the negated gradient
        adam.step(zp, gzp * -1.0);
        adam.step(z, gz * -1.0);
        adam.finish_step();
        if (opts.lr_decay < 1.0 && it >= opts.lr_decay_after) {
            lr *= opts.lr_decay;
            adam.set_learning_rate(lr);
        }

        if ((it + 1) % opts.objective_eval_every == 0 || it + 1 == max_iters) {
            const double o = factorization_objective_value(obj, kernels::matmul_a_bt(zp, z));
            if (o > best_obj) {
                best_obj = o;
                best_z = z;
                best_zp = zp;
            }
            out.trace.best_objective_history.push_back(best_obj);
        }
    }

    dense_matrix final_z = converged ? z : best_z;
    dense_matrix final_zp = converged ? zp : best_zp;
    if (converged) {
        const double o = factorization_objective_value(obj, kernels::matmul_a_bt(zp, z));
        if (o > best_obj) best_obj = o;
        out.trace.best_objective_history.push_back(best_obj);
    }

    out.trace.iterations = it;
    out.trace.final_grad_norm = grad_norm;
    out.trace.converged = converged;
    out.warning_not_converged = !converged;

    dense_matrix m_star = kernels::matmul_a_bt(final_zp, final_z);
    if (opts.use_svd) {
        // right-singular vectors of M*: top-p eigenvectors of M*^T M*
        dense_matrix gram = kernels::matmul_at_b(m_star, m_star);
        spectral_decomposition dec = symmetric_eig(gram);
        out.z = dense_matrix(n, p);
        for (std::size_t j = 0; j < p; ++j) {
            const std::size_t src = n - 1 - j;  // descending singular values
            for (std::size_t i = 0; i < n; ++i) out.z(i, j) = dec.eigenvectors(i, src);
        }
        out.z_prime = kernels::matmul(m_star, out.z);
    } else {
        out.z = final_z;
        out.z_prime = final_zp;
    }
    out.objective_value = factorization_objective_value(obj, m_star);
    return out;
}

positional_encoding factorization_encoding(const factorization_pe& pe) {
    positional_encoding enc;
    enc.z = pe.z;
    enc.method = pe_method::factorization;
    enc.p = pe.z.cols();
    return enc;
}

} // namespace peg
