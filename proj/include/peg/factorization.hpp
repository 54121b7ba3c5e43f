#ifndef PEG_FACTORIZATION_HPP
#define PEG_FACTORIZATION_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "peg/graph.hpp"
#include "peg/matrix.hpp"
#include "peg/spectral.hpp"

namespace peg {

/// Numerically stable log-sigmoid: x - log(1 + exp(x)), always in (-inf, 0).
double log_sigmoid(double x);

/// Entrywise-paired factorization objective
///   sum_{u,v} f_plus[u,v] * log_sigmoid(M[u,v]) + f_minus[u,v] * log_sigmoid(-M[u,v])
/// maximized over matrices M of rank at most rank_cap.
struct factorization_objective {
    dense_matrix f_plus;
    dense_matrix f_minus;
    std::size_t rank_cap = 0;  // filled in by the solver
};

/// f_plus = A (zero-degree nodes padded with a unit self loop),
/// f_minus[u,v] = c * d_v^{3/4}.
factorization_objective line_targets(const graph& g, double c);

/// f_plus = sum_{k=1..T} (D Phi^k + (D Phi^k)^T) with Phi = D^{-1} A,
/// f_minus[u,v] = c * d_u * d_v. Dense; guarded at N <= 3000.
factorization_objective deepwalk_targets(const graph& g, std::size_t window, double c);

double factorization_objective_value(const factorization_objective& obj, const dense_matrix& m);

/// dObjective/dM = f_plus ⊙ sigmoid(-M) - f_minus ⊙ sigmoid(M).
dense_matrix factorization_gradient(const factorization_objective& obj, const dense_matrix& m);

struct factorization_solve_options {
    double lr = 0.05;
    /// Per-iteration multiplicative step decay, applied once the iteration
    /// count passes lr_decay_after. Adam with a fixed step limit-cycles near
    /// the optimum; annealing lets the gradient norm reach tight tolerances.
    double lr_decay = 1.0;
    std::size_t lr_decay_after = 0;
    double grad_tol_per_node = 1e-5;  // converged when grad norm < this * N
    std::size_t objective_eval_every = 10;
    bool use_svd = true;  // extract z as right-singular vectors of the factored optimum
    std::optional<dense_matrix> init_z;        // overrides the seeded init
    std::optional<dense_matrix> init_z_prime;
};

struct solver_trace {
    std::size_t iterations = 0;
    double final_grad_norm = 0.0;
    bool converged = false;
    std::vector<double> best_objective_history;  // nondecreasing by construction
};

struct factorization_pe {
    dense_matrix z;        // N x p, orthonormal columns when use_svd
    dense_matrix z_prime;  // N x p; the optimum is z_prime * z^T
    double objective_value = 0.0;
    solver_trace trace;
    bool warning_not_converged = false;
};

/// Factored gradient ascent (M = Z' Z^T, both N x p) with Adam, followed by
/// an SVD re-extraction of Z. Never throws on slow convergence: the best
/// iterate comes back with warning_not_converged set.
factorization_pe solve_factorization(const factorization_objective& obj, std::size_t p,
                                     std::uint64_t seed, std::size_t max_iters,
                                     const factorization_solve_options& opts = {});

/// Positional-encoding wrapper around the solver result.
positional_encoding factorization_encoding(const factorization_pe& pe);

} // namespace peg

#endif // PEG_FACTORIZATION_HPP
