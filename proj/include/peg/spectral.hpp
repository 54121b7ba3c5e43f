#ifndef PEG_SPECTRAL_HPP
#define PEG_SPECTRAL_HPP

#include <cstdint>
#include <vector>

#include "peg/graph.hpp"
#include "peg/matrix.hpp"

namespace peg {

/// Full eigendecomposition B = U diag(lambda) U^T of a symmetric matrix,
/// eigenvalues ascending, column i of eigenvectors paired with eigenvalues[i].
/// Columns carry the deterministic sign convention: the entry of largest
/// absolute value in each column is positive (ties broken by smallest index).
struct spectral_decomposition {
    std::vector<double> eigenvalues;
    dense_matrix eigenvectors;
};

/// Dense path: Householder tridiagonalization followed by implicit-shift QL.
/// Requires max |b - b^T| <= 1e-10 and the dense-size guard (default 5000).
spectral_decomposition symmetric_eig(const dense_matrix& b, std::size_t dense_limit = 5000);

struct lanczos_options {
    std::size_t max_subspace = 0;   // 0: chosen from p
    std::size_t max_restarts = 2;
    double tol = 1e-9;              // relative residual target
    std::uint64_t seed = 12345;
};

/// Iterative smallest-p solver: Lanczos with full reorthogonalization.
/// Returns p eigenpairs (ascending) plus the (p+1)-th Ritz value for gap
/// diagnostics, available via the extra trailing eigenvalue.
spectral_decomposition lanczos_smallest(const sparse_matrix& b, std::size_t p,
                                        const lanczos_options& opts = {});

enum class pe_method : int { laplacian_eigenmap = 0, factorization = 1 };

/// N-by-p positional features with provenance and the eigenvalues they came
/// from (empty for factorization-based encodings).
struct positional_encoding {
    dense_matrix z;
    pe_method method = pe_method::laplacian_eigenmap;
    std::vector<double> eigenvalues_used;
    std::size_t p = 0;
    /// Set when lambda_p == lambda_{p+1} within 1e-9: the regime where the
    /// eigenspace that z spans is not determined by p alone.
    bool degenerate_gap_warning = false;
};

struct eigenmap_options {
    isolated_policy policy = isolated_policy::pad_self_loop;
    std::size_t dense_cutoff = 5000;
    lanczos_options lanczos;
};

/// Eigenvectors of the p smallest eigenvalues of the normalized Laplacian,
/// sign-normalized.
positional_encoding laplacian_eigenmap(const graph& g, std::size_t p,
                                       const eigenmap_options& opts = {});

/// Gap statistics around index p of an ascending spectrum (1-based lambda_p):
///   gap_p               = lambda_{p+1} - lambda_p
///   min_consecutive_gap = min_{1<=k<=p} |lambda_k - lambda_{k+1}|
///   stability_ratio     = gap_p / min_consecutive_gap
///   delta               = 1 / gap_p  (infinity sentinel when gap_p == 0)
struct eigengap_diagnostics_result {
    std::size_t p = 0;
    double gap_p = 0.0;
    double min_consecutive_gap = 0.0;
    double stability_ratio = 0.0;
    double delta = 0.0;
};

eigengap_diagnostics_result eigengap_diagnostics(const std::vector<double>& eigenvalues,
                                                 std::size_t p);

/// Worst-case eigenvector rotation: mixes the two eigenvectors bracketing the
/// smallest consecutive gap among the first p. Returns the perturbed matrix,
/// the perturbation itself and the achieved sign-matched PE change per unit
/// of ||delta_b||_F.
struct adversarial_result {
    dense_matrix perturbed;
    dense_matrix delta;
    double delta_norm = 0.0;
    double pe_change = 0.0;
    double ratio = 0.0;
};

adversarial_result adversarial_perturbation(const dense_matrix& b, std::size_t p, double eps);

/// Eigenvectors of the p smallest eigenvalues of a symmetric PSD matrix.
dense_matrix pe_of_matrix(const dense_matrix& b, std::size_t p);

/// Right-hand side of the eigenspace perturbation bound
///   2^{3/2} * delta * min(sqrt(p) ||B1 - P B2 P^T||_op, ||B1 - P B2 P^T||_F)
/// with delta the smaller of the two inverse gaps at p.
double davis_kahan_bound(const dense_matrix& b1, const dense_matrix& b2, std::size_t p,
                         const permutation& perm);

/// Largest singular value (exact, via the symmetric eigensolver).
double operator_norm(const dense_matrix& a);

} // namespace peg

#endif // PEG_SPECTRAL_HPP
