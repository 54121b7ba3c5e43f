#ifndef PEG_PROCRUSTES_HPP
#define PEG_PROCRUSTES_HPP

#include <vector>

#include "peg/matrix.hpp"

namespace peg {

/// Optimal orthogonal alignment of two positional-feature matrices:
/// q_star minimizes ||z1 - z2 Q||_F over Q in O(p), eta is the minimum.
struct procrustes_result {
    dense_matrix q_star;
    double eta;
};

/// Classical orthogonal Procrustes over the full orthogonal group
/// (reflections allowed): q_star = U V^T from the SVD of z2^T z1.
procrustes_result pe_match(const dense_matrix& z1, const dense_matrix& z2);

/// Restricted matching over per-column sign flips only. The Frobenius
/// objective decouples column-wise, so the exhaustive optimum equals the
/// per-column choice. Guarded at p <= 16 to match the exhaustive contract.
struct sign_match_result {
    std::vector<double> signs;  // each +1 or -1
    double distance;
};

sign_match_result sign_match(const dense_matrix& z1, const dense_matrix& z2);

/// Exhaustive minimum of ||z1 - z2 S||_F over all 2^p sign matrices.
/// Used as an oracle for sign_match and for small adversarial checks.
double sign_match_distance_enumerated(const dense_matrix& z1, const dense_matrix& z2);

/// Per-column sign minimization without the exhaustive-width guard; equals
/// the enumerated optimum because the columns decouple.
double per_column_sign_distance(const dense_matrix& z1, const dense_matrix& z2);

} // namespace peg

#endif // PEG_PROCRUSTES_HPP
