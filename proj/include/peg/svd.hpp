#ifndef PEG_SVD_HPP
#define PEG_SVD_HPP

#include <vector>

#include "peg/matrix.hpp"

namespace peg {

/// a = u * diag(sigma) * v^T with u (m-by-m when full, else m-by-n), v n-by-n
/// orthogonal and sigma sorted descending.
struct singular_value_decomposition {
    dense_matrix u;
    std::vector<double> sigma;
    dense_matrix v;
};

/// One-sided Jacobi SVD for m >= n. Null columns of u (zero singular values)
/// are completed to an orthonormal basis so u^T u = I holds exactly enough
/// for downstream orthogonal-matrix products.
singular_value_decomposition jacobi_svd(const dense_matrix& a);

} // namespace peg

#endif // PEG_SVD_HPP
