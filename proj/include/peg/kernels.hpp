#ifndef PEG_KERNELS_HPP
#define PEG_KERNELS_HPP

#include <cstddef>
#include <vector>

#include "peg/matrix.hpp"

namespace peg::kernels {

/// Globally enables/disables the OpenMP paths. The parallel kernels split
/// work by output row and keep the per-element accumulation order identical
/// to the serial reference, so results are bitwise equal either way.
void set_parallel(bool enabled);
bool parallel_enabled();

// ---- serial reference implementations (kept for tests and benchmarks) ----

dense_matrix matmul_serial(const dense_matrix& a, const dense_matrix& b);
dense_matrix matmul_at_b_serial(const dense_matrix& a, const dense_matrix& b);  // a^T * b
dense_matrix matmul_a_bt_serial(const dense_matrix& a, const dense_matrix& b);  // a * b^T
dense_matrix spmm_serial(const sparse_matrix& s, const dense_matrix& x);
dense_matrix spmm_scaled_serial(const sparse_matrix& s, const std::vector<std::size_t>& edge_id,
                                const std::vector<double>& edge_scale, const dense_matrix& x);

// ---- dispatching entry points (OpenMP when enabled) ----

dense_matrix matmul(const dense_matrix& a, const dense_matrix& b);
dense_matrix matmul_at_b(const dense_matrix& a, const dense_matrix& b);
dense_matrix matmul_a_bt(const dense_matrix& a, const dense_matrix& b);
dense_matrix spmm(const sparse_matrix& s, const dense_matrix& x);

/// Row u of the result is sum_k s.values[k] * edge_scale[edge_id[k]] * x[col_idx[k], :].
/// Realizes the masked Hadamard product (S ⊙ Xi) X without forming S ⊙ Xi.
dense_matrix spmm_scaled(const sparse_matrix& s, const std::vector<std::size_t>& edge_id,
                         const std::vector<double>& edge_scale, const dense_matrix& x);

} // namespace peg::kernels

#endif // PEG_KERNELS_HPP
