#ifndef PEG_MATRIX_HPP
#define PEG_MATRIX_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "peg/errors.hpp"

namespace peg {

/// Dense row-major matrix of 64-bit reals. Vectors are n-by-1 or 1-by-n.
class dense_matrix {
public:
    dense_matrix() = default;
    dense_matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static dense_matrix identity(std::size_t n) {
        dense_matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    bool same_shape(const dense_matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    dense_matrix transposed() const {
        dense_matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    dense_matrix& operator+=(const dense_matrix& o) {
        if (!same_shape(o)) throw shape_mismatch_error("dense_matrix += shape mismatch");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    dense_matrix& operator-=(const dense_matrix& o) {
        if (!same_shape(o)) throw shape_mismatch_error("dense_matrix -= shape mismatch");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    dense_matrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend dense_matrix operator+(dense_matrix a, const dense_matrix& b) { return a += b; }
    friend dense_matrix operator-(dense_matrix a, const dense_matrix& b) { return a -= b; }
    friend dense_matrix operator*(dense_matrix a, double s) { return a *= s; }
    friend dense_matrix operator*(double s, dense_matrix a) { return a *= s; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Symmetric sparse matrix in CSR form. Both (u,v) and (v,u) entries are
/// stored; column indices are sorted within each row, which fixes the
/// summation order of every kernel that consumes it.
struct sparse_matrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;  // length n+1
    std::vector<std::size_t> col_idx;  // length nnz
    std::vector<double> values;        // length nnz

    std::size_t nnz() const { return col_idx.size(); }

    dense_matrix to_dense() const {
        dense_matrix d(n, n);
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t k = row_ptr[u]; k < row_ptr[u + 1]; ++k) d(u, col_idx[k]) = values[k];
        return d;
    }
};

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

} // namespace peg

#endif // PEG_MATRIX_HPP
