#include "adafgl/sparse.hpp"

#include <stdexcept>

namespace adafgl {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> indptr,
                           std::vector<std::uint32_t> indices, std::vector<double> values)
    : rows_(rows), cols_(cols), indptr_(std::move(indptr)), indices_(std::move(indices)),
      values_(std::move(values)) {
    if (indptr_.size() != rows_ + 1 || indices_.size() != values_.size() || indptr_.back() != values_.size()) {
        throw std::invalid_argument("SparseMatrix: inconsistent CSR arrays");
    }
    for (const auto c : indices_) {
        if (c >= cols_) {
            throw std::invalid_argument("SparseMatrix: column index out of range");
        }
    }
}

DenseMatrix SparseMatrix::multiply(const DenseMatrix& x) const {
    if (x.rows() != cols_) {
        throw std::invalid_argument("SparseMatrix::multiply: dimension mismatch");
    }
    DenseMatrix out(rows_, x.cols());
    const std::size_t n = x.cols();
    for (std::size_t i = 0; i < rows_; ++i) {
        double* dst = out.row(i).data();
        for (std::size_t p = indptr_[i]; p < indptr_[i + 1]; ++p) {
            const double w = values_[p];
            const double* src = x.row(indices_[p]).data();
            for (std::size_t j = 0; j < n; ++j) {
                dst[j] += w * src[j];
            }
        }
    }
    return out;
}

DenseMatrix SparseMatrix::transpose_multiply(const DenseMatrix& x) const {
    if (x.rows() != rows_) {
        throw std::invalid_argument("SparseMatrix::transpose_multiply: dimension mismatch");
    }
    DenseMatrix out(cols_, x.cols());
    const std::size_t n = x.cols();
    for (std::size_t i = 0; i < rows_; ++i) {
        const double* src = x.row(i).data();
        for (std::size_t p = indptr_[i]; p < indptr_[i + 1]; ++p) {
            const double w = values_[p];
            double* dst = out.row(indices_[p]).data();
            for (std::size_t j = 0; j < n; ++j) {
                dst[j] += w * src[j];
            }
        }
    }
    return out;
}

DenseMatrix SparseMatrix::to_dense() const {
    DenseMatrix out(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t p = indptr_[i]; p < indptr_[i + 1]; ++p) {
            out(i, indices_[p]) += values_[p];
        }
    }
    return out;
}

} // namespace adafgl
