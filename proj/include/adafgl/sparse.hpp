#pragma once

#include <cstdint>
#include <vector>

#include "adafgl/dense.hpp"

namespace adafgl {

/// Compressed sparse row matrix with explicit values. Used for normalized
/// adjacency operators over client subgraphs.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> indptr,
                 std::vector<std::uint32_t> indices, std::vector<double> values);

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::size_t nnz() const { return values_.size(); }

    [[nodiscard]] const std::vector<std::size_t>& indptr() const { return indptr_; }
    [[nodiscard]] const std::vector<std::uint32_t>& indices() const { return indices_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }

    /// this * x
    [[nodiscard]] DenseMatrix multiply(const DenseMatrix& x) const;
    /// transpose(this) * x
    [[nodiscard]] DenseMatrix transpose_multiply(const DenseMatrix& x) const;
    [[nodiscard]] DenseMatrix to_dense() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> indptr_{0};
    std::vector<std::uint32_t> indices_;
    std::vector<double> values_;
};

} // namespace adafgl
