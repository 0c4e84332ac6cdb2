#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace adafgl {

/// Row-major matrix of doubles. The numeric workhorse for features, weights,
/// predictions and the per-client dense propagation matrices.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static DenseMatrix identity(std::size_t n);

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<double> values() { return data_; }
    [[nodiscard]] std::span<const double> values() const { return data_; }

    void fill(double value);
    [[nodiscard]] bool same_shape(const DenseMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    DenseMatrix& operator+=(const DenseMatrix& other);
    DenseMatrix& operator-=(const DenseMatrix& other);
    DenseMatrix& operator*=(double s);

    bool operator==(const DenseMatrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

/// Throws std::invalid_argument naming `what` when shapes differ.
void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, std::string_view what);

/// a * b. Zero entries of `a` are skipped, which makes sparse feature
/// matrices cheap without a separate sparse type.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// transpose(a) * b, skipping zero entries of `a`.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a * transpose(b).
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

/// out += s * a
void axpy(double s, const DenseMatrix& a, DenseMatrix& out);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);

/// Add a row vector (1 x cols) to every row.
void add_row_vector(DenseMatrix& a, const DenseMatrix& row);
/// Column sums as a 1 x cols matrix.
DenseMatrix column_sums(const DenseMatrix& a);

DenseMatrix relu(const DenseMatrix& a);
/// Gradient through relu given the pre-activation input.
DenseMatrix relu_backward(const DenseMatrix& pre_activation, const DenseMatrix& grad);

/// Row-wise numerically stable softmax.
DenseMatrix softmax_rows(const DenseMatrix& logits);
/// Vector-Jacobian product of softmax: given s = softmax(z) and dL/ds, returns dL/dz.
DenseMatrix softmax_rows_backward(const DenseMatrix& probs, const DenseMatrix& grad_probs);

DenseMatrix hconcat(std::span<const DenseMatrix> blocks);
/// Columns [first, first + count).
DenseMatrix column_block(const DenseMatrix& a, std::size_t first, std::size_t count);
/// Rows [first, first + count).
DenseMatrix row_block(const DenseMatrix& a, std::size_t first, std::size_t count);

double frobenius_norm(const DenseMatrix& a);
bool all_finite(const DenseMatrix& a);

/// Column of the row maximum; ties resolve to the lowest index.
std::size_t argmax_row(const DenseMatrix& a, std::size_t row);

} // namespace adafgl
