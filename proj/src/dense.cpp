#include "adafgl/dense.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace adafgl {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw std::invalid_argument("DenseMatrix: data length does not match rows * cols");
    }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw std::invalid_argument("DenseMatrix: ragged initializer");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out(i, i) = 1.0;
    }
    return out;
}

void DenseMatrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += other.data_[i];
    }
    return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] -= other.data_[i];
    }
    return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
    for (auto& v : data_) {
        v *= s;
    }
    return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, std::string_view what) {
    if (!a.same_shape(b)) {
        std::ostringstream msg;
        msg << what << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
            << b.cols();
        throw std::invalid_argument(msg.str());
    }
}

namespace {

void require_inner(std::size_t a, std::size_t b, std::string_view what) {
    if (a != b) {
        std::ostringstream msg;
        msg << what << ": inner dimensions differ (" << a << " vs " << b << ")";
        throw std::invalid_argument(msg.str());
    }
}

} // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    require_inner(a.cols(), b.rows(), "matmul");
    DenseMatrix out(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* dst = out.row(i).data();
        const auto arow = a.row(i);
        for (std::size_t k = 0; k < arow.size(); ++k) {
            const double s = arow[k];
            if (s == 0.0) {
                continue;
            }
            const double* src = b.row(k).data();
            for (std::size_t j = 0; j < n; ++j) {
                dst[j] += s * src[j];
            }
        }
    }
    return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    require_inner(a.rows(), b.rows(), "matmul_tn");
    DenseMatrix out(a.cols(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto arow = a.row(i);
        const double* src = b.row(i).data();
        for (std::size_t k = 0; k < arow.size(); ++k) {
            const double s = arow[k];
            if (s == 0.0) {
                continue;
            }
            double* dst = out.row(k).data();
            for (std::size_t j = 0; j < n; ++j) {
                dst[j] += s * src[j];
            }
        }
    }
    return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    require_inner(a.cols(), b.cols(), "matmul_nt");
    DenseMatrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const auto brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < arow.size(); ++k) {
                acc += arow[k] * brow[k];
            }
            out(i, j) = acc;
        }
    }
    return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out(j, i) = a(i, j);
        }
    }
    return out;
}

void axpy(double s, const DenseMatrix& a, DenseMatrix& out) {
    require_same_shape(a, out, "axpy");
    auto dst = out.values();
    auto src = a.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += s * src[i];
    }
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "hadamard");
    DenseMatrix out = a;
    auto dst = out.values();
    auto src = b.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] *= src[i];
    }
    return out;
}

void add_row_vector(DenseMatrix& a, const DenseMatrix& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw std::invalid_argument("add_row_vector: expected a 1 x cols row vector");
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            r[j] += row(0, j);
        }
    }
}

DenseMatrix column_sums(const DenseMatrix& a) {
    DenseMatrix out(1, a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto r = a.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            out(0, j) += r[j];
        }
    }
    return out;
}

DenseMatrix relu(const DenseMatrix& a) {
    DenseMatrix out = a;
    for (auto& v : out.values()) {
        v = v > 0.0 ? v : 0.0;
    }
    return out;
}

DenseMatrix relu_backward(const DenseMatrix& pre_activation, const DenseMatrix& grad) {
    require_same_shape(pre_activation, grad, "relu_backward");
    DenseMatrix out = grad;
    auto dst = out.values();
    auto pre = pre_activation.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (!(pre[i] > 0.0)) {
            dst[i] = 0.0;
        }
    }
    return out;
}

DenseMatrix softmax_rows(const DenseMatrix& logits) {
    DenseMatrix out(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto in = logits.row(i);
        auto dst = out.row(i);
        if (in.empty()) {
            continue;
        }
        const double peak = *std::max_element(in.begin(), in.end());
        double total = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) {
            dst[j] = std::exp(in[j] - peak);
            total += dst[j];
        }
        for (auto& v : dst) {
            v /= total;
        }
    }
    return out;
}

DenseMatrix softmax_rows_backward(const DenseMatrix& probs, const DenseMatrix& grad_probs) {
    require_same_shape(probs, grad_probs, "softmax_rows_backward");
    DenseMatrix out(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const auto s = probs.row(i);
        const auto g = grad_probs.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            dot += s[j] * g[j];
        }
        auto dst = out.row(i);
        for (std::size_t j = 0; j < s.size(); ++j) {
            dst[j] = s[j] * (g[j] - dot);
        }
    }
    return out;
}

DenseMatrix hconcat(std::span<const DenseMatrix> blocks) {
    if (blocks.empty()) {
        return {};
    }
    const std::size_t rows = blocks.front().rows();
    std::size_t cols = 0;
    for (const auto& b : blocks) {
        if (b.rows() != rows) {
            throw std::invalid_argument("hconcat: row counts differ");
        }
        cols += b.cols();
    }
    DenseMatrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        auto dst = out.row(i).begin();
        for (const auto& b : blocks) {
            const auto src = b.row(i);
            dst = std::copy(src.begin(), src.end(), dst);
        }
    }
    return out;
}

DenseMatrix column_block(const DenseMatrix& a, std::size_t first, std::size_t count) {
    if (first + count > a.cols()) {
        throw std::out_of_range("column_block: range exceeds matrix");
    }
    DenseMatrix out(a.rows(), count);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto src = a.row(i).subspan(first, count);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

DenseMatrix row_block(const DenseMatrix& a, std::size_t first, std::size_t count) {
    if (first + count > a.rows()) {
        throw std::out_of_range("row_block: range exceeds matrix");
    }
    const auto src = a.values().subspan(first * a.cols(), count * a.cols());
    return DenseMatrix(count, a.cols(), std::vector<double>(src.begin(), src.end()));
}

double frobenius_norm(const DenseMatrix& a) {
    double acc = 0.0;
    for (const double v : a.values()) {
        acc += v * v;
    }
    return std::sqrt(acc);
}

bool all_finite(const DenseMatrix& a) {
    return std::all_of(a.values().begin(), a.values().end(), [](double v) { return std::isfinite(v); });
}

std::size_t argmax_row(const DenseMatrix& a, std::size_t row) {
    const auto r = a.row(row);
    std::size_t best = 0;
    for (std::size_t j = 1; j < r.size(); ++j) {
        if (r[j] > r[best]) {
            best = j;
        }
    }
    return best;
}

} // namespace adafgl
