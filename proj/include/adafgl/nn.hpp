#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adafgl/dense.hpp"
#include "adafgl/sparse.hpp"

namespace adafgl {

struct Parameter {
    std::string name;
    DenseMatrix value;
    DenseMatrix grad;

    Parameter(std::string name, DenseMatrix value)
        : name(std::move(name)), value(std::move(value)), grad(this->value.rows(), this->value.cols()) {}

    bool operator==(const Parameter& other) const = default;
};

/// Architecture description shared by every copy of a model. Two states with
/// equal metadata can be averaged.
struct ModelMeta {
    std::string kind;              // "gcn", "mlp" or "linear"
    std::vector<std::size_t> dims; // layer widths, input first
    std::string activation = "relu";
    double norm_exponent = 0.5;    // r of the GCN operator; unused by MLPs

    bool operator==(const ModelMeta& other) const = default;
};

/// Ordered named parameters of one model. Layer l owns "layer<l>.weight"
/// (in x out) and "layer<l>.bias" (1 x out).
class ModelState {
public:
    ModelState() = default;
    ModelState(ModelMeta meta, std::vector<Parameter> params);

    [[nodiscard]] const ModelMeta& meta() const { return meta_; }
    [[nodiscard]] std::vector<Parameter>& params() { return params_; }
    [[nodiscard]] const std::vector<Parameter>& params() const { return params_; }
    [[nodiscard]] std::size_t num_layers() const { return meta_.dims.empty() ? 0 : meta_.dims.size() - 1; }

    [[nodiscard]] const DenseMatrix& weight(std::size_t layer) const { return params_[2 * layer].value; }
    [[nodiscard]] const DenseMatrix& bias(std::size_t layer) const { return params_[2 * layer + 1].value; }
    DenseMatrix& weight_grad(std::size_t layer) { return params_[2 * layer].grad; }
    DenseMatrix& bias_grad(std::size_t layer) { return params_[2 * layer + 1].grad; }

    [[nodiscard]] bool compatible(const ModelState& other) const;
    void zero_grad();
    /// Copies parameter values (not gradients) from a compatible state.
    void assign_values(const ModelState& other);
    [[nodiscard]] std::size_t num_scalars() const;

    bool operator==(const ModelState& other) const = default;

private:
    ModelMeta meta_;
    std::vector<Parameter> params_;
};

/// Glorot-uniform weights and zero biases for the given layer widths.
ModelState init_model(ModelMeta meta, std::uint64_t seed);
ModelState make_gcn(std::span<const std::size_t> dims, std::uint64_t seed, double norm_exponent = 0.5);
ModelState make_mlp(std::span<const std::size_t> dims, std::uint64_t seed);

/// Binary encoding: magic "AFMS", version byte, metadata, then per parameter
/// (name, rows, cols, row-major little-endian float64 values).
std::vector<std::uint8_t> serialize(const ModelState& state);
ModelState deserialize(std::span<const std::uint8_t> bytes);
void save_model(const ModelState& state, const std::filesystem::path& path);
ModelState load_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Layers. Forward passes record what the matching backward needs in a cache;
// backward passes accumulate into Parameter::grad.

DenseMatrix linear_forward(const DenseMatrix& x, const DenseMatrix& weight, const DenseMatrix& bias);

struct GcnCache {
    std::vector<DenseMatrix> inputs;  // input of each layer (H^(l-1))
    std::vector<DenseMatrix> pre_act; // A H W + b of each layer
};

/// Stacked graph convolutions A relu(... A X W1 ...) W_L with ReLU between
/// layers and raw logits out.
DenseMatrix gcn_forward(const SparseMatrix& adj_norm, const DenseMatrix& x, const ModelState& params,
                        GcnCache* cache = nullptr);
void gcn_backward(const SparseMatrix& adj_norm, const GcnCache& cache, const DenseMatrix& grad_logits,
                  ModelState& params);

struct MlpCache {
    std::vector<DenseMatrix> inputs;
    std::vector<DenseMatrix> pre_act;
};

/// Fully connected layers with ReLU between and raw outputs.
DenseMatrix mlp_forward(const DenseMatrix& x, const ModelState& params, MlpCache* cache = nullptr);
/// Returns dL/dx when `want_input_grad` is set, otherwise an empty matrix.
DenseMatrix mlp_backward(const MlpCache& cache, const DenseMatrix& grad_out, ModelState& params,
                         bool want_input_grad = false);

// ---------------------------------------------------------------------------
// Losses

struct LossResult {
    double value = 0.0;
    DenseMatrix grad; // with respect to the first argument
};

enum class CrossEntropyInput { logits, probabilities };

/// Mean negative log-likelihood over masked rows. Probabilities are clamped
/// at 1e-12 before the log. Throws on an empty mask.
LossResult softmax_cross_entropy(const DenseMatrix& input, CrossEntropyInput kind, std::span<const int> labels,
                                 const std::vector<bool>& mask);

/// ||a - b||_F and its gradient (a - b)/||a - b||_F, zero at a == b.
LossResult frobenius_loss(const DenseMatrix& a, const DenseMatrix& b);

// ---------------------------------------------------------------------------

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 5e-4;
};

/// Adam with L2 weight decay folded into the gradient. Moments are created
/// lazily to match the model they are first applied to.
class AdamOptimizer {
public:
    AdamOptimizer() = default;
    explicit AdamOptimizer(AdamConfig config) : config_(config) {}

    /// Applies one update and zeroes all gradients.
    void step(ModelState& model);

    [[nodiscard]] const AdamConfig& config() const { return config_; }
    [[nodiscard]] std::uint64_t steps() const { return step_; }

private:
    AdamConfig config_;
    std::uint64_t step_ = 0;
    std::vector<DenseMatrix> first_;
    std::vector<DenseMatrix> second_;
};

/// Fraction of masked rows whose argmax equals the label; 0 for an empty mask.
double masked_accuracy(const DenseMatrix& scores, std::span<const int> labels, const std::vector<bool>& mask);

} // namespace adafgl
