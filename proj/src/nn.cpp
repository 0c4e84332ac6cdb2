#include "adafgl/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "adafgl/rng.hpp"

namespace adafgl {

ModelState::ModelState(ModelMeta meta, std::vector<Parameter> params)
    : meta_(std::move(meta)), params_(std::move(params)) {}

bool ModelState::compatible(const ModelState& other) const {
    if (!(meta_ == other.meta_) || params_.size() != other.params_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name != other.params_[i].name || !params_[i].value.same_shape(other.params_[i].value)) {
            return false;
        }
    }
    return true;
}

void ModelState::zero_grad() {
    for (auto& p : params_) {
        p.grad.fill(0.0);
    }
}

void ModelState::assign_values(const ModelState& other) {
    if (!compatible(other)) {
        throw std::invalid_argument("ModelState::assign_values: incompatible models");
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        params_[i].value = other.params_[i].value;
    }
}

std::size_t ModelState::num_scalars() const {
    std::size_t total = 0;
    for (const auto& p : params_) {
        total += p.value.size();
    }
    return total;
}

ModelState init_model(ModelMeta meta, std::uint64_t seed) {
    if (meta.dims.size() < 2) {
        throw std::invalid_argument("init_model: need at least input and output widths");
    }
    Rng rng(seed);
    std::vector<Parameter> params;
    for (std::size_t l = 0; l + 1 < meta.dims.size(); ++l) {
        const std::size_t fan_in = meta.dims[l];
        const std::size_t fan_out = meta.dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseMatrix w(fan_in, fan_out);
        for (auto& v : w.values()) {
            v = rng.uniform(-limit, limit);
        }
        params.emplace_back("layer" + std::to_string(l) + ".weight", std::move(w));
        params.emplace_back("layer" + std::to_string(l) + ".bias", DenseMatrix(1, fan_out));
    }
    return {std::move(meta), std::move(params)};
}

ModelState make_gcn(std::span<const std::size_t> dims, std::uint64_t seed, double norm_exponent) {
    return init_model(ModelMeta{"gcn", {dims.begin(), dims.end()}, "relu", norm_exponent}, seed);
}

ModelState make_mlp(std::span<const std::size_t> dims, std::uint64_t seed) {
    return init_model(ModelMeta{"mlp", {dims.begin(), dims.end()}, "relu", 0.5}, seed);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[4] = {'A', 'F', 'M', 'S'};
constexpr std::uint8_t kVersion = 1;

class Writer {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        out_.insert(out_.end(), p, p + n);
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
    void need(std::size_t n) const {
        if (pos_ + n > in_.size()) {
            throw std::runtime_error("deserialize: truncated model data");
        }
    }
    std::uint8_t u8() {
        need(1);
        return in_[pos_++];
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
        }
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const auto n = u64();
        need(n);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    [[nodiscard]] bool done() const { return pos_ == in_.size(); }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> serialize(const ModelState& state) {
    Writer w;
    w.bytes(kMagic, sizeof(kMagic));
    w.u8(kVersion);
    const auto& meta = state.meta();
    w.str(meta.kind);
    w.u64(meta.dims.size());
    for (const auto d : meta.dims) {
        w.u64(d);
    }
    w.str(meta.activation);
    w.f64(meta.norm_exponent);
    w.u64(state.params().size());
    for (const auto& p : state.params()) {
        w.str(p.name);
        w.u64(p.value.rows());
        w.u64(p.value.cols());
        for (const double v : p.value.values()) {
            w.f64(v);
        }
    }
    return w.take();
}

ModelState deserialize(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    r.need(sizeof(kMagic));
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("deserialize: bad magic header");
    }
    for (std::size_t i = 0; i < sizeof(kMagic); ++i) {
        r.u8();
    }
    if (const auto version = r.u8(); version != kVersion) {
        throw std::runtime_error("deserialize: unsupported version " + std::to_string(version));
    }
    ModelMeta meta;
    meta.kind = r.str();
    meta.dims.resize(r.u64());
    for (auto& d : meta.dims) {
        d = r.u64();
    }
    meta.activation = r.str();
    meta.norm_exponent = r.f64();
    std::vector<Parameter> params;
    const auto count = r.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
        auto name = r.str();
        const auto rows = r.u64();
        const auto cols = r.u64();
        std::vector<double> values(rows * cols);
        for (auto& v : values) {
            v = r.f64();
        }
        params.emplace_back(std::move(name), DenseMatrix(rows, cols, std::move(values)));
    }
    if (!r.done()) {
        throw std::runtime_error("deserialize: trailing bytes after model data");
    }
    return {std::move(meta), std::move(params)};
}

void save_model(const ModelState& state, const std::filesystem::path& path) {
    const auto bytes = serialize(state);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("save_model: cannot open " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ModelState load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_model: cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

// ---------------------------------------------------------------------------
// Layers

DenseMatrix linear_forward(const DenseMatrix& x, const DenseMatrix& weight, const DenseMatrix& bias) {
    DenseMatrix out = matmul(x, weight);
    add_row_vector(out, bias);
    return out;
}

namespace {

void check_layers(const ModelState& params, const DenseMatrix& x, std::string_view what) {
    if (params.num_layers() == 0 || params.params().size() != 2 * params.num_layers()) {
        throw std::invalid_argument(std::string(what) + ": malformed parameter list");
    }
    if (x.cols() != params.meta().dims.front()) {
        std::ostringstream msg;
        msg << what << ": input width " << x.cols() << " does not match model input " << params.meta().dims.front();
        throw std::invalid_argument(msg.str());
    }
}

} // namespace

DenseMatrix gcn_forward(const SparseMatrix& adj_norm, const DenseMatrix& x, const ModelState& params,
                        GcnCache* cache) {
    check_layers(params, x, "gcn_forward");
    if (adj_norm.rows() != x.rows() || adj_norm.cols() != x.rows()) {
        throw std::invalid_argument("gcn_forward: adjacency does not match node count");
    }
    if (cache != nullptr) {
        cache->inputs.clear();
        cache->pre_act.clear();
    }
    DenseMatrix h = x;
    const std::size_t layers = params.num_layers();
    for (std::size_t l = 0; l < layers; ++l) {
        // A (H W) keeps the sparse product on the narrow side.
        DenseMatrix z = adj_norm.multiply(matmul(h, params.weight(l)));
        add_row_vector(z, params.bias(l));
        DenseMatrix next = l + 1 < layers ? relu(z) : z;
        if (cache != nullptr) {
            cache->inputs.push_back(std::move(h));
            cache->pre_act.push_back(std::move(z));
        }
        h = std::move(next);
    }
    return h;
}

void gcn_backward(const SparseMatrix& adj_norm, const GcnCache& cache, const DenseMatrix& grad_logits,
                  ModelState& params) {
    const std::size_t layers = params.num_layers();
    if (cache.inputs.size() != layers) {
        throw std::invalid_argument("gcn_backward: cache does not match model depth");
    }
    DenseMatrix grad = grad_logits;
    for (std::size_t l = layers; l-- > 0;) {
        if (l + 1 < layers) {
            grad = relu_backward(cache.pre_act[l], grad);
        }
        params.bias_grad(l) += column_sums(grad);
        const DenseMatrix propagated = adj_norm.transpose_multiply(grad);
        params.weight_grad(l) += matmul_tn(cache.inputs[l], propagated);
        if (l > 0) {
            grad = matmul_nt(propagated, params.weight(l));
        }
    }
}

DenseMatrix mlp_forward(const DenseMatrix& x, const ModelState& params, MlpCache* cache) {
    check_layers(params, x, "mlp_forward");
    if (cache != nullptr) {
        cache->inputs.clear();
        cache->pre_act.clear();
    }
    DenseMatrix h = x;
    const std::size_t layers = params.num_layers();
    for (std::size_t l = 0; l < layers; ++l) {
        DenseMatrix z = linear_forward(h, params.weight(l), params.bias(l));
        DenseMatrix next = l + 1 < layers ? relu(z) : z;
        if (cache != nullptr) {
            cache->inputs.push_back(std::move(h));
            cache->pre_act.push_back(std::move(z));
        }
        h = std::move(next);
    }
    return h;
}

DenseMatrix mlp_backward(const MlpCache& cache, const DenseMatrix& grad_out, ModelState& params,
                         bool want_input_grad) {
    const std::size_t layers = params.num_layers();
    if (cache.inputs.size() != layers) {
        throw std::invalid_argument("mlp_backward: cache does not match model depth");
    }
    DenseMatrix grad = grad_out;
    for (std::size_t l = layers; l-- > 0;) {
        if (l + 1 < layers) {
            grad = relu_backward(cache.pre_act[l], grad);
        }
        params.bias_grad(l) += column_sums(grad);
        params.weight_grad(l) += matmul_tn(cache.inputs[l], grad);
        if (l > 0 || want_input_grad) {
            grad = matmul_nt(grad, params.weight(l));
        }
    }
    return want_input_grad ? grad : DenseMatrix{};
}

// ---------------------------------------------------------------------------
// Losses

LossResult softmax_cross_entropy(const DenseMatrix& input, CrossEntropyInput kind, std::span<const int> labels,
                                 const std::vector<bool>& mask) {
    if (labels.size() != input.rows() || mask.size() != input.rows()) {
        throw std::invalid_argument("softmax_cross_entropy: labels/mask do not match rows");
    }
    std::size_t count = 0;
    for (const bool m : mask) {
        count += m ? 1 : 0;
    }
    if (count == 0) {
        throw std::invalid_argument("softmax_cross_entropy: empty mask");
    }
    constexpr double kClamp = 1e-12;
    const double scale = 1.0 / static_cast<double>(count);
    LossResult out{0.0, DenseMatrix(input.rows(), input.cols())};
    const DenseMatrix probs = kind == CrossEntropyInput::logits ? softmax_rows(input) : input;
    for (std::size_t i = 0; i < input.rows(); ++i) {
        if (!mask[i]) {
            continue;
        }
        const auto y = static_cast<std::size_t>(labels[i]);
        if (y >= input.cols()) {
            throw std::invalid_argument("softmax_cross_entropy: label out of range");
        }
        const double p = probs(i, y);
        if (kind == CrossEntropyInput::logits) {
            // log-softmax computed from the logits directly for accuracy
            const auto row = input.row(i);
            double peak = row[0];
            for (const double v : row) {
                peak = std::max(peak, v);
            }
            double total = 0.0;
            for (const double v : row) {
                total += std::exp(v - peak);
            }
            out.value -= scale * (row[y] - peak - std::log(total));
            for (std::size_t j = 0; j < input.cols(); ++j) {
                out.grad(i, j) = scale * (probs(i, j) - (j == y ? 1.0 : 0.0));
            }
        } else {
            const double clamped = std::max(p, kClamp);
            out.value -= scale * std::log(clamped);
            out.grad(i, y) = p > kClamp ? -scale / p : 0.0;
        }
    }
    return out;
}

LossResult frobenius_loss(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "frobenius_loss");
    DenseMatrix diff = a - b;
    const double norm = frobenius_norm(diff);
    if (norm == 0.0) {
        return {0.0, DenseMatrix(a.rows(), a.cols())};
    }
    diff *= 1.0 / norm;
    return {norm, std::move(diff)};
}

// ---------------------------------------------------------------------------

void AdamOptimizer::step(ModelState& model) {
    auto& params = model.params();
    if (first_.empty()) {
        for (const auto& p : params) {
            first_.emplace_back(p.value.rows(), p.value.cols());
            second_.emplace_back(p.value.rows(), p.value.cols());
        }
    }
    if (first_.size() != params.size()) {
        throw std::invalid_argument("AdamOptimizer::step: optimizer bound to a different model");
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const double correction1 = 1.0 - std::pow(config_.beta1, t);
    const double correction2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto value = params[i].value.values();
        auto grad = params[i].grad.values();
        auto m = first_[i].values();
        auto v = second_[i].values();
        if (m.size() != value.size()) {
            throw std::invalid_argument("AdamOptimizer::step: moment shape mismatch");
        }
        for (std::size_t k = 0; k < value.size(); ++k) {
            const double g = grad[k] + config_.weight_decay * value[k];
            m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g;
            v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g * g;
            const double m_hat = m[k] / correction1;
            const double v_hat = v[k] / correction2;
            value[k] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
            grad[k] = 0.0;
        }
    }
}

double masked_accuracy(const DenseMatrix& scores, std::span<const int> labels, const std::vector<bool>& mask) {
    std::size_t total = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        if (!mask[i]) {
            continue;
        }
        ++total;
        correct += static_cast<int>(argmax_row(scores, i)) == labels[i] ? 1 : 0;
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

} // namespace adafgl
