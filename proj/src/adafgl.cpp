#include "adafgl/adafgl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "adafgl/log.hpp"
#include "adafgl/rng.hpp"

namespace adafgl {

void validate(const AdaFglConfig& config) {
    const auto unit = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument(std::string("adafgl: ") + name + " must be in [0, 1]");
        }
    };
    unit(config.alpha, "alpha");
    unit(config.beta, "beta");
    unit(config.kappa, "kappa");
    if (!(config.mask_prob > 0.0 && config.mask_prob <= 1.0)) {
        throw std::invalid_argument("adafgl: mask_prob must be in (0, 1]");
    }
    if (config.k < 1) {
        throw std::invalid_argument("adafgl: k must be >= 1");
    }
    if (config.layers < 0 || config.epochs < 0 || config.lp_steps < 0) {
        throw std::invalid_argument("adafgl: layers, epochs and lp_steps must be >= 0");
    }
    if (config.hidden == 0 || config.dense_cap == 0) {
        throw std::invalid_argument("adafgl: hidden width and dense cap must be positive");
    }
}

// ---------------------------------------------------------------------------
// Topology optimization

namespace {

/// s_i = 1 / sqrt(d_i), 0 for empty rows.
std::vector<double> inverse_sqrt(const std::vector<double>& degree) {
    std::vector<double> out(degree.size(), 0.0);
    for (std::size_t i = 0; i < degree.size(); ++i) {
        out[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;
    }
    return out;
}

void scale_symmetric(DenseMatrix& p, const std::vector<double>& s) {
    for (std::size_t i = 0; i < p.rows(); ++i) {
        auto row = p.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] *= s[i] * s[j];
        }
    }
}

} // namespace

DenseMatrix scale_propagation(DenseMatrix raw) {
    if (raw.rows() != raw.cols()) {
        throw std::invalid_argument("scale_propagation: matrix must be square");
    }
    std::vector<double> degree(raw.rows(), 0.0);
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        raw(i, i) = 0.0;
        for (const double v : raw.row(i)) {
            degree[i] += v;
        }
    }
    scale_symmetric(raw, inverse_sqrt(degree));
    return raw;
}

DenseMatrix blend_topology(const Graph& g, const DenseMatrix& extractor_probs, double alpha) {
    if (extractor_probs.rows() != g.num_nodes()) {
        throw std::invalid_argument("blend_topology: predictions do not match node count");
    }
    DenseMatrix p = matmul_nt(extractor_probs, extractor_probs);
    p *= 1.0 - alpha;
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
        for (const NodeId v : g.neighbors(u)) {
            p(u, v) += alpha;
        }
    }
    return scale_propagation(std::move(p));
}

TopologyResult optimize_topology(const ClientSubgraph& sub, const ModelState& extractor, double alpha,
                                 std::size_t dense_cap, double norm_exponent) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("optimize_topology: alpha must be in [0, 1]");
    }
    const Graph& g = sub.graph;
    if (g.num_nodes() > dense_cap) {
        std::ostringstream msg;
        msg << "client " << sub.client_id << " has " << g.num_nodes() << " nodes, above the dense cap of "
            << dense_cap << "; raise the cap or sparsify the propagation matrix";
        throw std::length_error(msg.str());
    }
    TopologyResult out;
    out.extractor_probs =
        softmax_rows(gcn_forward(normalized_adjacency(g, norm_exponent), g.features(), extractor));
    out.propagation = blend_topology(g, out.extractor_probs, alpha);
    return out;
}

DenseMatrix smoothing_operator(const DenseMatrix& propagation) {
    DenseMatrix op = propagation;
    std::vector<double> degree(op.rows(), 0.0);
    for (std::size_t i = 0; i < op.rows(); ++i) {
        op(i, i) += 1.0;
        for (const double v : op.row(i)) {
            degree[i] += v;
        }
    }
    scale_symmetric(op, inverse_sqrt(degree));
    return op;
}

std::vector<DenseMatrix> propagate_features(const DenseMatrix& op, const DenseMatrix& x, int k) {
    std::vector<DenseMatrix> stack;
    DenseMatrix current = x;
    for (int j = 0; j < k; ++j) {
        current = matmul(op, current);
        stack.push_back(current);
    }
    return stack;
}

// ---------------------------------------------------------------------------
// Knowledge smoothing

namespace {

void check_knowledge_shape(const DenseMatrix& op, const DenseMatrix& x, int k, const ModelState& theta) {
    if (k < 1) {
        throw std::invalid_argument("knowledge smoothing: k must be >= 1");
    }
    if (op.rows() != x.rows() || op.cols() != x.rows()) {
        throw std::invalid_argument("knowledge smoothing: operator does not match node count");
    }
    if (theta.num_layers() == 0 || theta.meta().dims.front() != static_cast<std::size_t>(k) * x.cols()) {
        throw std::invalid_argument("knowledge smoothing: first layer width must be k * feature_dim");
    }
}

} // namespace

KnowledgeEmbedding knowledge_smoothing(const DenseMatrix& op, const DenseMatrix& x, int k, const ModelState& theta) {
    check_knowledge_shape(op, x, k, theta);
    KnowledgeEmbedding out;
    out.stack = propagate_features(op, x, k);
    out.embedding = mlp_forward(hconcat(out.stack), theta);
    return out;
}

DenseMatrix knowledge_forward(const DenseMatrix& op, const DenseMatrix& x, int k, const ModelState& theta,
                              KnowledgeCache* cache) {
    check_knowledge_shape(op, x, k, theta);
    const std::size_t f = x.cols();
    const DenseMatrix& w = theta.weight(0);
    const auto ku = static_cast<std::size_t>(k);
    DenseMatrix acc = matmul(x, row_block(w, (ku - 1) * f, f));
    for (std::size_t j = ku - 1; j-- > 0;) {
        acc = matmul(op, acc);
        acc += matmul(x, row_block(w, j * f, f));
    }
    acc = matmul(op, acc);
    add_row_vector(acc, theta.bias(0));

    const std::size_t layers = theta.num_layers();
    if (cache != nullptr) {
        cache->first_pre = acc;
        cache->inputs.clear();
        cache->pre_act.clear();
    }
    DenseMatrix h = layers > 1 ? relu(acc) : std::move(acc);
    for (std::size_t l = 1; l < layers; ++l) {
        DenseMatrix z = linear_forward(h, theta.weight(l), theta.bias(l));
        DenseMatrix next = l + 1 < layers ? relu(z) : z;
        if (cache != nullptr) {
            cache->inputs.push_back(std::move(h));
            cache->pre_act.push_back(std::move(z));
        }
        h = std::move(next);
    }
    return h;
}

void knowledge_backward(const DenseMatrix& op, const DenseMatrix& x, int k, const KnowledgeCache& cache,
                        const DenseMatrix& grad_out, ModelState& theta) {
    const std::size_t layers = theta.num_layers();
    if (cache.inputs.size() + 1 != layers) {
        throw std::invalid_argument("knowledge_backward: cache does not match model depth");
    }
    DenseMatrix grad = grad_out;
    for (std::size_t l = layers; l-- > 1;) {
        if (l + 1 < layers) {
            grad = relu_backward(cache.pre_act[l - 1], grad);
        }
        theta.bias_grad(l) += column_sums(grad);
        theta.weight_grad(l) += matmul_tn(cache.inputs[l - 1], grad);
        grad = matmul_nt(grad, theta.weight(l));
    }
    if (layers > 1) {
        grad = relu_backward(cache.first_pre, grad);
    }
    theta.bias_grad(0) += column_sums(grad);
    const std::size_t f = x.cols();
    DenseMatrix& wgrad = theta.weight_grad(0);
    for (int j = 0; j < k; ++j) {
        grad = matmul_tn(op, grad);
        const DenseMatrix block = matmul_tn(x, grad);
        for (std::size_t r = 0; r < f; ++r) {
            const auto src = block.row(r);
            auto dst = wgrad.row(static_cast<std::size_t>(j) * f + r);
            for (std::size_t c = 0; c < src.size(); ++c) {
                dst[c] += src[c];
            }
        }
    }
}

DenseMatrix homo_forward(const DenseMatrix& knowledge, const DenseMatrix& extractor_probs) {
    require_same_shape(knowledge, extractor_probs, "homo_forward");
    DenseMatrix out = softmax_rows(knowledge);
    out += extractor_probs;
    out *= 0.5;
    return out;
}

LossResult knowledge_preserving_loss(const DenseMatrix& knowledge, const DenseMatrix& extractor_probs) {
    require_same_shape(knowledge, extractor_probs, "knowledge_preserving_loss");
    const DenseMatrix probs = softmax_rows(knowledge);
    auto loss = frobenius_loss(probs, extractor_probs);
    loss.grad = softmax_rows_backward(probs, loss.grad);
    return loss;
}

DenseMatrix adaptive_combine(const DenseMatrix& ho, const DenseMatrix& he, double hcs) {
    require_same_shape(ho, he, "adaptive_combine");
    if (!(hcs >= 0.0 && hcs <= 1.0)) {
        throw std::invalid_argument("adaptive_combine: hcs must be in [0, 1]");
    }
    DenseMatrix out(ho.rows(), ho.cols());
    const auto a = ho.values();
    const auto b = he.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = hcs * a[i] + (1.0 - hcs) * b[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Heterophilous branch

namespace {

constexpr double kNormFloor = 1e-12;

DenseMatrix negate(const DenseMatrix& a) {
    DenseMatrix out = a;
    out *= -1.0;
    return out;
}

} // namespace

ModelState make_message_layers(std::size_t classes, int layers, std::uint64_t seed) {
    if (layers < 0) {
        throw std::invalid_argument("make_message_layers: negative layer count");
    }
    ModelMeta meta{"message", std::vector<std::size_t>(static_cast<std::size_t>(layers) + 1, classes), "none", 0.5};
    if (layers == 0) {
        return {std::move(meta), {}};
    }
    return init_model(std::move(meta), seed);
}

DenseMatrix message_forward(const DenseMatrix& knowledge, const DenseMatrix& propagation, double beta,
                            const ModelState& theta_message, HeteroCache* cache) {
    const std::size_t n = knowledge.rows();
    if (propagation.rows() != n || propagation.cols() != n) {
        throw std::invalid_argument("message_forward: propagation matrix does not match node count");
    }
    if (cache != nullptr) {
        *cache = {};
    }
    DenseMatrix h = knowledge;
    DenseMatrix p_prev = propagation;
    for (std::size_t l = 0; l < theta_message.num_layers(); ++l) {
        DenseMatrix m = linear_forward(h, theta_message.weight(l), theta_message.bias(l));
        DenseMatrix norms(n, 1);
        DenseMatrix normalized = m;
        for (std::size_t i = 0; i < n; ++i) {
            double sq = 0.0;
            for (const double v : m.row(i)) {
                sq += v * v;
            }
            norms(i, 0) = std::sqrt(sq);
            const double scale = 1.0 / std::max(norms(i, 0), kNormFloor);
            for (double& v : normalized.row(i)) {
                v *= scale;
            }
        }
        DenseMatrix p = matmul_nt(normalized, normalized);
        p *= (1.0 - beta) / static_cast<double>(n);
        axpy(beta, p_prev, p);
        DenseMatrix next = m;
        next += matmul(relu(p), m);
        next -= matmul(relu(negate(p)), m);
        if (!all_finite(next) || !all_finite(p)) {
            throw std::runtime_error("message layer " + std::to_string(l + 1) + " produced non-finite values");
        }
        if (cache != nullptr) {
            cache->inputs.push_back(std::move(h));
            cache->messages.push_back(std::move(m));
            cache->normalized.push_back(std::move(normalized));
            cache->norms.push_back(std::move(norms));
            cache->propagation.push_back(p);
        }
        p_prev = std::move(p);
        h = std::move(next);
    }
    return h;
}

DenseMatrix message_backward(const HeteroCache& cache, double beta, const DenseMatrix& grad_out,
                             ModelState& theta_message) {
    const std::size_t layers = theta_message.num_layers();
    if (cache.messages.size() != layers) {
        throw std::invalid_argument("message_backward: cache does not match layer count");
    }
    DenseMatrix grad = grad_out;
    DenseMatrix grad_p_carry;
    for (std::size_t l = layers; l-- > 0;) {
        const DenseMatrix& m = cache.messages[l];
        const DenseMatrix& p = cache.propagation[l];
        const DenseMatrix& normalized = cache.normalized[l];
        // relu(P) - relu(-P) = P, so H = M + P M.
        DenseMatrix grad_m = grad;
        grad_m += matmul_tn(p, grad);
        DenseMatrix grad_p = matmul_nt(grad, m);
        if (!grad_p_carry.empty()) {
            grad_p += grad_p_carry;
        }
        DenseMatrix grad_n = matmul(grad_p + transpose(grad_p), normalized);
        grad_n *= (1.0 - beta) / static_cast<double>(m.rows());
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const double norm = cache.norms[l](i, 0);
            const auto gn = grad_n.row(i);
            auto gm = grad_m.row(i);
            if (norm <= kNormFloor) {
                for (std::size_t c = 0; c < gm.size(); ++c) {
                    gm[c] += gn[c] / kNormFloor;
                }
                continue;
            }
            const auto nrow = normalized.row(i);
            double dot = 0.0;
            for (std::size_t c = 0; c < gm.size(); ++c) {
                dot += nrow[c] * gn[c];
            }
            for (std::size_t c = 0; c < gm.size(); ++c) {
                gm[c] += (gn[c] - nrow[c] * dot) / norm;
            }
        }
        grad_p *= beta;
        grad_p_carry = std::move(grad_p);
        theta_message.bias_grad(l) += column_sums(grad_m);
        theta_message.weight_grad(l) += matmul_tn(cache.inputs[l], grad_m);
        grad = matmul_nt(grad_m, theta_message.weight(l));
    }
    return grad;
}

DenseMatrix hetero_combine(const DenseMatrix& feature, const DenseMatrix& knowledge, const DenseMatrix& message) {
    require_same_shape(feature, knowledge, "hetero_combine");
    require_same_shape(feature, message, "hetero_combine");
    DenseMatrix out = softmax_rows(feature);
    out += softmax_rows(knowledge);
    out += softmax_rows(message);
    out *= 1.0 / 3.0;
    return out;
}

// ---------------------------------------------------------------------------
// HCS

HcsReport compute_hcs(const Graph& g, double kappa, int steps, double mask_prob, std::uint64_t seed) {
    if (!(kappa >= 0.0 && kappa <= 1.0) || steps < 0 || !(mask_prob > 0.0 && mask_prob <= 1.0)) {
        throw std::invalid_argument("compute_hcs: kappa in [0,1], steps >= 0 and mask_prob in (0,1] required");
    }
    HcsReport report;
    const auto train = g.nodes_with(SplitRole::train);
    report.train_nodes = train.size();
    if (train.size() < 2) {
        log::warn("HCS needs at least 2 train nodes; using 0.5");
        return report;
    }
    report.informative = true;
    report.masked = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(mask_prob * static_cast<double>(train.size()))));
    Rng rng(seed);
    const auto picks = rng.sample_without_replacement(train.size(), report.masked);
    std::vector<bool> known = g.mask(SplitRole::train);
    std::vector<bool> masked(g.num_nodes(), false);
    for (const auto idx : picks) {
        known[train[idx]] = false;
        masked[train[idx]] = true;
    }
    const auto init = LabelDistribution::from_labels(g.labels(), known, g.num_classes());
    for (int s = 0; s <= steps; ++s) {
        const auto y = label_propagation(g, init, kappa, s);
        report.accuracy_trace.push_back(masked_accuracy(y.matrix(), g.labels(), masked));
    }
    report.hcs = report.accuracy_trace.back();
    return report;
}

// ---------------------------------------------------------------------------
// Step 2

Step2Model Step2Model::create(std::size_t feature_dim, std::size_t classes, const AdaFglConfig& config) {
    const std::vector<std::size_t> knowledge_dims{static_cast<std::size_t>(config.k) * feature_dim, config.hidden,
                                                  classes};
    const std::vector<std::size_t> feature_dims{feature_dim, config.hidden, classes};
    return {make_mlp(knowledge_dims, Rng::derive(config.seed, 10)), make_mlp(feature_dims, Rng::derive(config.seed, 11)),
            make_message_layers(classes, config.layers, Rng::derive(config.seed, 12))};
}

void Step2Model::zero_grad() {
    knowledge.zero_grad();
    feature.zero_grad();
    message.zero_grad();
}

Step2Output Step2Model::run(const Step2Context& ctx, bool backward) {
    KnowledgeCache kcache;
    MlpCache fcache;
    HeteroCache hcache;
    const DenseMatrix hk = knowledge_forward(ctx.op, ctx.features, ctx.k, knowledge, backward ? &kcache : nullptr);
    const DenseMatrix hf = mlp_forward(ctx.features, feature, backward ? &fcache : nullptr);
    const DenseMatrix hm = message_forward(hk, ctx.propagation, ctx.beta, message, backward ? &hcache : nullptr);
    const DenseMatrix sk = softmax_rows(hk);
    const DenseMatrix sf = softmax_rows(hf);
    const DenseMatrix sm = softmax_rows(hm);

    Step2Output out;
    out.homo = sk + ctx.extractor_probs;
    out.homo *= 0.5;
    out.hetero = sf + sk;
    out.hetero += sm;
    out.hetero *= 1.0 / 3.0;
    out.prediction = adaptive_combine(out.homo, out.hetero, ctx.hcs);

    const bool supervised = std::find(ctx.train_mask.begin(), ctx.train_mask.end(), true) != ctx.train_mask.end();
    LossResult ce{0.0, DenseMatrix(out.prediction.rows(), out.prediction.cols())};
    if (supervised) {
        ce = softmax_cross_entropy(out.prediction, CrossEntropyInput::probabilities, ctx.labels, ctx.train_mask);
    }
    const LossResult kl = frobenius_loss(sk, ctx.extractor_probs);
    out.ce = ce.value;
    out.knowledge = kl.value;
    if (!backward) {
        return out;
    }

    const double h = ctx.hcs;
    const double he_share = (1.0 - h) / 3.0;
    DenseMatrix grad_sk = (h / 2.0 + he_share) * ce.grad;
    axpy(ctx.knowledge_scale, kl.grad, grad_sk);
    DenseMatrix grad_hk = softmax_rows_backward(sk, grad_sk);

    const DenseMatrix grad_hf = softmax_rows_backward(sf, he_share * ce.grad);
    mlp_backward(fcache, grad_hf, feature);

    const DenseMatrix grad_hm = softmax_rows_backward(sm, he_share * ce.grad);
    grad_hk += message_backward(hcache, ctx.beta, grad_hm, message);

    knowledge_backward(ctx.op, ctx.features, ctx.k, kcache, grad_hk, knowledge);
    return out;
}

Step2Context make_step2_context(const ClientSubgraph& sub, const TopologyResult& topology, double hcs,
                                const AdaFglConfig& config) {
    const Graph& g = sub.graph;
    Step2Context ctx;
    ctx.features = g.features();
    ctx.op = smoothing_operator(topology.propagation);
    ctx.propagation = topology.propagation;
    ctx.extractor_probs = topology.extractor_probs;
    ctx.labels = g.labels();
    ctx.train_mask = g.mask(SplitRole::train);
    ctx.hcs = hcs;
    ctx.beta = config.beta;
    ctx.k = config.k;
    ctx.knowledge_scale = config.knowledge_scale_hcs ? hcs : 1.0;
    return ctx;
}

double mean_total_variation(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "mean_total_variation");
    if (a.rows() == 0) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto ra = a.row(i);
        const auto rb = b.row(i);
        double row = 0.0;
        for (std::size_t j = 0; j < ra.size(); ++j) {
            row += std::abs(ra[j] - rb[j]);
        }
        total += 0.5 * row;
    }
    return total / static_cast<double>(a.rows());
}

Step2Result step2_train(const ClientSubgraph& sub, const ModelState& extractor, const AdaFglConfig& config) {
    validate(config);
    const Graph& g = sub.graph;
    const auto topology = optimize_topology(sub, extractor, config.alpha, config.dense_cap, config.norm_exponent);

    Step2Result result;
    result.client_id = sub.client_id;
    result.hcs = compute_hcs(g, config.kappa, config.lp_steps, config.mask_prob, Rng::derive(config.seed, 13));
    const auto ctx = make_step2_context(sub, topology, result.hcs.hcs, config);

    const auto train = g.mask(SplitRole::train);
    const auto val = g.mask(SplitRole::val);
    const auto test = g.mask(SplitRole::test);
    result.val_count = g.count(SplitRole::val);
    result.test_count = g.count(SplitRole::test);
    result.extractor_val_acc = masked_accuracy(topology.extractor_probs, g.labels(), val);
    result.extractor_test_acc = masked_accuracy(topology.extractor_probs, g.labels(), test);

    Step2Model model = Step2Model::create(g.feature_dim(), static_cast<std::size_t>(g.num_classes()), config);
    AdamOptimizer opt_knowledge(config.adam);
    AdamOptimizer opt_feature(config.adam);
    AdamOptimizer opt_message(config.adam);
    const bool can_train = g.count(SplitRole::train) > 0;
    const int epochs = can_train ? config.epochs : 0;

    double best_val = -1.0;
    for (int e = 0; e <= epochs; ++e) {
        const bool update = e < epochs;
        const auto out = model.run(ctx, update);
        EpochTrace entry{e, out.loss(ctx.knowledge_scale), masked_accuracy(out.prediction, g.labels(), train),
                         masked_accuracy(out.prediction, g.labels(), val),
                         masked_accuracy(out.prediction, g.labels(), test)};
        const bool better = result.val_count == 0 ? true : entry.val_acc > best_val;
        if (better) {
            best_val = entry.val_acc;
            result.best_epoch = e;
            result.val_acc = entry.val_acc;
            result.test_acc = entry.test_acc;
            result.tv_to_homo = mean_total_variation(out.prediction, out.homo);
        }
        result.trace.push_back(entry);
        if (update) {
            opt_knowledge.step(model.knowledge);
            opt_feature.step(model.feature);
            opt_message.step(model.message);
        }
    }
    return result;
}

} // namespace adafgl
