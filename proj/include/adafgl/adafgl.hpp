#pragma once

#include <cstdint>
#include <vector>

#include "adafgl/federation.hpp"
#include "adafgl/graph.hpp"
#include "adafgl/nn.hpp"
#include "adafgl/partition.hpp"

namespace adafgl {

struct AdaFglConfig {
    double alpha = 0.5; // weight of the original adjacency in P
    double beta = 0.5;  // carry-over of the previous propagation matrix per message layer
    int k = 3;          // knowledge smoothing steps
    int layers = 2;     // message layers L
    int epochs = 100;
    std::size_t hidden = 64;
    AdamConfig adam;
    double kappa = 0.5;
    int lp_steps = 5;
    double mask_prob = 0.5;
    /// Multiply the knowledge loss by HCS instead of 1.
    bool knowledge_scale_hcs = false;
    std::size_t dense_cap = 8000;
    double norm_exponent = 0.5; // extractor GCN operator
    std::uint64_t seed = 0;
};

void validate(const AdaFglConfig& config);

// ---------------------------------------------------------------------------
// Topology optimization

struct TopologyResult {
    DenseMatrix propagation;     // P~: symmetric, zero diagonal, non-negative
    DenseMatrix extractor_probs; // P^ = softmax of the extractor logits
};

/// Zeroes the diagonal of P and returns D^(-1/2) P D^(-1/2) with D the row
/// sums. Rows without weight stay zero. The result is exactly symmetric when P is.
DenseMatrix scale_propagation(DenseMatrix raw);

/// P = alpha A + (1 - alpha) P^ P^T followed by scale_propagation.
DenseMatrix blend_topology(const Graph& g, const DenseMatrix& extractor_probs, double alpha);

/// Throws std::length_error when the client exceeds the dense cap.
TopologyResult optimize_topology(const ClientSubgraph& sub, const ModelState& extractor, double alpha,
                                 std::size_t dense_cap = 8000, double norm_exponent = 0.5);

/// Symmetric normalization of P~ + I.
DenseMatrix smoothing_operator(const DenseMatrix& propagation);

/// [S X, S^2 X, ..., S^k X].
std::vector<DenseMatrix> propagate_features(const DenseMatrix& op, const DenseMatrix& x, int k);

// ---------------------------------------------------------------------------
// Knowledge smoothing: H~ = MLP([S X || ... || S^k X])

struct KnowledgeEmbedding {
    DenseMatrix embedding; // H~, n x |Y|
    std::vector<DenseMatrix> stack;
};

/// Reference path that materializes the propagated stack.
KnowledgeEmbedding knowledge_smoothing(const DenseMatrix& op, const DenseMatrix& x, int k, const ModelState& theta);

struct KnowledgeCache {
    DenseMatrix first_pre;          // pre-activation of the first layer
    std::vector<DenseMatrix> inputs; // inputs of layers 1.. (after the first)
    std::vector<DenseMatrix> pre_act;
};

/// Same result as knowledge_smoothing without forming the stack: the first
/// layer is evaluated as S (X W_1 + S (X W_2 + ... S X W_k)).
DenseMatrix knowledge_forward(const DenseMatrix& op, const DenseMatrix& x, int k, const ModelState& theta,
                              KnowledgeCache* cache = nullptr);
void knowledge_backward(const DenseMatrix& op, const DenseMatrix& x, int k, const KnowledgeCache& cache,
                        const DenseMatrix& grad_out, ModelState& theta);

/// (softmax(H~) + P^) / 2
DenseMatrix homo_forward(const DenseMatrix& knowledge, const DenseMatrix& extractor_probs);

/// ||softmax(H~) - P^||_F with the gradient taken with respect to H~.
LossResult knowledge_preserving_loss(const DenseMatrix& knowledge, const DenseMatrix& extractor_probs);

/// hcs * ho + (1 - hcs) * he
DenseMatrix adaptive_combine(const DenseMatrix& ho, const DenseMatrix& he, double hcs);

// ---------------------------------------------------------------------------
// Heterophilous branch

struct HeteroCache {
    std::vector<DenseMatrix> inputs;     // H_m^(l-1)
    std::vector<DenseMatrix> messages;   // M_l = H_m^(l-1) W_l + b_l
    std::vector<DenseMatrix> normalized; // row-normalized M_l
    std::vector<DenseMatrix> norms;      // n x 1 row norms of M_l
    std::vector<DenseMatrix> propagation; // P~^(l)
};

/// Message layers on top of H~: M_l = linear(H_m^(l-1)); P~^(l) = beta P~^(l-1)
/// + (1 - beta) N_l N_l^T / n with N_l the row-normalized M_l; then
/// H_m^(l) = M_l + relu(P~^(l)) M_l - relu(-P~^(l)) M_l. Returns H_m^(L).
DenseMatrix message_forward(const DenseMatrix& knowledge, const DenseMatrix& propagation, double beta,
                            const ModelState& theta_message, HeteroCache* cache = nullptr);
/// Accumulates parameter gradients and returns dL/dH~.
DenseMatrix message_backward(const HeteroCache& cache, double beta, const DenseMatrix& grad_out,
                             ModelState& theta_message);

/// Message parameters for `layers` linear maps of width `classes`.
ModelState make_message_layers(std::size_t classes, int layers, std::uint64_t seed);

/// (softmax(H_f) + softmax(H~) + softmax(H_m)) / 3
DenseMatrix hetero_combine(const DenseMatrix& feature, const DenseMatrix& knowledge, const DenseMatrix& message);

// ---------------------------------------------------------------------------
// Homophily confidence score

struct HcsReport {
    double hcs = 0.5;
    std::size_t masked = 0;
    std::size_t train_nodes = 0;
    /// Masked-node accuracy after 0, 1, ..., K propagation steps.
    std::vector<double> accuracy_trace;
    bool informative = false; // false when the client had < 2 train nodes
};

HcsReport compute_hcs(const Graph& g, double kappa, int steps, double mask_prob, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Step 2

/// Per-client inputs that stay fixed while Step 2 trains.
struct Step2Context {
    DenseMatrix features;
    DenseMatrix op;          // smoothing operator over P~
    DenseMatrix propagation; // P~
    DenseMatrix extractor_probs;
    std::vector<int> labels;
    std::vector<bool> train_mask;
    double hcs = 0.5;
    double beta = 0.5;
    int k = 3;
    double knowledge_scale = 1.0;
};

struct Step2Output {
    DenseMatrix prediction; // Y^
    DenseMatrix homo;       // Y^_ho
    DenseMatrix hetero;     // Y^_he
    double ce = 0.0;
    double knowledge = 0.0;
    [[nodiscard]] double loss(double knowledge_scale) const { return ce + knowledge_scale * knowledge; }
};

/// Trainable parameters of one client's personalized model.
struct Step2Model {
    ModelState knowledge; // MLP over the propagated stack
    ModelState feature;   // MLP over raw features
    ModelState message;   // message layers

    static Step2Model create(std::size_t feature_dim, std::size_t classes, const AdaFglConfig& config);
    void zero_grad();
    /// Forward pass; with `backward` set, also accumulates all gradients of
    /// CE + knowledge_scale * L_knowledge.
    Step2Output run(const Step2Context& ctx, bool backward);
};

struct EpochTrace {
    int epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
};

struct Step2Result {
    int client_id = 0;
    HcsReport hcs;
    double extractor_val_acc = 0.0;
    double extractor_test_acc = 0.0;
    double val_acc = 0.0;  // at the best validation epoch
    double test_acc = 0.0; // at the best validation epoch
    int best_epoch = 0;
    std::size_t val_count = 0;
    std::size_t test_count = 0;
    std::vector<EpochTrace> trace; // entry e is evaluated after e updates
    /// Mean total-variation distance between Y^ and Y^_ho at the best epoch.
    double tv_to_homo = 0.0;
};

Step2Context make_step2_context(const ClientSubgraph& sub, const TopologyResult& topology, double hcs,
                                const AdaFglConfig& config);

/// Step 2 for one client against a frozen extractor.
Step2Result step2_train(const ClientSubgraph& sub, const ModelState& extractor, const AdaFglConfig& config);

/// Mean over rows of 0.5 * sum_j |a_ij - b_ij|.
double mean_total_variation(const DenseMatrix& a, const DenseMatrix& b);

} // namespace adafgl
