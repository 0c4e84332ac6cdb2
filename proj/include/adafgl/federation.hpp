#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "adafgl/nn.hpp"
#include "adafgl/partition.hpp"

namespace adafgl {

struct FederationConfig {
    int rounds = 100;
    int local_epochs = 5;
    double participation = 1.0; // fraction c of clients sampled per round
    std::size_t hidden = 64;
    double norm_exponent = 0.5;
    AdamConfig adam;
    std::uint64_t seed = 0;
    std::size_t threads = 1; // 0 = hardware concurrency
    bool evaluate_rounds = true;
};

/// Throws std::invalid_argument on out-of-range settings.
void validate(const FederationConfig& config);

/// Per-client training state. The subgraph is borrowed and must outlive the
/// worker.
struct ClientWorker {
    int client_id = 0;
    const ClientSubgraph* sub = nullptr;
    SparseMatrix adj;
    ModelState model;
    AdamOptimizer optimizer;
    std::size_t train_count = 0;

    ClientWorker(const ClientSubgraph& subgraph, ModelState initial, AdamConfig adam, double norm_exponent);
};

/// Full-batch gradient steps of cross-entropy over the client's train nodes.
/// Returns the loss of the last step, or nullopt when the client has no train
/// nodes (nothing is changed) or epochs is 0.
std::optional<double> local_train(ClientWorker& worker, int epochs);

struct WeightedModel {
    const ModelState* model = nullptr;
    std::size_t data_size = 0;
};

/// n_i / sum n_i; uniform with a warning when every n_i is 0.
std::vector<double> aggregation_weights(std::span<const std::size_t> data_sizes);

/// Parameter-wise weighted mean, accumulated as
///   w_0 + sum_{i>0} p_i (w_i - w_0)
/// so that identical inputs reproduce their value exactly.
ModelState fedavg_aggregate(std::span<const WeightedModel> models);

struct Evaluation {
    DenseMatrix probs;
    double val_acc = 0.0;
    double test_acc = 0.0;
    std::size_t val_count = 0;
    std::size_t test_count = 0;
};

/// Softmax predictions of a GCN on one client and its masked accuracies.
Evaluation evaluate_gcn(const ClientSubgraph& sub, const ModelState& model, double norm_exponent = 0.5);

struct ClientRoundStats {
    int client_id = 0;
    bool participated = false;
    std::optional<double> train_loss;
    double val_acc = 0.0;
    double test_acc = 0.0;
    std::size_t val_count = 0;
    std::size_t test_count = 0;
};

struct RoundReport {
    int round = 0;
    std::vector<int> participants;
    std::vector<double> weights; // aggregation weights, aligned with participants
    std::vector<ClientRoundStats> clients;
    /// Node-weighted accuracy of the aggregated model over all clients.
    double val_acc = 0.0;
    double test_acc = 0.0;
};

struct FederationResult {
    ModelState global; // federated knowledge extractor
    std::vector<RoundReport> reports;
};

/// Number of clients sampled per round: ceil(c * N) clamped to [1, N].
std::size_t participants_per_round(double participation, std::size_t num_clients);

/// FedAvg over the task's clients with a GCN of widths f -> hidden -> |Y|.
/// Client optimizer state persists across rounds; each round participants
/// start from the broadcast global model.
FederationResult run_federation(const FederatedTask& task, const FederationConfig& config);

} // namespace adafgl
