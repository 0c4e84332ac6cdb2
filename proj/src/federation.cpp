#include "adafgl/federation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "adafgl/log.hpp"
#include "adafgl/parallel.hpp"
#include "adafgl/rng.hpp"

namespace adafgl {

void validate(const FederationConfig& config) {
    if (config.rounds < 1) {
        throw std::invalid_argument("federation: rounds must be >= 1");
    }
    if (config.local_epochs < 0) {
        throw std::invalid_argument("federation: local_epochs must be >= 0");
    }
    if (!(config.participation > 0.0 && config.participation <= 1.0)) {
        throw std::invalid_argument("federation: participation must be in (0, 1]");
    }
    if (config.hidden == 0) {
        throw std::invalid_argument("federation: hidden width must be positive");
    }
    if (!(config.norm_exponent >= 0.0 && config.norm_exponent <= 1.0)) {
        throw std::invalid_argument("federation: normalization exponent must be in [0, 1]");
    }
    if (!(config.adam.lr >= 0.0) || !(config.adam.weight_decay >= 0.0)) {
        throw std::invalid_argument("federation: lr and weight decay must be non-negative");
    }
}

ClientWorker::ClientWorker(const ClientSubgraph& subgraph, ModelState initial, AdamConfig adam, double norm_exponent)
    : client_id(subgraph.client_id),
      sub(&subgraph),
      adj(normalized_adjacency(subgraph.graph, norm_exponent)),
      model(std::move(initial)),
      optimizer(adam),
      train_count(subgraph.graph.count(SplitRole::train)) {}

std::optional<double> local_train(ClientWorker& worker, int epochs) {
    if (worker.train_count == 0 || epochs <= 0) {
        return std::nullopt;
    }
    const Graph& g = worker.sub->graph;
    const auto train = g.mask(SplitRole::train);
    GcnCache cache;
    double loss = 0.0;
    for (int e = 0; e < epochs; ++e) {
        const DenseMatrix logits = gcn_forward(worker.adj, g.features(), worker.model, &cache);
        const auto ce = softmax_cross_entropy(logits, CrossEntropyInput::logits, g.labels(), train);
        gcn_backward(worker.adj, cache, ce.grad, worker.model);
        worker.optimizer.step(worker.model);
        loss = ce.value;
    }
    return loss;
}

std::vector<double> aggregation_weights(std::span<const std::size_t> data_sizes) {
    if (data_sizes.empty()) {
        throw std::invalid_argument("aggregation_weights: no models");
    }
    std::size_t total = 0;
    for (const auto n : data_sizes) {
        total += n;
    }
    std::vector<double> weights(data_sizes.size());
    if (total == 0) {
        log::warn("fedavg: every client reports zero data; using uniform weights");
        std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(data_sizes.size()));
        return weights;
    }
    for (std::size_t i = 0; i < data_sizes.size(); ++i) {
        weights[i] = static_cast<double>(data_sizes[i]) / static_cast<double>(total);
    }
    return weights;
}

ModelState fedavg_aggregate(std::span<const WeightedModel> models) {
    if (models.empty()) {
        throw std::invalid_argument("fedavg_aggregate: no models");
    }
    std::vector<std::size_t> sizes;
    for (const auto& m : models) {
        if (m.model == nullptr) {
            throw std::invalid_argument("fedavg_aggregate: null model");
        }
        if (!m.model->compatible(*models.front().model)) {
            throw std::invalid_argument("fedavg_aggregate: incompatible model metadata");
        }
        sizes.push_back(m.data_size);
    }
    const auto weights = aggregation_weights(sizes);
    ModelState out = *models.front().model;
    out.zero_grad();
    auto& params = out.params();
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto acc = params[p].value.values();
        const auto base = models.front().model->params()[p].value.values();
        for (std::size_t i = 1; i < models.size(); ++i) {
            const auto other = models[i].model->params()[p].value.values();
            for (std::size_t k = 0; k < acc.size(); ++k) {
                acc[k] += weights[i] * (other[k] - base[k]);
            }
        }
    }
    return out;
}

Evaluation evaluate_gcn(const ClientSubgraph& sub, const ModelState& model, double norm_exponent) {
    const Graph& g = sub.graph;
    const auto adj = normalized_adjacency(g, norm_exponent);
    Evaluation ev;
    ev.probs = softmax_rows(gcn_forward(adj, g.features(), model));
    const auto val = g.mask(SplitRole::val);
    const auto test = g.mask(SplitRole::test);
    ev.val_acc = masked_accuracy(ev.probs, g.labels(), val);
    ev.test_acc = masked_accuracy(ev.probs, g.labels(), test);
    ev.val_count = g.count(SplitRole::val);
    ev.test_count = g.count(SplitRole::test);
    return ev;
}

std::size_t participants_per_round(double participation, std::size_t num_clients) {
    const auto k = static_cast<std::size_t>(std::ceil(participation * static_cast<double>(num_clients) - 1e-12));
    return std::clamp<std::size_t>(k, 1, num_clients);
}

FederationResult run_federation(const FederatedTask& task, const FederationConfig& config) {
    validate(config);
    if (task.clients.empty()) {
        throw std::invalid_argument("run_federation: task has no clients");
    }
    const Graph& first = task.clients.front().graph;
    const std::vector<std::size_t> dims{first.feature_dim(), config.hidden,
                                        static_cast<std::size_t>(first.num_classes())};
    FederationResult result;
    result.global = make_gcn(dims, Rng::derive(config.seed, 3), config.norm_exponent);

    std::vector<ClientWorker> workers;
    workers.reserve(task.clients.size());
    for (const auto& sub : task.clients) {
        if (sub.graph.feature_dim() != dims[0] || sub.graph.num_classes() != first.num_classes()) {
            throw std::invalid_argument("run_federation: clients disagree on feature width or class count");
        }
        workers.emplace_back(sub, result.global, config.adam, config.norm_exponent);
    }
    for (const auto& w : workers) {
        if (w.train_count == 0) {
            std::ostringstream msg;
            msg << "client " << w.client_id << " has no train nodes and is skipped";
            log::warn(msg.str());
        }
    }

    const std::size_t n_clients = workers.size();
    const std::size_t per_round = participants_per_round(config.participation, n_clients);
    const std::size_t threads = resolve_threads(config.threads);
    Rng sampler(Rng::derive(config.seed, 4));
    for (int round = 0; round < config.rounds; ++round) {
        std::vector<std::size_t> chosen = per_round == n_clients
                                              ? std::vector<std::size_t>{}
                                              : sampler.sample_without_replacement(n_clients, per_round);
        if (per_round == n_clients) {
            for (std::size_t i = 0; i < n_clients; ++i) {
                chosen.push_back(i);
            }
        }
        std::sort(chosen.begin(), chosen.end());

        std::vector<std::optional<double>> losses(chosen.size());
        parallel_for(chosen.size(), threads, [&](std::size_t slot) {
            auto& worker = workers[chosen[slot]];
            worker.model.assign_values(result.global);
            losses[slot] = local_train(worker, config.local_epochs);
        });

        RoundReport report;
        report.round = round;
        std::vector<WeightedModel> contributions;
        for (const auto idx : chosen) {
            if (workers[idx].train_count == 0) {
                continue;
            }
            contributions.push_back({&workers[idx].model, workers[idx].train_count});
            report.participants.push_back(workers[idx].client_id);
        }
        if (!contributions.empty()) {
            std::vector<std::size_t> sizes;
            for (const auto& c : contributions) {
                sizes.push_back(c.data_size);
            }
            report.weights = aggregation_weights(sizes);
            result.global = fedavg_aggregate(contributions);
        }

        if (config.evaluate_rounds || round + 1 == config.rounds) {
            report.clients.resize(n_clients);
            parallel_for(n_clients, threads, [&](std::size_t i) {
                const auto ev = evaluate_gcn(*workers[i].sub, result.global, config.norm_exponent);
                auto& stats = report.clients[i];
                stats.client_id = workers[i].client_id;
                stats.val_acc = ev.val_acc;
                stats.test_acc = ev.test_acc;
                stats.val_count = ev.val_count;
                stats.test_count = ev.test_count;
            });
            for (std::size_t slot = 0; slot < chosen.size(); ++slot) {
                report.clients[chosen[slot]].participated = true;
                report.clients[chosen[slot]].train_loss = losses[slot];
            }
            double val_hits = 0.0;
            double test_hits = 0.0;
            std::size_t val_total = 0;
            std::size_t test_total = 0;
            for (const auto& s : report.clients) {
                val_hits += s.val_acc * static_cast<double>(s.val_count);
                test_hits += s.test_acc * static_cast<double>(s.test_count);
                val_total += s.val_count;
                test_total += s.test_count;
            }
            report.val_acc = val_total == 0 ? 0.0 : val_hits / static_cast<double>(val_total);
            report.test_acc = test_total == 0 ? 0.0 : test_hits / static_cast<double>(test_total);
        }
        result.reports.push_back(std::move(report));
    }
    return result;
}

} // namespace adafgl
