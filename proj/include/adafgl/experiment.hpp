#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adafgl/adafgl.hpp"
#include "adafgl/federation.hpp"
#include "adafgl/partition.hpp"

namespace adafgl {

/// Invalid configuration or flag value. The CLI maps it to exit code 1.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Method { fedgcn, adafgl };
std::string to_string(Method method);
Method parse_method(std::string_view text);

struct ExperimentConfig {
    std::string dataset; // graph directory, used by split and by train without a task
    std::string task;    // task directory written by split
    std::string out = "out";
    Method method = Method::adafgl;

    SplitStrategy strategy = SplitStrategy::community;
    std::size_t num_clients = 10;
    double p_s = 0.5;
    double ratio = 0.5;
    std::uint64_t split_seed = 0;
    std::array<double, 3> mask_ratios{0.2, 0.4, 0.4}; // used when the dataset has no masks

    FederationConfig federation;
    AdaFglConfig adafgl;
    SparsityConfig sparsity;

    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::size_t threads = 0; // 0 = hardware concurrency
    bool quiet = false;
};

/// Parses a config object. Unknown keys and out-of-range values raise
/// ConfigError. Missing keys keep their defaults.
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Effective configuration as JSON. Parsing the text back and serializing
/// again reproduces it exactly.
std::string config_to_json(const ExperimentConfig& config);
/// Range checks shared by every subcommand.
void validate(const ExperimentConfig& config);

struct ClientOutcome {
    int client_id = 0;
    std::size_t test_count = 0;
    std::optional<double> edge_homophily;
    double fedgcn_test_acc = 0.0;
    std::optional<Step2Result> step2;
};

struct SeedOutcome {
    std::uint64_t seed = 0;
    double fedgcn_test_acc = 0.0; // node-weighted over clients
    std::optional<double> adafgl_test_acc;
    std::vector<RoundReport> rounds;
    std::vector<ClientOutcome> clients;
};

struct TrainSummary {
    std::vector<SeedOutcome> runs;
    double fedgcn_mean = 0.0;
    double fedgcn_std = 0.0;
    std::optional<double> adafgl_mean;
    std::optional<double> adafgl_std;
};

/// Builds the federated task described by the config from its dataset.
FederatedTask build_task(const ExperimentConfig& config);

/// One seed of FedGCN and, for the adafgl method, Step 2 on every client.
SeedOutcome run_seed(const FederatedTask& task, const ExperimentConfig& config, std::uint64_t seed,
                     std::size_t threads);

/// Population mean and standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

/// Writes the task and the effective config to config.out and prints a
/// per-client table to `report`.
FederatedTask cmd_split(const ExperimentConfig& config, std::ostream& report);

/// Runs every seed and writes results.json, curves.csv, clients.csv and
/// config.json into config.out. Completed seeds are flushed when a later seed
/// fails.
TrainSummary cmd_train(const ExperimentConfig& config, std::ostream& report);

/// Per-client statistics of a task directory, or one row for a graph
/// directory, as CSV.
std::string cmd_metrics(const std::filesystem::path& path);

/// JSON text of results.json for a summary. The embedded config omits out,
/// threads and quiet.
std::string results_json(const ExperimentConfig& config, const TrainSummary& summary,
                         const std::string& error = {});

} // namespace adafgl
