// Command-line front end: split, train and metrics subcommands.
//
// Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime error.

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "adafgl/experiment.hpp"
#include "adafgl/io.hpp"
#include "adafgl/log.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> method;
    std::optional<std::string> dataset;
    std::optional<std::string> task;
    std::optional<double> participation;
    std::optional<double> feature_missing;
    std::optional<double> edge_drop;
    std::optional<double> label_rate;
    std::optional<std::size_t> threads;
    bool quiet = false;
};

void add_common(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--config", o.config, "JSON experiment config");
    cmd.add_option("--seed", o.seed, "run a single seed (replaces the seed list)");
    cmd.add_option("--out", o.out, "output directory");
    cmd.add_option("--dataset", o.dataset, "graph directory");
    cmd.add_option("--threads", o.threads, "worker threads, 0 = all cores");
    cmd.add_flag("--quiet", o.quiet, "suppress warnings");
}

void add_train_flags(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--task", o.task, "task directory written by split");
    cmd.add_option("--method", o.method, "fedgcn or adafgl");
    cmd.add_option("--participation", o.participation, "fraction of clients sampled per round");
    cmd.add_option("--feature-missing", o.feature_missing, "fraction of unlabeled feature rows zeroed");
    cmd.add_option("--edge-drop", o.edge_drop, "fraction of client edges removed");
    cmd.add_option("--label-rate", o.label_rate, "train nodes as a fraction of client nodes");
}

adafgl::ExperimentConfig resolve(const Overrides& o) {
    adafgl::ExperimentConfig c = o.config.empty() ? adafgl::ExperimentConfig{} : adafgl::load_config(o.config);
    if (o.seed) {
        c.seeds = {*o.seed};
    }
    if (o.out) {
        c.out = *o.out;
    }
    if (o.dataset) {
        c.dataset = *o.dataset;
    }
    if (o.task) {
        c.task = *o.task;
    }
    if (o.method) {
        c.method = adafgl::parse_method(*o.method);
    }
    if (o.participation) {
        c.federation.participation = *o.participation;
    }
    if (o.feature_missing) {
        c.sparsity.feature_missing = *o.feature_missing;
    }
    if (o.edge_drop) {
        c.sparsity.edge_drop = *o.edge_drop;
    }
    if (o.label_rate) {
        c.sparsity.label_rate = *o.label_rate;
    }
    if (o.threads) {
        c.threads = *o.threads;
    }
    c.quiet = c.quiet || o.quiet;
    adafgl::validate(c);
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated graph learning simulator"};
    app.require_subcommand(1);

    Overrides split_opts;
    auto* split = app.add_subcommand("split", "generate a federated task from a graph");
    add_common(*split, split_opts);

    Overrides train_opts;
    auto* train = app.add_subcommand("train", "run FedGCN or AdaFGL over a task");
    add_common(*train, train_opts);
    add_train_flags(*train, train_opts);

    std::string metrics_path;
    std::optional<std::string> metrics_out;
    auto* metrics = app.add_subcommand("metrics", "homophily, label and degree statistics as CSV");
    metrics->add_option("path", metrics_path, "task or graph directory")->required();
    metrics->add_option("--out", metrics_out, "write metrics.csv here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitValidation;
    }

    try {
        if (split->parsed()) {
            const auto config = resolve(split_opts);
            adafgl::log::set_quiet(config.quiet);
            adafgl::cmd_split(config, std::cout);
        } else if (train->parsed()) {
            const auto config = resolve(train_opts);
            adafgl::log::set_quiet(config.quiet);
            adafgl::cmd_train(config, std::cout);
        } else if (metrics->parsed()) {
            const auto csv = adafgl::cmd_metrics(metrics_path);
            if (metrics_out) {
                std::filesystem::create_directories(*metrics_out);
                adafgl::io::write_text(std::filesystem::path(*metrics_out) / "metrics.csv", csv);
            } else {
                std::cout << csv;
            }
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
