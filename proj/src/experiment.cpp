#include "adafgl/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "adafgl/io.hpp"
#include "adafgl/log.hpp"
#include "adafgl/parallel.hpp"
#include "adafgl/rng.hpp"

namespace adafgl {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string to_string(Method method) { return method == Method::fedgcn ? "fedgcn" : "adafgl"; }

Method parse_method(std::string_view text) {
    if (text == "fedgcn") {
        return Method::fedgcn;
    }
    if (text == "adafgl") {
        return Method::adafgl;
    }
    throw ConfigError("unknown method '" + std::string(text) + "' (expected fedgcn or adafgl)");
}

// ---------------------------------------------------------------------------
// Config

namespace {

class Reader {
public:
    Reader(const json& object, std::string prefix) : object_(object), prefix_(std::move(prefix)) {
        if (!object_.is_object()) {
            throw ConfigError("'" + name() + "' must be an object");
        }
    }

    template <class Fn>
    void each(Fn&& fn) const {
        for (const auto& [key, value] : object_.items()) {
            if (!fn(key, value)) {
                throw ConfigError("unknown config key '" + path(key) + "'");
            }
        }
    }

    [[nodiscard]] std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }
    [[nodiscard]] std::string name() const { return prefix_.empty() ? "config" : prefix_; }

    [[nodiscard]] double number(const std::string& key, const json& v) const {
        if (!v.is_number()) {
            throw ConfigError("'" + path(key) + "' must be a number");
        }
        return v.get<double>();
    }
    [[nodiscard]] std::uint64_t count(const std::string& key, const json& v) const {
        if (!v.is_number_unsigned()) {
            throw ConfigError("'" + path(key) + "' must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }
    [[nodiscard]] int integer(const std::string& key, const json& v) const {
        if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<long long>() > 1'000'000'000) {
            throw ConfigError("'" + path(key) + "' must be a non-negative integer");
        }
        return v.get<int>();
    }
    [[nodiscard]] std::string text(const std::string& key, const json& v) const {
        if (!v.is_string()) {
            throw ConfigError("'" + path(key) + "' must be a string");
        }
        return v.get<std::string>();
    }
    [[nodiscard]] bool flag(const std::string& key, const json& v) const {
        if (!v.is_boolean()) {
            throw ConfigError("'" + path(key) + "' must be true or false");
        }
        return v.get<bool>();
    }

private:
    const json& object_;
    std::string prefix_;
};

void read_split(const Reader& r, const json& v, ExperimentConfig& c) {
    const Reader s(v, r.path("split"));
    s.each([&](const std::string& key, const json& value) {
        if (key == "strategy") {
            try {
                c.strategy = parse_strategy(s.text(key, value));
            } catch (const ConfigError&) {
                throw;
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        } else if (key == "num_clients") {
            c.num_clients = s.count(key, value);
        } else if (key == "p_s") {
            c.p_s = s.number(key, value);
        } else if (key == "ratio") {
            c.ratio = s.number(key, value);
        } else if (key == "seed") {
            c.split_seed = s.count(key, value);
        } else if (key == "mask_ratios") {
            if (!value.is_array() || value.size() != 3) {
                throw ConfigError("'" + s.path(key) + "' must be [train, val, test]");
            }
            for (std::size_t i = 0; i < 3; ++i) {
                c.mask_ratios[i] = s.number(key, value[i]);
            }
        } else {
            return false;
        }
        return true;
    });
}

void read_model(const Reader& r, const json& v, ExperimentConfig& c) {
    const Reader s(v, r.path("model"));
    s.each([&](const std::string& key, const json& value) {
        if (key == "hidden") {
            c.federation.hidden = s.count(key, value);
            c.adafgl.hidden = c.federation.hidden;
        } else if (key == "lr") {
            c.federation.adam.lr = s.number(key, value);
            c.adafgl.adam.lr = c.federation.adam.lr;
        } else if (key == "weight_decay") {
            c.federation.adam.weight_decay = s.number(key, value);
            c.adafgl.adam.weight_decay = c.federation.adam.weight_decay;
        } else if (key == "norm_exponent") {
            c.federation.norm_exponent = s.number(key, value);
            c.adafgl.norm_exponent = c.federation.norm_exponent;
        } else {
            return false;
        }
        return true;
    });
}

void read_federation(const Reader& r, const json& v, ExperimentConfig& c) {
    const Reader s(v, r.path("federation"));
    s.each([&](const std::string& key, const json& value) {
        if (key == "rounds") {
            c.federation.rounds = s.integer(key, value);
        } else if (key == "local_epochs") {
            c.federation.local_epochs = s.integer(key, value);
        } else if (key == "participation") {
            c.federation.participation = s.number(key, value);
        } else {
            return false;
        }
        return true;
    });
}

void read_adafgl(const Reader& r, const json& v, ExperimentConfig& c) {
    const Reader s(v, r.path("adafgl"));
    auto& a = c.adafgl;
    s.each([&](const std::string& key, const json& value) {
        if (key == "alpha") {
            a.alpha = s.number(key, value);
        } else if (key == "beta") {
            a.beta = s.number(key, value);
        } else if (key == "k") {
            a.k = s.integer(key, value);
        } else if (key == "layers") {
            a.layers = s.integer(key, value);
        } else if (key == "epochs") {
            a.epochs = s.integer(key, value);
        } else if (key == "kappa") {
            a.kappa = s.number(key, value);
        } else if (key == "lp_steps") {
            a.lp_steps = s.integer(key, value);
        } else if (key == "mask_prob") {
            a.mask_prob = s.number(key, value);
        } else if (key == "knowledge_scale") {
            const auto mode = s.text(key, value);
            if (mode != "one" && mode != "hcs") {
                throw ConfigError("'" + s.path(key) + "' must be \"one\" or \"hcs\"");
            }
            a.knowledge_scale_hcs = mode == "hcs";
        } else if (key == "dense_cap") {
            a.dense_cap = s.count(key, value);
        } else {
            return false;
        }
        return true;
    });
}

void read_sparsity(const Reader& r, const json& v, ExperimentConfig& c) {
    const Reader s(v, r.path("sparsity"));
    s.each([&](const std::string& key, const json& value) {
        if (key == "feature_missing") {
            c.sparsity.feature_missing = s.number(key, value);
        } else if (key == "edge_drop") {
            c.sparsity.edge_drop = s.number(key, value);
        } else if (key == "label_rate") {
            if (value.is_null()) {
                c.sparsity.label_rate.reset();
            } else {
                c.sparsity.label_rate = s.number(key, value);
            }
        } else {
            return false;
        }
        return true;
    });
}

void unit_range(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError(std::string(name) + " must be in [0, 1]");
    }
}

} // namespace

ExperimentConfig config_from_json(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    const Reader r(root, "");
    r.each([&](const std::string& key, const json& value) {
        if (key == "dataset") {
            c.dataset = r.text(key, value);
        } else if (key == "task") {
            c.task = r.text(key, value);
        } else if (key == "out") {
            c.out = r.text(key, value);
        } else if (key == "method") {
            c.method = parse_method(r.text(key, value));
        } else if (key == "seeds") {
            if (!value.is_array()) {
                throw ConfigError("'seeds' must be a list of non-negative integers");
            }
            c.seeds.clear();
            for (const auto& s : value) {
                c.seeds.push_back(r.count(key, s));
            }
        } else if (key == "threads") {
            c.threads = r.count(key, value);
        } else if (key == "quiet") {
            c.quiet = r.flag(key, value);
        } else if (key == "split") {
            read_split(r, value, c);
        } else if (key == "model") {
            read_model(r, value, c);
        } else if (key == "federation") {
            read_federation(r, value, c);
        } else if (key == "adafgl") {
            read_adafgl(r, value, c);
        } else if (key == "sparsity") {
            read_sparsity(r, value, c);
        } else {
            return false;
        }
        return true;
    });
    validate(c);
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    if (!fs::is_regular_file(path)) {
        throw ConfigError("config file " + path.string() + " does not exist");
    }
    return config_from_json(io::read_text(path));
}

std::string config_to_json(const ExperimentConfig& c) {
    json root;
    root["dataset"] = c.dataset;
    root["task"] = c.task;
    root["out"] = c.out;
    root["method"] = to_string(c.method);
    root["seeds"] = c.seeds;
    root["threads"] = c.threads;
    root["quiet"] = c.quiet;
    root["split"] = {{"strategy", to_string(c.strategy)},
                     {"num_clients", c.num_clients},
                     {"p_s", c.p_s},
                     {"ratio", c.ratio},
                     {"seed", c.split_seed},
                     {"mask_ratios", c.mask_ratios}};
    root["model"] = {{"hidden", c.federation.hidden},
                     {"lr", c.federation.adam.lr},
                     {"weight_decay", c.federation.adam.weight_decay},
                     {"norm_exponent", c.federation.norm_exponent}};
    root["federation"] = {{"rounds", c.federation.rounds},
                          {"local_epochs", c.federation.local_epochs},
                          {"participation", c.federation.participation}};
    const auto& a = c.adafgl;
    root["adafgl"] = {{"alpha", a.alpha},         {"beta", a.beta},
                      {"k", a.k},                 {"layers", a.layers},
                      {"epochs", a.epochs},       {"kappa", a.kappa},
                      {"lp_steps", a.lp_steps},   {"mask_prob", a.mask_prob},
                      {"knowledge_scale", a.knowledge_scale_hcs ? "hcs" : "one"},
                      {"dense_cap", a.dense_cap}};
    root["sparsity"] = {{"feature_missing", c.sparsity.feature_missing},
                        {"edge_drop", c.sparsity.edge_drop},
                        {"label_rate", c.sparsity.label_rate ? json(*c.sparsity.label_rate) : json(nullptr)}};
    return root.dump(2) + "\n";
}

void validate(const ExperimentConfig& c) {
    if (c.num_clients < 1 || (c.strategy == SplitStrategy::community && c.num_clients < 2)) {
        throw ConfigError("split.num_clients must be >= 2 for the community split and >= 1 otherwise");
    }
    unit_range(c.p_s, "split.p_s");
    unit_range(c.ratio, "split.ratio");
    double total = 0.0;
    for (const double r : c.mask_ratios) {
        unit_range(r, "split.mask_ratios entries");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-9 || c.mask_ratios[0] <= 0.0) {
        throw ConfigError("split.mask_ratios must sum to 1 with a positive train share");
    }
    unit_range(c.sparsity.feature_missing, "sparsity.feature_missing");
    unit_range(c.sparsity.edge_drop, "sparsity.edge_drop");
    if (c.sparsity.label_rate) {
        unit_range(*c.sparsity.label_rate, "sparsity.label_rate");
    }
    if (c.seeds.empty()) {
        throw ConfigError("seeds must not be empty");
    }
    if (c.adafgl.hidden != c.federation.hidden || c.adafgl.adam.lr != c.federation.adam.lr) {
        throw ConfigError("model settings are inconsistent");
    }
    try {
        validate(c.federation);
        validate(c.adafgl);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

// ---------------------------------------------------------------------------
// Runs

FederatedTask build_task(const ExperimentConfig& config) {
    if (config.dataset.empty()) {
        throw ConfigError("no dataset directory given");
    }
    Graph g = io::load_graph(config.dataset);
    if (g.count(SplitRole::train) == 0) {
        g = io::make_masks(g, config.mask_ratios, Rng::derive(config.split_seed, 5));
    }
    if (config.strategy == SplitStrategy::community) {
        return community_split(g, config.num_clients, config.split_seed);
    }
    return structure_noniid_split(g, config.num_clients, config.p_s, config.ratio, config.split_seed);
}

SeedOutcome run_seed(const FederatedTask& task, const ExperimentConfig& config, std::uint64_t seed,
                     std::size_t threads) {
    const FederatedTask local =
        config.sparsity.active() ? apply_sparsity(task, config.sparsity, Rng::derive(seed, 77)) : task;
    FederationConfig fed = config.federation;
    fed.seed = seed;
    fed.threads = threads;
    fed.evaluate_rounds = true;
    auto federation = run_federation(local, fed);

    SeedOutcome outcome;
    outcome.seed = seed;
    const RoundReport& last = federation.reports.back();
    outcome.fedgcn_test_acc = last.test_acc;
    outcome.clients.resize(local.clients.size());
    for (std::size_t c = 0; c < local.clients.size(); ++c) {
        auto& client = outcome.clients[c];
        client.client_id = local.clients[c].client_id;
        client.test_count = last.clients[c].test_count;
        client.edge_homophily = edge_homophily(local.clients[c].graph);
        client.fedgcn_test_acc = last.clients[c].test_acc;
    }
    if (config.method == Method::adafgl) {
        parallel_for(local.clients.size(), threads, [&](std::size_t c) {
            AdaFglConfig ada = config.adafgl;
            ada.seed = Rng::derive(seed, 500 + c);
            outcome.clients[c].step2 = step2_train(local.clients[c], federation.global, ada);
        });
        double hits = 0.0;
        std::size_t total = 0;
        for (const auto& client : outcome.clients) {
            hits += client.step2->test_acc * static_cast<double>(client.step2->test_count);
            total += client.step2->test_count;
        }
        outcome.adafgl_test_acc = total == 0 ? 0.0 : hits / static_cast<double>(total);
    }
    outcome.rounds = std::move(federation.reports);
    return outcome;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) {
        return {0.0, 0.0};
    }
    double mean = 0.0;
    for (const double v : values) {
        mean += v;
    }
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (const double v : values) {
        var += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

TrainSummary summarize(std::vector<SeedOutcome> runs) {
    TrainSummary summary;
    summary.runs = std::move(runs);
    std::vector<double> fed;
    std::vector<double> ada;
    for (const auto& r : summary.runs) {
        fed.push_back(r.fedgcn_test_acc);
        if (r.adafgl_test_acc) {
            ada.push_back(*r.adafgl_test_acc);
        }
    }
    std::tie(summary.fedgcn_mean, summary.fedgcn_std) = mean_std(fed);
    if (!ada.empty()) {
        const auto [m, s] = mean_std(ada);
        summary.adafgl_mean = m;
        summary.adafgl_std = s;
    }
    return summary;
}

std::string curves_csv(const TrainSummary& summary) {
    std::ostringstream out;
    out << "seed,phase,step,client_id,loss,val_acc,test_acc\n";
    for (const auto& run : summary.runs) {
        for (const auto& round : run.rounds) {
            out << run.seed << ",federation," << round.round << ",-1,," << fmt_short(round.val_acc) << ','
                << fmt_short(round.test_acc) << '\n';
            for (const auto& c : round.clients) {
                out << run.seed << ",federation," << round.round << ',' << c.client_id << ','
                    << (c.train_loss ? fmt_short(*c.train_loss) : "") << ',' << fmt_short(c.val_acc) << ','
                    << fmt_short(c.test_acc) << '\n';
            }
        }
        for (const auto& c : run.clients) {
            if (!c.step2) {
                continue;
            }
            for (const auto& e : c.step2->trace) {
                out << run.seed << ",step2," << e.epoch << ',' << c.client_id << ',' << fmt_short(e.loss) << ','
                    << fmt_short(e.val_acc) << ',' << fmt_short(e.test_acc) << '\n';
            }
        }
    }
    return out.str();
}

std::string clients_csv(const FederatedTask& task, const TrainSummary& summary) {
    std::ostringstream out;
    out << "seed,client_id,num_nodes,num_edges,train,val,test,edge_homophily,injection,hcs,fedgcn_test_acc,"
           "extractor_test_acc,adafgl_test_acc,best_epoch\n";
    for (const auto& run : summary.runs) {
        for (std::size_t i = 0; i < run.clients.size(); ++i) {
            const auto& c = run.clients[i];
            const Graph& g = task.clients[i].graph;
            out << run.seed << ',' << c.client_id << ',' << g.num_nodes() << ',' << g.num_edges() << ','
                << g.count(SplitRole::train) << ',' << g.count(SplitRole::val) << ',' << g.count(SplitRole::test)
                << ',' << (c.edge_homophily ? fmt_short(*c.edge_homophily) : "") << ','
                << to_string(task.injection_log[i].mode) << ',';
            if (c.step2) {
                out << fmt_short(c.step2->hcs.hcs) << ',' << fmt_short(c.fedgcn_test_acc) << ','
                    << fmt_short(c.step2->extractor_test_acc) << ',' << fmt_short(c.step2->test_acc) << ','
                    << c.step2->best_epoch << '\n';
            } else {
                out << ',' << fmt_short(c.fedgcn_test_acc) << ",,,\n";
            }
        }
    }
    return out.str();
}

} // namespace

std::string results_json(const ExperimentConfig& config, const TrainSummary& summary, const std::string& error) {
    json root;
    root["method"] = to_string(config.method);
    json seeds = json::array();
    std::vector<double> fed;
    std::vector<double> ada;
    for (const auto& r : summary.runs) {
        seeds.push_back(r.seed);
        fed.push_back(r.fedgcn_test_acc);
        if (r.adafgl_test_acc) {
            ada.push_back(*r.adafgl_test_acc);
        }
    }
    root["seeds"] = seeds;
    root["fedgcn"] = {{"mean", summary.fedgcn_mean}, {"std", summary.fedgcn_std}, {"per_seed", fed}};
    if (summary.adafgl_mean) {
        root["adafgl"] = {{"mean", *summary.adafgl_mean}, {"std", *summary.adafgl_std}, {"per_seed", ada}};
    }
    json runs = json::array();
    for (const auto& r : summary.runs) {
        json run;
        run["seed"] = r.seed;
        run["fedgcn_test_acc"] = r.fedgcn_test_acc;
        run["adafgl_test_acc"] = optional_number(r.adafgl_test_acc);
        json clients = json::array();
        for (const auto& c : r.clients) {
            json entry;
            entry["client_id"] = c.client_id;
            entry["test_nodes"] = c.test_count;
            entry["edge_homophily"] = optional_number(c.edge_homophily);
            entry["fedgcn_acc"] = c.fedgcn_test_acc;
            if (c.step2) {
                const auto& s = *c.step2;
                entry["hcs"] = s.hcs.hcs;
                entry["extractor_acc"] = s.extractor_test_acc;
                entry["adafgl_acc"] = s.test_acc;
                entry["best_epoch"] = s.best_epoch;
                entry["tv_to_homo"] = s.tv_to_homo;
                json loss = json::array();
                json val = json::array();
                json test = json::array();
                for (const auto& e : s.trace) {
                    loss.push_back(e.loss);
                    val.push_back(e.val_acc);
                    test.push_back(e.test_acc);
                }
                entry["epochs_trace"] = {{"loss", loss}, {"val_acc", val}, {"test_acc", test}};
            }
            clients.push_back(std::move(entry));
        }
        run["clients"] = std::move(clients);
        runs.push_back(std::move(run));
    }
    root["runs"] = std::move(runs);
    if (!error.empty()) {
        root["error"] = error;
    }
    // Settings that cannot change the numbers stay out, so runs that differ only
    // in output directory or thread count produce identical files.
    json settings = json::parse(config_to_json(config));
    for (const char* key : {"out", "threads", "quiet"}) {
        settings.erase(key);
    }
    root["config"] = std::move(settings);
    return root.dump(2) + "\n";
}

FederatedTask cmd_split(const ExperimentConfig& config, std::ostream& report) {
    validate(config);
    FederatedTask task = build_task(config);
    const fs::path out = config.out;
    io::save_task(task, out);
    io::write_text(out / "config.json", config_to_json(config));
    char line[160];
    std::snprintf(line, sizeof(line), "%-7s %7s %7s %6s %9s %9s %-7s %6s\n", "client", "nodes", "edges", "train",
                  "edge_homo", "node_homo", "inject", "added");
    report << line;
    for (std::size_t i = 0; i < task.clients.size(); ++i) {
        const Graph& g = task.clients[i].graph;
        const auto eh = edge_homophily(g);
        const auto nh = node_homophily(g);
        std::snprintf(line, sizeof(line), "%-7d %7zu %7zu %6zu %9.4f %9.4f %-7s %6zu\n", task.clients[i].client_id,
                      g.num_nodes(), g.num_edges(), g.count(SplitRole::train), eh.value_or(0.0), nh.value,
                      to_string(task.injection_log[i].mode).c_str(), task.injection_log[i].added);
        report << line;
    }
    return task;
}

TrainSummary cmd_train(const ExperimentConfig& config, std::ostream& report) {
    validate(config);
    const fs::path out = config.out;
    fs::create_directories(out);
    io::write_text(out / "config.json", config_to_json(config));
    const FederatedTask task = config.task.empty() ? build_task(config) : io::load_task(config.task);

    const std::size_t threads = resolve_threads(config.threads);
    const std::size_t seed_threads = config.seeds.size() > 1 ? std::min(threads, config.seeds.size()) : 1;
    const std::size_t inner_threads = seed_threads > 1 ? 1 : threads;
    std::vector<std::optional<SeedOutcome>> slots(config.seeds.size());
    std::string error;
    try {
        parallel_for(config.seeds.size(), seed_threads, [&](std::size_t i) {
            slots[i] = run_seed(task, config, config.seeds[i], inner_threads);
        });
    } catch (const std::exception& e) {
        error = e.what();
    }
    std::vector<SeedOutcome> runs;
    for (auto& s : slots) {
        if (s) {
            runs.push_back(std::move(*s));
        }
    }
    TrainSummary summary = summarize(std::move(runs));
    io::write_text(out / "results.json", results_json(config, summary, error));
    io::write_text(out / "curves.csv", curves_csv(summary));
    io::write_text(out / "clients.csv", clients_csv(task, summary));
    if (!error.empty()) {
        throw std::runtime_error("train failed after " + std::to_string(summary.runs.size()) +
                                 " completed seeds: " + error);
    }

    char line[160];
    std::snprintf(line, sizeof(line), "fedgcn  %.4f +- %.4f over %zu seeds\n", summary.fedgcn_mean,
                  summary.fedgcn_std, summary.runs.size());
    report << line;
    if (summary.adafgl_mean) {
        std::snprintf(line, sizeof(line), "adafgl  %.4f +- %.4f over %zu seeds\n", *summary.adafgl_mean,
                      *summary.adafgl_std, summary.runs.size());
        report << line;
    }
    return summary;
}

std::string cmd_metrics(const fs::path& path) {
    std::vector<std::pair<std::string, Graph>> rows;
    int classes = 0;
    if (fs::is_regular_file(path / "manifest.json")) {
        const auto task = io::load_task(path);
        for (const auto& sub : task.clients) {
            rows.emplace_back(std::to_string(sub.client_id), sub.graph);
        }
    } else if (fs::is_regular_file(path / "edges.tsv")) {
        rows.emplace_back("global", io::load_graph(path));
    } else {
        throw ConfigError(path.string() + " is neither a task nor a graph directory");
    }
    for (const auto& [name, g] : rows) {
        classes = std::max(classes, g.num_classes());
    }
    std::ostringstream out;
    out << "client_id,num_nodes,num_edges,node_homophily,edge_homophily,degree_min,degree_mean,degree_max,train,val,"
           "test";
    for (int c = 0; c < classes; ++c) {
        out << ",label_" << c;
    }
    out << '\n';
    for (const auto& [name, g] : rows) {
        const auto nh = node_homophily(g);
        const auto eh = edge_homophily(g);
        std::size_t dmin = g.num_nodes() == 0 ? 0 : g.degree(0);
        std::size_t dmax = 0;
        for (NodeId u = 0; u < g.num_nodes(); ++u) {
            dmin = std::min(dmin, g.degree(u));
            dmax = std::max(dmax, g.degree(u));
        }
        const double dmean =
            g.num_nodes() == 0 ? 0.0 : static_cast<double>(2 * g.num_edges()) / static_cast<double>(g.num_nodes());
        std::vector<std::size_t> hist(static_cast<std::size_t>(classes), 0);
        for (const int y : g.labels()) {
            ++hist[static_cast<std::size_t>(y)];
        }
        out << name << ',' << g.num_nodes() << ',' << g.num_edges() << ',' << (nh.defined ? fmt(nh.value) : "")
            << ',' << (eh ? fmt(*eh) : "") << ',' << dmin << ',' << fmt(dmean) << ',' << dmax << ','
            << g.count(SplitRole::train) << ',' << g.count(SplitRole::val) << ',' << g.count(SplitRole::test);
        for (const auto h : hist) {
            out << ',' << h;
        }
        out << '\n';
    }
    return out.str();
}

} // namespace adafgl
