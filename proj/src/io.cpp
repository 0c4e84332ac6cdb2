#include "adafgl/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "adafgl/log.hpp"
#include "adafgl/rng.hpp"

namespace adafgl::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

fs::path require_file(const fs::path& dir, const char* name) {
    fs::path path = dir / name;
    if (!fs::is_regular_file(path)) {
        throw std::runtime_error("missing file " + path.string());
    }
    return path;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

/// Strips comments and whitespace; returns false for blank lines.
bool content_of(std::string& line) {
    if (const auto hash = line.find('#'); hash != std::string::npos) {
        line.resize(hash);
    }
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return false;
    }
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    return true;
}

std::string where(const fs::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

std::uint64_t read_u64(std::istream& in) {
    std::array<unsigned char, 8> buf{};
    if (!in.read(reinterpret_cast<char*>(buf.data()), 8)) {
        throw std::runtime_error("features.bin: truncated header");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(buf[static_cast<std::size_t>(i)]) << (8 * i);
    }
    return v;
}

void write_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> buf{};
    for (int i = 0; i < 8; ++i) {
        buf[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
    }
    out.write(buf.data(), 8);
}

DenseMatrix read_features(const fs::path& path) {
    auto in = open_in(path, std::ios::binary);
    const auto n = read_u64(in);
    const auto f = read_u64(in);
    const auto expected = 16 + n * f * 8;
    const auto actual = fs::file_size(path);
    if (actual != expected) {
        std::ostringstream msg;
        msg << path.string() << ": header says " << n << "x" << f << " (" << expected << " bytes) but file has "
            << actual << " bytes";
        throw std::runtime_error(msg.str());
    }
    std::vector<double> values(n * f);
    for (auto& v : values) {
        v = std::bit_cast<double>(read_u64(in));
    }
    return DenseMatrix(n, f, std::move(values));
}

void write_features(const DenseMatrix& x, const fs::path& path) {
    auto out = open_out(path, std::ios::binary);
    write_u64(out, x.rows());
    write_u64(out, x.cols());
    for (const double v : x.values()) {
        write_u64(out, std::bit_cast<std::uint64_t>(v));
    }
}

const char* role_name(SplitRole role) {
    switch (role) {
    case SplitRole::train:
        return "train";
    case SplitRole::val:
        return "val";
    case SplitRole::test:
        return "test";
    case SplitRole::none:
        break;
    }
    return "none";
}

SplitRole parse_role(const std::string& text, const fs::path& path, std::size_t line) {
    if (text == "train") {
        return SplitRole::train;
    }
    if (text == "val") {
        return SplitRole::val;
    }
    if (text == "test") {
        return SplitRole::test;
    }
    if (text == "none") {
        return SplitRole::none;
    }
    throw std::runtime_error(where(path, line) + ": unknown mask '" + text + "'");
}

} // namespace

std::string read_text(const fs::path& path) {
    auto in = open_in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, std::string_view text) {
    auto out = open_out(path, std::ios::binary);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

Graph load_graph(const fs::path& dir, std::optional<int> num_classes) {
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("graph directory " + dir.string() + " does not exist");
    }
    const auto edges_path = require_file(dir, "edges.tsv");
    const auto features_path = require_file(dir, "features.bin");
    const auto labels_path = require_file(dir, "labels.txt");

    DenseMatrix features = read_features(features_path);
    const std::size_t n = features.rows();

    std::vector<int> labels;
    {
        auto in = open_in(labels_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!content_of(line)) {
                continue;
            }
            std::size_t used = 0;
            int y = 0;
            try {
                y = std::stoi(line, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != line.size()) {
                throw std::runtime_error(where(labels_path, lineno) + ": expected an integer label");
            }
            if (y < 0 || (num_classes && y >= *num_classes)) {
                throw std::runtime_error(where(labels_path, lineno) + ": label " + line + " out of range");
            }
            labels.push_back(y);
        }
    }
    if (labels.size() != n) {
        std::ostringstream msg;
        msg << "labels.txt has " << labels.size() << " entries but features.bin has " << n << " rows";
        throw std::runtime_error(msg.str());
    }

    std::vector<Edge> edges;
    {
        auto in = open_in(edges_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!content_of(line)) {
                continue;
            }
            std::istringstream fields(line);
            long long u = -1;
            long long v = -1;
            std::string rest;
            if (!(fields >> u >> v) || (fields >> rest)) {
                throw std::runtime_error(where(edges_path, lineno) + ": expected two node ids");
            }
            if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
                throw std::runtime_error(where(edges_path, lineno) + ": endpoint out of range [0, " +
                                         std::to_string(n) + ")");
            }
            edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
        }
    }

    std::vector<SplitRole> roles;
    if (const auto masks_path = dir / "masks.txt"; fs::is_regular_file(masks_path)) {
        auto in = open_in(masks_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!content_of(line)) {
                continue;
            }
            roles.push_back(parse_role(line, masks_path, lineno));
        }
        if (roles.size() != n) {
            throw std::runtime_error("masks.txt has " + std::to_string(roles.size()) + " entries, expected " +
                                     std::to_string(n));
        }
    }

    Graph g(n, edges, std::move(features), std::move(labels), std::move(roles), num_classes.value_or(0));
    if (g.dropped_edges() > 0) {
        log::warn(dir.string() + ": dropped " + std::to_string(g.dropped_edges()) +
                  " self-loop or duplicate edges");
    }
    return g;
}

void save_graph(const Graph& g, const fs::path& dir) {
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "edges.tsv");
        for (const auto& [u, v] : g.edge_list()) {
            out << u << '\t' << v << '\n';
        }
    }
    write_features(g.features(), dir / "features.bin");
    {
        auto out = open_out(dir / "labels.txt");
        for (const int y : g.labels()) {
            out << y << '\n';
        }
    }
    {
        auto out = open_out(dir / "masks.txt");
        for (const auto role : g.roles()) {
            out << role_name(role) << '\n';
        }
    }
}

Graph make_masks(const Graph& g, std::array<double, 3> ratios, std::uint64_t seed) {
    for (const double r : ratios) {
        if (!(r >= 0.0 && r <= 1.0)) {
            throw std::invalid_argument("make_masks: ratios must be in [0, 1]");
        }
    }
    if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
        throw std::invalid_argument("make_masks: ratios must sum to 1");
    }
    if (ratios[0] <= 0.0) {
        throw std::invalid_argument("make_masks: train ratio must be positive");
    }
    const auto classes = static_cast<std::size_t>(g.num_classes());
    std::vector<std::vector<NodeId>> members(classes);
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
        members[static_cast<std::size_t>(g.labels()[u])].push_back(u);
    }
    Rng rng(seed);
    std::vector<SplitRole> roles(g.num_nodes(), SplitRole::none);
    for (std::size_t c = 0; c < classes; ++c) {
        auto& nodes = members[c];
        rng.shuffle(nodes);
        const std::size_t nc = nodes.size();
        if (nc == 0) {
            continue;
        }
        if (nc < 3) {
            log::warn("make_masks: class " + std::to_string(c) + " has " + std::to_string(nc) +
                      " nodes; using one train node and alternating the rest");
            roles[nodes[0]] = SplitRole::train;
            for (std::size_t i = 1; i < nc; ++i) {
                roles[nodes[i]] = i % 2 == 1 ? SplitRole::val : SplitRole::test;
            }
            continue;
        }
        const auto count = [&](double r) {
            return static_cast<std::size_t>(std::llround(r * static_cast<double>(nc)));
        };
        const std::size_t train = std::clamp<std::size_t>(count(ratios[0]), 1, nc);
        const std::size_t val = std::min(count(ratios[1]), nc - train);
        for (std::size_t i = 0; i < nc; ++i) {
            roles[nodes[i]] = i < train ? SplitRole::train : i < train + val ? SplitRole::val : SplitRole::test;
        }
    }
    return g.with_roles(std::move(roles));
}

void save_task(const FederatedTask& task, const fs::path& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["format_version"] = kManifestVersion;
    manifest["strategy"] = to_string(task.strategy);
    manifest["seed"] = task.seed;
    manifest["global_num_nodes"] = task.global_num_nodes;
    manifest["p_s"] = task.p_s;
    manifest["ratio"] = task.ratio;
    manifest["num_clients"] = task.clients.size();
    manifest["num_classes"] = task.clients.empty() ? 0 : task.clients.front().graph.num_classes();
    json clients = json::array();
    for (std::size_t i = 0; i < task.clients.size(); ++i) {
        const auto& sub = task.clients[i];
        const std::string name = "client_" + std::to_string(sub.client_id);
        save_graph(sub.graph, dir / name);
        const auto& rec = task.injection_log[i];
        clients.push_back({{"client_id", sub.client_id},
                           {"dir", name},
                           {"num_nodes", sub.graph.num_nodes()},
                           {"num_edges", sub.graph.num_edges()},
                           {"injection",
                            {{"mode", to_string(rec.mode)}, {"requested", rec.requested}, {"added", rec.added}}},
                           {"promoted_train", i < task.promoted_train.size() ? task.promoted_train[i] : 0},
                           {"global_ids", sub.global_ids}});
    }
    manifest["clients"] = std::move(clients);
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

FederatedTask load_task(const fs::path& dir) {
    const auto path = dir / "manifest.json";
    if (!fs::is_regular_file(path)) {
        throw std::runtime_error("no manifest.json in " + dir.string());
    }
    json manifest;
    try {
        manifest = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    try {
        if (manifest.at("format_version").get<int>() != kManifestVersion) {
            throw std::runtime_error(path.string() + ": unsupported format_version");
        }
        FederatedTask task;
        task.strategy = parse_strategy(manifest.at("strategy").get<std::string>());
        task.seed = manifest.at("seed").get<std::uint64_t>();
        task.global_num_nodes = manifest.at("global_num_nodes").get<std::size_t>();
        task.p_s = manifest.at("p_s").get<double>();
        task.ratio = manifest.at("ratio").get<double>();
        const int classes = manifest.at("num_classes").get<int>();
        for (const auto& entry : manifest.at("clients")) {
            ClientSubgraph sub;
            sub.client_id = entry.at("client_id").get<int>();
            sub.graph = load_graph(dir / entry.at("dir").get<std::string>(), classes);
            sub.global_ids = entry.at("global_ids").get<std::vector<NodeId>>();
            if (sub.global_ids.size() != sub.graph.num_nodes()) {
                throw std::runtime_error("client " + std::to_string(sub.client_id) +
                                         ": global id map does not match node count");
            }
            const auto& inj = entry.at("injection");
            task.injection_log.push_back({parse_injection_mode(inj.at("mode").get<std::string>()),
                                          inj.at("requested").get<std::size_t>(),
                                          inj.at("added").get<std::size_t>()});
            task.promoted_train.push_back(entry.at("promoted_train").get<std::size_t>());
            task.clients.push_back(std::move(sub));
        }
        if (task.clients.size() != manifest.at("num_clients").get<std::size_t>()) {
            throw std::runtime_error(path.string() + ": num_clients does not match the client list");
        }
        return task;
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

Graph convert_linqs(const fs::path& content, const fs::path& cites) {
    struct Row {
        std::string id;
        std::vector<double> features;
        std::string label;
    };
    std::vector<Row> rows;
    {
        auto in = open_in(content);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!content_of(line)) {
                continue;
            }
            std::istringstream fields(line);
            std::vector<std::string> tokens;
            for (std::string t; fields >> t;) {
                tokens.push_back(std::move(t));
            }
            if (tokens.size() < 3) {
                throw std::runtime_error(where(content, lineno) + ": expected id, features and label");
            }
            Row row{tokens.front(), {}, tokens.back()};
            for (std::size_t i = 1; i + 1 < tokens.size(); ++i) {
                row.features.push_back(std::stod(tokens[i]));
            }
            if (!rows.empty() && row.features.size() != rows.front().features.size()) {
                throw std::runtime_error(where(content, lineno) + ": feature width differs from the first row");
            }
            rows.push_back(std::move(row));
        }
    }
    if (rows.empty()) {
        throw std::runtime_error(content.string() + ": no nodes");
    }
    std::map<std::string, int> label_ids;
    for (const auto& r : rows) {
        label_ids.emplace(r.label, 0);
    }
    int next = 0;
    for (auto& [name, id] : label_ids) {
        id = next++;
    }
    std::unordered_map<std::string, NodeId> index;
    const std::size_t f = rows.front().features.size();
    DenseMatrix features(rows.size(), f);
    std::vector<int> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!index.emplace(rows[i].id, static_cast<NodeId>(i)).second) {
            throw std::runtime_error(content.string() + ": duplicate node id " + rows[i].id);
        }
        std::copy(rows[i].features.begin(), rows[i].features.end(), features.row(i).begin());
        labels[i] = label_ids.at(rows[i].label);
    }
    std::vector<Edge> edges;
    std::size_t unknown = 0;
    {
        auto in = open_in(cites);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!content_of(line)) {
                continue;
            }
            std::istringstream fields(line);
            std::string a;
            std::string b;
            if (!(fields >> a >> b)) {
                throw std::runtime_error(where(cites, lineno) + ": expected two node ids");
            }
            const auto ia = index.find(a);
            const auto ib = index.find(b);
            if (ia == index.end() || ib == index.end()) {
                ++unknown;
                continue;
            }
            edges.emplace_back(ia->second, ib->second);
        }
    }
    if (unknown > 0) {
        log::warn(cites.string() + ": skipped " + std::to_string(unknown) + " citations with unknown ids");
    }
    return Graph(rows.size(), edges, std::move(features), std::move(labels), {}, next);
}

} // namespace adafgl::io
