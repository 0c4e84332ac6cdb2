#include "adafgl/partition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "adafgl/log.hpp"
#include "adafgl/rng.hpp"

namespace adafgl {

std::string to_string(SplitStrategy strategy) {
    return strategy == SplitStrategy::community ? "community" : "structure-noniid";
}

std::string to_string(InjectionMode mode) {
    switch (mode) {
    case InjectionMode::homo:
        return "homo";
    case InjectionMode::hetero:
        return "hetero";
    case InjectionMode::none:
        break;
    }
    return "none";
}

SplitStrategy parse_strategy(std::string_view text) {
    if (text == "community") {
        return SplitStrategy::community;
    }
    if (text == "structure-noniid" || text == "structure_noniid") {
        return SplitStrategy::structure_noniid;
    }
    throw std::invalid_argument("unknown split strategy '" + std::string(text) + "'");
}

InjectionMode parse_injection_mode(std::string_view text) {
    if (text == "homo") {
        return InjectionMode::homo;
    }
    if (text == "hetero") {
        return InjectionMode::hetero;
    }
    if (text == "none") {
        return InjectionMode::none;
    }
    throw std::invalid_argument("unknown injection mode '" + std::string(text) + "'");
}

ClientSubgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes, int client_id) {
    std::vector<NodeId> ids(nodes.begin(), nodes.end());
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw std::invalid_argument("induced_subgraph: duplicate node id");
    }
    if (!ids.empty() && ids.back() >= g.num_nodes()) {
        throw std::invalid_argument("induced_subgraph: node id out of range");
    }
    constexpr NodeId kAbsent = std::numeric_limits<NodeId>::max();
    std::vector<NodeId> local(g.num_nodes(), kAbsent);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        local[ids[i]] = static_cast<NodeId>(i);
    }

    std::vector<Edge> edges;
    DenseMatrix features(ids.size(), g.feature_dim());
    std::vector<int> labels(ids.size());
    std::vector<SplitRole> roles(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const NodeId u = ids[i];
        const auto src = g.features().row(u);
        std::copy(src.begin(), src.end(), features.row(i).begin());
        labels[i] = g.labels()[u];
        roles[i] = g.roles()[u];
        for (const NodeId v : g.neighbors(u)) {
            if (v > u && local[v] != kAbsent) {
                edges.emplace_back(static_cast<NodeId>(i), local[v]);
            }
        }
    }
    return {client_id,
            Graph(ids.size(), edges, std::move(features), std::move(labels), std::move(roles), g.num_classes()),
            std::move(ids)};
}

// ---------------------------------------------------------------------------
// Louvain

double modularity(const Graph& g, std::span<const int> community) {
    if (community.size() != g.num_nodes()) {
        throw std::invalid_argument("modularity: community vector does not match node count");
    }
    const double two_m = static_cast<double>(g.indices().size());
    if (two_m == 0.0) {
        return 0.0;
    }
    const int count = community.empty() ? 0 : *std::max_element(community.begin(), community.end()) + 1;
    std::vector<double> inside(static_cast<std::size_t>(count), 0.0);
    std::vector<double> total(static_cast<std::size_t>(count), 0.0);
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
        const auto cu = static_cast<std::size_t>(community[u]);
        total[cu] += static_cast<double>(g.degree(u));
        for (const NodeId v : g.neighbors(u)) {
            if (community[v] == community[u]) {
                inside[cu] += 1.0;
            }
        }
    }
    double q = 0.0;
    for (std::size_t c = 0; c < inside.size(); ++c) {
        q += inside[c] / two_m - (total[c] / two_m) * (total[c] / two_m);
    }
    return q;
}

namespace {

constexpr double kLouvainTolerance = 1e-7;

/// Weighted graph of one Louvain level. Self-loop weight holds the arc weight
/// internal to a collapsed community.
struct LevelGraph {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;
    std::vector<double> self;
    std::vector<double> degree;
    double two_m = 0.0;

    [[nodiscard]] std::size_t size() const { return adj.size(); }
};

LevelGraph level_from_graph(const Graph& g) {
    LevelGraph lg;
    const std::size_t n = g.num_nodes();
    lg.adj.resize(n);
    lg.self.assign(n, 0.0);
    lg.degree.assign(n, 0.0);
    for (NodeId u = 0; u < n; ++u) {
        for (const NodeId v : g.neighbors(u)) {
            lg.adj[u].emplace_back(v, 1.0);
        }
        lg.degree[u] = static_cast<double>(g.degree(u));
        lg.two_m += lg.degree[u];
    }
    return lg;
}

double level_modularity(const LevelGraph& lg, const std::vector<std::uint32_t>& comm, std::size_t num_comm) {
    std::vector<double> inside(num_comm, 0.0);
    std::vector<double> total(num_comm, 0.0);
    for (std::size_t i = 0; i < lg.size(); ++i) {
        total[comm[i]] += lg.degree[i];
        inside[comm[i]] += lg.self[i];
        for (const auto& [j, w] : lg.adj[i]) {
            if (comm[j] == comm[i]) {
                inside[comm[i]] += w;
            }
        }
    }
    double q = 0.0;
    for (std::size_t c = 0; c < num_comm; ++c) {
        q += inside[c] / lg.two_m - (total[c] / lg.two_m) * (total[c] / lg.two_m);
    }
    return q;
}

/// Local moves until a pass gains less than the tolerance. Returns whether any
/// node changed community.
bool local_moves(const LevelGraph& lg, std::vector<std::uint32_t>& comm, Rng& rng, std::vector<double>& trace) {
    const std::size_t n = lg.size();
    std::vector<double> tot(lg.degree);
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0U);
    rng.shuffle(order);

    std::vector<double> weight_to(n, 0.0);
    std::vector<std::uint32_t> touched;
    bool any_move = false;
    double current = trace.back();
    for (;;) {
        bool moved = false;
        for (const auto i : order) {
            const std::uint32_t old_comm = comm[i];
            const double k = lg.degree[i];
            touched.clear();
            for (const auto& [j, w] : lg.adj[i]) {
                const auto c = comm[j];
                if (weight_to[c] == 0.0) {
                    touched.push_back(c);
                }
                weight_to[c] += w;
            }
            tot[old_comm] -= k;
            std::uint32_t best = old_comm;
            double best_gain = weight_to[old_comm] - tot[old_comm] * k / lg.two_m;
            for (const auto c : touched) {
                const double gain = weight_to[c] - tot[c] * k / lg.two_m;
                if (gain > best_gain) {
                    best_gain = gain;
                    best = c;
                }
            }
            for (const auto c : touched) {
                weight_to[c] = 0.0;
            }
            tot[best] += k;
            if (best != old_comm) {
                comm[i] = best;
                moved = true;
                any_move = true;
            }
        }
        const double q = level_modularity(lg, comm, n);
        trace.push_back(q);
        if (!moved || q - current < kLouvainTolerance) {
            break;
        }
        current = q;
    }
    return any_move;
}

/// Renumbers communities densely in node order; returns the count.
std::size_t renumber(std::vector<std::uint32_t>& comm) {
    constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> remap(comm.size(), kUnset);
    std::uint32_t next = 0;
    for (auto& c : comm) {
        if (remap[c] == kUnset) {
            remap[c] = next++;
        }
        c = remap[c];
    }
    return next;
}

LevelGraph coarsen(const LevelGraph& lg, const std::vector<std::uint32_t>& comm, std::size_t num_comm) {
    LevelGraph out;
    out.adj.resize(num_comm);
    out.self.assign(num_comm, 0.0);
    out.degree.assign(num_comm, 0.0);
    out.two_m = lg.two_m;
    std::vector<double> weight_to(num_comm, 0.0);
    std::vector<std::vector<std::uint32_t>> members(num_comm);
    for (std::uint32_t i = 0; i < lg.size(); ++i) {
        members[comm[i]].push_back(i);
    }
    std::vector<std::uint32_t> touched;
    for (std::uint32_t c = 0; c < num_comm; ++c) {
        touched.clear();
        for (const auto i : members[c]) {
            out.self[c] += lg.self[i];
            out.degree[c] += lg.degree[i];
            for (const auto& [j, w] : lg.adj[i]) {
                const auto d = comm[j];
                if (d == c) {
                    out.self[c] += w;
                    continue;
                }
                if (weight_to[d] == 0.0) {
                    touched.push_back(d);
                }
                weight_to[d] += w;
            }
        }
        std::sort(touched.begin(), touched.end());
        for (const auto d : touched) {
            out.adj[c].emplace_back(d, weight_to[d]);
            weight_to[d] = 0.0;
        }
    }
    return out;
}

} // namespace

LouvainResult louvain(const Graph& g, std::uint64_t seed) {
    const std::size_t n = g.num_nodes();
    LouvainResult result;
    result.community.resize(n);
    std::iota(result.community.begin(), result.community.end(), 0);
    result.num_communities = n;
    if (g.num_edges() == 0) {
        result.modularity_trace.push_back(0.0);
        return result;
    }

    Rng rng(seed);
    LevelGraph level = level_from_graph(g);
    std::vector<std::uint32_t> node_comm(n);
    std::iota(node_comm.begin(), node_comm.end(), 0U);
    std::vector<std::uint32_t> level_comm(n);
    std::iota(level_comm.begin(), level_comm.end(), 0U);
    result.modularity_trace.push_back(level_modularity(level, level_comm, n));

    for (;;) {
        const double before = result.modularity_trace.back();
        level_comm.resize(level.size());
        std::iota(level_comm.begin(), level_comm.end(), 0U);
        const bool moved = local_moves(level, level_comm, rng, result.modularity_trace);
        const std::size_t count = renumber(level_comm);
        for (auto& c : node_comm) {
            c = level_comm[c];
        }
        if (!moved || result.modularity_trace.back() - before < kLouvainTolerance || count == level.size()) {
            break;
        }
        level = coarsen(level, level_comm, count);
    }

    renumber(node_comm);
    std::uint32_t max_comm = 0;
    for (std::size_t i = 0; i < n; ++i) {
        result.community[i] = static_cast<int>(node_comm[i]);
        max_comm = std::max(max_comm, node_comm[i]);
    }
    result.num_communities = n == 0 ? 0 : max_comm + 1;
    return result;
}

// ---------------------------------------------------------------------------
// Splits

std::vector<int> assign_greedy(std::span<const std::size_t> sizes, std::size_t num_clients) {
    if (num_clients == 0) {
        throw std::invalid_argument("assign_greedy: need at least one client");
    }
    std::vector<std::size_t> order(sizes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });
    std::vector<std::size_t> load(num_clients, 0);
    std::vector<int> owner(sizes.size(), -1);
    for (const auto idx : order) {
        const auto target = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
        owner[idx] = static_cast<int>(target);
        load[target] += sizes[idx];
    }
    return owner;
}

namespace {

/// Moves one node of each class that has no train node into the train set,
/// taking a validation node first, then test, then unassigned.
std::size_t promote_train_coverage(ClientSubgraph& sub) {
    const Graph& g = sub.graph;
    const auto classes = static_cast<std::size_t>(g.num_classes());
    std::vector<bool> has_train(classes, false);
    std::vector<std::size_t> candidate(classes, g.num_nodes());
    std::vector<int> candidate_rank(classes, 4);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        const auto y = static_cast<std::size_t>(g.labels()[i]);
        const SplitRole role = g.roles()[i];
        if (role == SplitRole::train) {
            has_train[y] = true;
            continue;
        }
        const int rank = role == SplitRole::val ? 0 : role == SplitRole::test ? 1 : 2;
        if (rank < candidate_rank[y]) {
            candidate_rank[y] = rank;
            candidate[y] = i;
        }
    }
    std::vector<SplitRole> roles = g.roles();
    std::size_t promoted = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        if (!has_train[c] && candidate[c] < g.num_nodes()) {
            roles[candidate[c]] = SplitRole::train;
            ++promoted;
        }
    }
    if (promoted > 0) {
        sub.graph = g.with_roles(std::move(roles));
    }
    return promoted;
}

FederatedTask build_task(const Graph& g, const std::vector<int>& owner, std::size_t num_clients) {
    std::vector<std::vector<NodeId>> members(num_clients);
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
        members[static_cast<std::size_t>(owner[u])].push_back(u);
    }
    const bool has_masks = g.count(SplitRole::train) > 0;
    FederatedTask task;
    task.global_num_nodes = g.num_nodes();
    for (std::size_t c = 0; c < num_clients; ++c) {
        auto sub = induced_subgraph(g, members[c], static_cast<int>(c));
        task.promoted_train.push_back(has_masks ? promote_train_coverage(sub) : 0);
        task.clients.push_back(std::move(sub));
        task.injection_log.push_back({});
    }
    return task;
}

} // namespace

FederatedTask community_split(const Graph& g, std::size_t num_clients, std::uint64_t seed) {
    if (num_clients < 2) {
        throw std::invalid_argument("community_split: need at least 2 clients");
    }
    const auto communities = louvain(g, Rng::derive(seed, 0));
    if (communities.num_communities < num_clients) {
        std::ostringstream msg;
        msg << "community_split: " << communities.num_communities << " communities cannot fill " << num_clients
            << " clients";
        throw std::invalid_argument(msg.str());
    }
    std::vector<std::size_t> sizes(communities.num_communities, 0);
    for (const int c : communities.community) {
        ++sizes[static_cast<std::size_t>(c)];
    }
    const auto community_owner = assign_greedy(sizes, num_clients);
    std::vector<int> owner(g.num_nodes());
    for (std::size_t u = 0; u < owner.size(); ++u) {
        owner[u] = community_owner[static_cast<std::size_t>(communities.community[u])];
    }
    FederatedTask task = build_task(g, owner, num_clients);
    task.strategy = SplitStrategy::community;
    task.seed = seed;
    return task;
}

namespace {

/// BFS distances from all `sources`; unreachable nodes get SIZE_MAX.
std::vector<std::size_t> bfs_distance(const Graph& g, std::span<const NodeId> sources) {
    std::vector<std::size_t> dist(g.num_nodes(), std::numeric_limits<std::size_t>::max());
    std::deque<NodeId> queue;
    for (const NodeId s : sources) {
        dist[s] = 0;
        queue.push_back(s);
    }
    while (!queue.empty()) {
        const NodeId u = queue.front();
        queue.pop_front();
        for (const NodeId v : g.neighbors(u)) {
            if (dist[v] == std::numeric_limits<std::size_t>::max()) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

/// Uniform pick among the maximizers of `key`.
template <class Key>
NodeId pick_max(std::size_t n, Key key, Rng& rng) {
    std::vector<NodeId> best;
    auto best_key = key(NodeId{0});
    for (NodeId u = 0; u < n; ++u) {
        const auto k = key(u);
        if (best.empty() || k > best_key) {
            best.assign(1, u);
            best_key = k;
        } else if (k == best_key) {
            best.push_back(u);
        }
    }
    return best[static_cast<std::size_t>(rng.below(best.size()))];
}

} // namespace

std::vector<int> balanced_partition(const Graph& g, std::size_t num_clients, std::uint64_t seed) {
    const std::size_t n = g.num_nodes();
    if (num_clients == 0 || num_clients > n) {
        throw std::invalid_argument("balanced_partition: client count must be in [1, n]");
    }
    Rng rng(seed);
    std::vector<NodeId> seeds;
    seeds.push_back(pick_max(n, [&](NodeId u) { return g.degree(u); }, rng));
    while (seeds.size() < num_clients) {
        const auto dist = bfs_distance(g, seeds);
        seeds.push_back(pick_max(n, [&](NodeId u) { return std::make_pair(dist[u], g.degree(u)); }, rng));
    }

    std::vector<int> owner(n, -1);
    std::vector<std::size_t> size(num_clients, 0);
    std::vector<std::deque<NodeId>> frontier(num_clients);
    std::size_t assigned = 0;
    NodeId lowest_free = 0;
    const auto claim = [&](std::size_t region, NodeId u) {
        owner[u] = static_cast<int>(region);
        ++size[region];
        ++assigned;
        for (const NodeId v : g.neighbors(u)) {
            if (owner[v] < 0) {
                frontier[region].push_back(v);
            }
        }
    };
    for (std::size_t r = 0; r < num_clients; ++r) {
        claim(r, seeds[r]);
    }
    while (assigned < n) {
        const auto region = static_cast<std::size_t>(std::min_element(size.begin(), size.end()) - size.begin());
        auto& queue = frontier[region];
        while (!queue.empty() && owner[queue.front()] >= 0) {
            queue.pop_front();
        }
        if (!queue.empty()) {
            const NodeId u = queue.front();
            queue.pop_front();
            claim(region, u);
            continue;
        }
        while (owner[lowest_free] >= 0) {
            ++lowest_free;
        }
        claim(region, lowest_free);
    }
    return owner;
}

namespace {

std::size_t choose2(std::size_t k) { return k < 2 ? 0 : k * (k - 1) / 2; }

} // namespace

ClientSubgraph inject_edges(const ClientSubgraph& sub, InjectionMode mode, double ratio, std::uint64_t seed,
                            InjectionRecord* record) {
    if (!(ratio >= 0.0) || !std::isfinite(ratio)) {
        throw std::invalid_argument("inject_edges: ratio must be a non-negative number");
    }
    const Graph& g = sub.graph;
    const std::size_t n = g.num_nodes();
    InjectionRecord rec{mode, 0, 0};
    if (mode == InjectionMode::none) {
        if (record != nullptr) {
            *record = rec;
        }
        return sub;
    }
    rec.requested = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(g.num_edges())));

    const auto& labels = g.labels();
    const bool want_same = mode == InjectionMode::homo;
    std::vector<std::size_t> class_count(static_cast<std::size_t>(g.num_classes()), 0);
    for (const int y : labels) {
        ++class_count[static_cast<std::size_t>(y)];
    }
    std::size_t same_pairs = 0;
    for (const auto c : class_count) {
        same_pairs += choose2(c);
    }
    std::size_t same_edges = 0;
    auto edges = g.edge_list();
    for (const auto& [u, v] : edges) {
        same_edges += labels[u] == labels[v] ? 1 : 0;
    }
    const std::size_t pool = want_same ? same_pairs - same_edges
                                       : (choose2(n) - same_pairs) - (edges.size() - same_edges);
    const std::size_t take = std::min(rec.requested, pool);
    if (take < rec.requested) {
        std::ostringstream msg;
        msg << "client " << sub.client_id << ": " << to_string(mode) << " injection short by "
            << rec.requested - take << " edges (pool " << pool << ")";
        log::warn(msg.str());
    }

    const auto eligible = [&](NodeId u, NodeId v) {
        return (labels[u] == labels[v]) == want_same && !g.has_edge(u, v);
    };
    Rng rng(seed);
    std::vector<Edge> added;
    added.reserve(take);
    constexpr std::size_t kEnumerateLimit = 5'000'000;
    if (take == 0) {
        // nothing to add
    } else if (choose2(n) <= kEnumerateLimit || 2 * take >= pool) {
        std::vector<Edge> candidates;
        candidates.reserve(pool);
        for (NodeId u = 0; u < n; ++u) {
            for (NodeId v = u + 1; v < n; ++v) {
                if (eligible(u, v)) {
                    candidates.emplace_back(u, v);
                }
            }
        }
        for (const auto idx : rng.sample_without_replacement(candidates.size(), take)) {
            added.push_back(candidates[idx]);
        }
    } else {
        std::unordered_set<std::uint64_t> chosen;
        while (added.size() < take) {
            auto u = static_cast<NodeId>(rng.below(n));
            auto v = static_cast<NodeId>(rng.below(n));
            if (u == v) {
                continue;
            }
            if (u > v) {
                std::swap(u, v);
            }
            if (!eligible(u, v) || !chosen.insert(static_cast<std::uint64_t>(u) * n + v).second) {
                continue;
            }
            added.emplace_back(u, v);
        }
    }
    rec.added = added.size();
    edges.insert(edges.end(), added.begin(), added.end());
    ClientSubgraph out{sub.client_id, g.with_edges(edges), sub.global_ids};
    if (record != nullptr) {
        *record = rec;
    }
    return out;
}

FederatedTask structure_noniid_split(const Graph& g, std::size_t num_clients, double p_s, double ratio,
                                     std::uint64_t seed) {
    if (!(p_s >= 0.0 && p_s <= 1.0)) {
        throw std::invalid_argument("structure_noniid_split: p_s must be in [0, 1]");
    }
    if (!(ratio >= 0.0 && ratio <= 1.0)) {
        throw std::invalid_argument("structure_noniid_split: ratio must be in [0, 1]");
    }
    const auto owner = balanced_partition(g, num_clients, Rng::derive(seed, 1));
    FederatedTask task = build_task(g, owner, num_clients);
    task.strategy = SplitStrategy::structure_noniid;
    task.seed = seed;
    task.p_s = p_s;
    task.ratio = ratio;
    Rng coin(Rng::derive(seed, 2));
    for (std::size_t c = 0; c < num_clients; ++c) {
        const InjectionMode mode = coin.bernoulli(p_s) ? InjectionMode::homo : InjectionMode::hetero;
        task.clients[c] =
            inject_edges(task.clients[c], mode, ratio, Rng::derive(seed, 100 + c), &task.injection_log[c]);
    }
    return task;
}

FederatedTask apply_sparsity(const FederatedTask& task, const SparsityConfig& config, std::uint64_t seed) {
    const auto check = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument(std::string("apply_sparsity: ") + name + " must be in [0, 1]");
        }
    };
    check(config.feature_missing, "feature_missing");
    check(config.edge_drop, "edge_drop");
    if (config.label_rate) {
        check(*config.label_rate, "label_rate");
    }
    FederatedTask out = task;
    if (!config.active()) {
        return out;
    }
    for (std::size_t c = 0; c < out.clients.size(); ++c) {
        Graph g = out.clients[c].graph;
        const std::size_t n = g.num_nodes();
        Rng rng(Rng::derive(seed, c));

        if (config.label_rate) {
            const auto train = g.nodes_with(SplitRole::train);
            const auto target = static_cast<std::size_t>(std::llround(*config.label_rate * static_cast<double>(n)));
            if (target < train.size()) {
                std::vector<bool> keep(train.size(), false);
                for (const auto idx : rng.sample_without_replacement(train.size(), target)) {
                    keep[idx] = true;
                }
                const auto classes = static_cast<std::size_t>(g.num_classes());
                std::vector<bool> covered(classes, false);
                for (std::size_t i = 0; i < train.size(); ++i) {
                    if (keep[i]) {
                        covered[static_cast<std::size_t>(g.labels()[train[i]])] = true;
                    }
                }
                std::size_t restored = 0;
                for (std::size_t i = 0; i < train.size(); ++i) {
                    const auto y = static_cast<std::size_t>(g.labels()[train[i]]);
                    if (!covered[y]) {
                        keep[i] = true;
                        covered[y] = true;
                        ++restored;
                    }
                }
                if (restored > 0) {
                    std::ostringstream msg;
                    msg << "client " << c << ": label rate left " << restored
                        << " classes without train nodes; kept one each";
                    log::warn(msg.str());
                }
                auto roles = g.roles();
                for (std::size_t i = 0; i < train.size(); ++i) {
                    if (!keep[i]) {
                        roles[train[i]] = SplitRole::none;
                    }
                }
                g = g.with_roles(std::move(roles));
            }
        }

        if (config.feature_missing > 0.0) {
            std::vector<NodeId> unlabeled;
            for (NodeId u = 0; u < n; ++u) {
                if (g.roles()[u] != SplitRole::train) {
                    unlabeled.push_back(u);
                }
            }
            const auto count = static_cast<std::size_t>(
                std::llround(config.feature_missing * static_cast<double>(unlabeled.size())));
            DenseMatrix features = g.features();
            for (const auto idx : rng.sample_without_replacement(unlabeled.size(), count)) {
                auto row = features.row(unlabeled[idx]);
                std::fill(row.begin(), row.end(), 0.0);
            }
            g = g.with_features(std::move(features));
        }

        if (config.edge_drop > 0.0) {
            const auto edges = g.edge_list();
            const auto drop =
                static_cast<std::size_t>(std::llround(config.edge_drop * static_cast<double>(edges.size())));
            std::vector<bool> dropped(edges.size(), false);
            for (const auto idx : rng.sample_without_replacement(edges.size(), drop)) {
                dropped[idx] = true;
            }
            std::vector<Edge> kept;
            kept.reserve(edges.size() - drop);
            for (std::size_t i = 0; i < edges.size(); ++i) {
                if (!dropped[i]) {
                    kept.push_back(edges[i]);
                }
            }
            g = g.with_edges(kept);
        }
        out.clients[c].graph = std::move(g);
    }
    return out;
}

} // namespace adafgl
