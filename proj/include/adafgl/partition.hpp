#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adafgl/graph.hpp"

namespace adafgl {

enum class SplitStrategy { community, structure_noniid };
enum class InjectionMode { none, homo, hetero };

std::string to_string(SplitStrategy strategy);
std::string to_string(InjectionMode mode);
SplitStrategy parse_strategy(std::string_view text);
InjectionMode parse_injection_mode(std::string_view text);

struct InjectionRecord {
    InjectionMode mode = InjectionMode::none;
    std::size_t requested = 0;
    std::size_t added = 0;

    [[nodiscard]] std::size_t shortfall() const { return requested - added; }
    bool operator==(const InjectionRecord& other) const = default;
};

/// One client's private subgraph, re-indexed locally. global_ids[local] is
/// the node id in the global graph, ascending.
struct ClientSubgraph {
    int client_id = 0;
    Graph graph;
    std::vector<NodeId> global_ids;

    bool operator==(const ClientSubgraph& other) const = default;
};

struct FederatedTask {
    SplitStrategy strategy = SplitStrategy::community;
    std::uint64_t seed = 0;
    std::size_t global_num_nodes = 0;
    double p_s = 0.0;   // structure split only
    double ratio = 0.0; // structure split only
    std::vector<ClientSubgraph> clients;
    std::vector<InjectionRecord> injection_log;
    /// Nodes moved into the train set so that each client holds at least one
    /// train node of every class it contains.
    std::vector<std::size_t> promoted_train;

    bool operator==(const FederatedTask& other) const = default;
};

/// Induced subgraph on `nodes` (any order; stored ascending). Keeps the
/// global class count so every client shares one label space.
ClientSubgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes, int client_id);

/// Q = sum_c [ in_c / 2m - (tot_c / 2m)^2 ]; 0 for a graph without edges.
double modularity(const Graph& g, std::span<const int> community);

struct LouvainResult {
    /// Community id per node, numbered by first appearance in node order.
    std::vector<int> community;
    std::size_t num_communities = 0;
    /// Modularity after every local-move pass, across all levels.
    std::vector<double> modularity_trace;
};

/// Greedy local moves plus coarsening, repeated until the modularity gain of a
/// pass drops below 1e-7. Node visit order is shuffled by the seed.
LouvainResult louvain(const Graph& g, std::uint64_t seed);

/// Client index for each entry of `sizes`: visits sizes in descending order
/// (ties by index) and gives each to the client holding the fewest nodes so
/// far (ties to the lowest id).
std::vector<int> assign_greedy(std::span<const std::size_t> sizes, std::size_t num_clients);

FederatedTask community_split(const Graph& g, std::size_t num_clients, std::uint64_t seed);

/// BFS region growing: one seed per client (the highest-degree node, then
/// repeatedly the node farthest from all chosen seeds), then the currently
/// smallest region claims the next unassigned node from its frontier, or the
/// lowest unassigned id when its frontier is exhausted. Region sizes differ by
/// at most one.
std::vector<int> balanced_partition(const Graph& g, std::size_t num_clients, std::uint64_t seed);

/// Adds round(ratio * m_i) edges between non-adjacent pairs drawn uniformly
/// without replacement among same-label (homo) or different-label (hetero)
/// pairs. Adds what the pool allows and logs a shortfall otherwise.
ClientSubgraph inject_edges(const ClientSubgraph& sub, InjectionMode mode, double ratio, std::uint64_t seed,
                            InjectionRecord* record = nullptr);

FederatedTask structure_noniid_split(const Graph& g, std::size_t num_clients, double p_s, double ratio,
                                     std::uint64_t seed);

struct SparsityConfig {
    double feature_missing = 0.0; // fraction of non-train feature rows zeroed
    double edge_drop = 0.0;       // fraction of edges removed per client
    std::optional<double> label_rate; // train nodes as a fraction of client nodes

    [[nodiscard]] bool active() const { return feature_missing > 0.0 || edge_drop > 0.0 || label_rate.has_value(); }
};

/// Label subsampling runs first, so feature removal targets the nodes that are
/// unlabeled afterwards.
FederatedTask apply_sparsity(const FederatedTask& task, const SparsityConfig& config, std::uint64_t seed);

} // namespace adafgl
