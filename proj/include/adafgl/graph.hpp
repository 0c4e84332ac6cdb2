#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "adafgl/dense.hpp"
#include "adafgl/sparse.hpp"

namespace adafgl {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Role of a node in the transductive split. A single tag per node keeps the
/// train/validation/test sets disjoint by construction.
enum class SplitRole : std::uint8_t { none = 0, train = 1, val = 2, test = 3 };

/// Immutable undirected graph with node features, labels and split roles.
///
/// Adjacency is stored as CSR with sorted, deduplicated neighbor lists and no
/// self-loops; every undirected edge appears as two arcs.
class Graph {
public:
    Graph() = default;

    /// Builds the CSR structure from an undirected edge list. Self-loops and
    /// duplicate edges (in either orientation) are dropped and counted.
    /// `num_classes == 0` infers the class count from the labels.
    Graph(std::size_t num_nodes, std::span<const Edge> edges, DenseMatrix features, std::vector<int> labels,
          std::vector<SplitRole> roles = {}, int num_classes = 0);

    [[nodiscard]] std::size_t num_nodes() const { return num_nodes_; }
    /// Undirected edge count m.
    [[nodiscard]] std::size_t num_edges() const { return indices_.size() / 2; }
    [[nodiscard]] int num_classes() const { return num_classes_; }
    [[nodiscard]] std::size_t feature_dim() const { return features_.cols(); }
    /// Self-loops and duplicates removed during construction.
    [[nodiscard]] std::size_t dropped_edges() const { return dropped_edges_; }

    [[nodiscard]] std::span<const NodeId> neighbors(NodeId u) const {
        return {indices_.data() + indptr_[u], indptr_[u + 1] - indptr_[u]};
    }
    [[nodiscard]] std::size_t degree(NodeId u) const { return indptr_[u + 1] - indptr_[u]; }
    [[nodiscard]] bool has_edge(NodeId u, NodeId v) const;

    [[nodiscard]] const DenseMatrix& features() const { return features_; }
    [[nodiscard]] const std::vector<int>& labels() const { return labels_; }
    [[nodiscard]] const std::vector<SplitRole>& roles() const { return roles_; }
    [[nodiscard]] const std::vector<std::size_t>& indptr() const { return indptr_; }
    [[nodiscard]] const std::vector<NodeId>& indices() const { return indices_; }

    [[nodiscard]] std::vector<bool> mask(SplitRole role) const;
    [[nodiscard]] std::size_t count(SplitRole role) const;
    [[nodiscard]] std::vector<NodeId> nodes_with(SplitRole role) const;

    /// Undirected edges as (u, v) with u < v, sorted.
    [[nodiscard]] std::vector<Edge> edge_list() const;
    /// Binary adjacency without self-loops as a dense matrix.
    [[nodiscard]] DenseMatrix dense_adjacency() const;

    [[nodiscard]] Graph with_roles(std::vector<SplitRole> roles) const;
    [[nodiscard]] Graph with_features(DenseMatrix features) const;
    [[nodiscard]] Graph with_edges(std::span<const Edge> edges) const;

    bool operator==(const Graph& other) const;

private:
    std::size_t num_nodes_ = 0;
    int num_classes_ = 0;
    std::size_t dropped_edges_ = 0;
    std::vector<std::size_t> indptr_{0};
    std::vector<NodeId> indices_;
    DenseMatrix features_;
    std::vector<int> labels_;
    std::vector<SplitRole> roles_;
};

struct NodeHomophily {
    double value = 0.0;
    /// False when the graph has no edges; value is then reported as 0.
    bool defined = false;
};

/// Mean over non-isolated nodes of the fraction of same-label neighbors.
NodeHomophily node_homophily(const Graph& g);

/// Fraction of undirected edges joining same-label endpoints; nullopt when the
/// graph has no edges.
std::optional<double> edge_homophily(const Graph& g);

/// D^(r-1) (A + I) D^(-r) with D the self-looped degree matrix.
/// r = 1/2 is the symmetric GCN operator, r = 0 is row-stochastic and r = 1
/// column-stochastic.
SparseMatrix normalized_adjacency(const Graph& g, double r);

/// Row-stochastic n x |Y| matrix of label beliefs.
class LabelDistribution {
public:
    LabelDistribution() = default;
    /// Validates non-negativity and unit row sums (within 1e-9).
    explicit LabelDistribution(DenseMatrix probs);

    /// One-hot rows for `known` nodes, uniform rows elsewhere.
    static LabelDistribution from_labels(std::span<const int> labels, const std::vector<bool>& known,
                                         int num_classes);

    [[nodiscard]] const DenseMatrix& matrix() const { return probs_; }
    [[nodiscard]] std::size_t rows() const { return probs_.rows(); }
    [[nodiscard]] std::size_t num_classes() const { return probs_.cols(); }
    [[nodiscard]] std::size_t predict(std::size_t node) const { return argmax_row(probs_, node); }

private:
    DenseMatrix probs_;
};

/// K-step non-parametric label propagation
///   Y^k_u = kappa Y^0_u + (1 - kappa) sum_{v in N(u)} (d_u d_v)^(-1/2) Y^{k-1}_v
/// with self-looped degrees d, rows renormalized to sum 1 after every step.
LabelDistribution label_propagation(const Graph& g, const LabelDistribution& init, double kappa, int steps);

struct SbmOptions {
    /// Scale of the per-class Gaussian feature means.
    double feature_signal = 1.0;
    /// Standard deviation of per-node feature noise.
    double feature_noise = 1.0;
};

/// Stochastic block model with balanced classes (label = node % classes).
/// Intra-class pairs connect with p_in, inter-class pairs with p_out.
Graph sbm_generate(std::size_t n, int classes, double p_in, double p_out, std::size_t feature_dim,
                   std::uint64_t seed, const SbmOptions& options = {});

} // namespace adafgl
