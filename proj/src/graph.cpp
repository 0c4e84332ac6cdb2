#include "adafgl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "adafgl/rng.hpp"

namespace adafgl {

Graph::Graph(std::size_t num_nodes, std::span<const Edge> edges, DenseMatrix features, std::vector<int> labels,
             std::vector<SplitRole> roles, int num_classes)
    : num_nodes_(num_nodes), features_(std::move(features)), labels_(std::move(labels)), roles_(std::move(roles)) {
    if (features_.empty() && features_.rows() == 0) {
        features_ = DenseMatrix(num_nodes_, 0);
    }
    if (features_.rows() != num_nodes_) {
        throw std::invalid_argument("Graph: feature rows do not match node count");
    }
    if (labels_.size() != num_nodes_) {
        throw std::invalid_argument("Graph: label count does not match node count");
    }
    if (roles_.empty()) {
        roles_.assign(num_nodes_, SplitRole::none);
    }
    if (roles_.size() != num_nodes_) {
        throw std::invalid_argument("Graph: split role count does not match node count");
    }
    int max_label = -1;
    for (const int y : labels_) {
        if (y < 0) {
            throw std::invalid_argument("Graph: negative label");
        }
        max_label = std::max(max_label, y);
    }
    num_classes_ = num_classes > 0 ? num_classes : max_label + 1;
    if (max_label >= num_classes_) {
        std::ostringstream msg;
        msg << "Graph: label " << max_label << " out of range for " << num_classes_ << " classes";
        throw std::invalid_argument(msg.str());
    }

    std::vector<Edge> arcs;
    arcs.reserve(edges.size() * 2);
    for (const auto& [u, v] : edges) {
        if (u >= num_nodes_ || v >= num_nodes_) {
            std::ostringstream msg;
            msg << "Graph: edge (" << u << ", " << v << ") has an endpoint outside [0, " << num_nodes_ << ")";
            throw std::invalid_argument(msg.str());
        }
        if (u == v) {
            ++dropped_edges_;
            continue;
        }
        arcs.emplace_back(u, v);
        arcs.emplace_back(v, u);
    }
    std::sort(arcs.begin(), arcs.end());
    const auto unique_end = std::unique(arcs.begin(), arcs.end());
    const auto duplicates = static_cast<std::size_t>(arcs.end() - unique_end);
    dropped_edges_ += duplicates / 2;
    arcs.erase(unique_end, arcs.end());

    indptr_.assign(num_nodes_ + 1, 0);
    indices_.reserve(arcs.size());
    for (const auto& [u, v] : arcs) {
        ++indptr_[u + 1];
        indices_.push_back(v);
    }
    for (std::size_t i = 0; i < num_nodes_; ++i) {
        indptr_[i + 1] += indptr_[i];
    }
}

bool Graph::has_edge(NodeId u, NodeId v) const {
    const auto nbrs = neighbors(u);
    return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

std::vector<bool> Graph::mask(SplitRole role) const {
    std::vector<bool> out(num_nodes_);
    for (std::size_t i = 0; i < num_nodes_; ++i) {
        out[i] = roles_[i] == role;
    }
    return out;
}

std::size_t Graph::count(SplitRole role) const {
    return static_cast<std::size_t>(std::count(roles_.begin(), roles_.end(), role));
}

std::vector<NodeId> Graph::nodes_with(SplitRole role) const {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < num_nodes_; ++i) {
        if (roles_[i] == role) {
            out.push_back(static_cast<NodeId>(i));
        }
    }
    return out;
}

std::vector<Edge> Graph::edge_list() const {
    std::vector<Edge> out;
    out.reserve(num_edges());
    for (NodeId u = 0; u < num_nodes_; ++u) {
        for (const NodeId v : neighbors(u)) {
            if (u < v) {
                out.emplace_back(u, v);
            }
        }
    }
    return out;
}

DenseMatrix Graph::dense_adjacency() const {
    DenseMatrix out(num_nodes_, num_nodes_);
    for (NodeId u = 0; u < num_nodes_; ++u) {
        for (const NodeId v : neighbors(u)) {
            out(u, v) = 1.0;
        }
    }
    return out;
}

Graph Graph::with_roles(std::vector<SplitRole> roles) const {
    Graph out = *this;
    if (roles.size() != num_nodes_) {
        throw std::invalid_argument("Graph::with_roles: role count does not match node count");
    }
    out.roles_ = std::move(roles);
    return out;
}

Graph Graph::with_features(DenseMatrix features) const {
    if (features.rows() != num_nodes_) {
        throw std::invalid_argument("Graph::with_features: feature rows do not match node count");
    }
    Graph out = *this;
    out.features_ = std::move(features);
    return out;
}

Graph Graph::with_edges(std::span<const Edge> edges) const {
    return Graph(num_nodes_, edges, features_, labels_, roles_, num_classes_);
}

bool Graph::operator==(const Graph& other) const {
    return num_nodes_ == other.num_nodes_ && num_classes_ == other.num_classes_ && indptr_ == other.indptr_ &&
           indices_ == other.indices_ && features_ == other.features_ && labels_ == other.labels_ &&
           roles_ == other.roles_;
}

NodeHomophily node_homophily(const Graph& g) {
    double total = 0.0;
    std::size_t counted = 0;
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
        const auto nbrs = g.neighbors(u);
        if (nbrs.empty()) {
            continue;
        }
        std::size_t same = 0;
        for (const NodeId v : nbrs) {
            same += g.labels()[u] == g.labels()[v] ? 1 : 0;
        }
        total += static_cast<double>(same) / static_cast<double>(nbrs.size());
        ++counted;
    }
    if (counted == 0) {
        return {0.0, false};
    }
    return {total / static_cast<double>(counted), true};
}

std::optional<double> edge_homophily(const Graph& g) {
    if (g.num_edges() == 0) {
        return std::nullopt;
    }
    std::size_t same = 0;
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
        for (const NodeId v : g.neighbors(u)) {
            if (u < v && g.labels()[u] == g.labels()[v]) {
                ++same;
            }
        }
    }
    return static_cast<double>(same) / static_cast<double>(g.num_edges());
}

SparseMatrix normalized_adjacency(const Graph& g, double r) {
    if (!(r >= 0.0 && r <= 1.0)) {
        throw std::invalid_argument("normalized_adjacency: exponent must lie in [0, 1]");
    }
    const std::size_t n = g.num_nodes();
    std::vector<double> left(n);
    std::vector<double> right(n);
    for (NodeId u = 0; u < n; ++u) {
        const auto d = static_cast<double>(g.degree(u) + 1);
        left[u] = std::pow(d, r - 1.0);
        right[u] = std::pow(d, -r);
    }
    std::vector<std::size_t> indptr(n + 1, 0);
    std::vector<std::uint32_t> indices;
    std::vector<double> values;
    indices.reserve(2 * g.num_edges() + n);
    values.reserve(2 * g.num_edges() + n);
    for (NodeId u = 0; u < n; ++u) {
        bool self_done = false;
        for (const NodeId v : g.neighbors(u)) {
            if (!self_done && u < v) {
                indices.push_back(u);
                values.push_back(left[u] * right[u]);
                self_done = true;
            }
            indices.push_back(v);
            values.push_back(left[u] * right[v]);
        }
        if (!self_done) {
            indices.push_back(u);
            values.push_back(left[u] * right[u]);
        }
        indptr[u + 1] = indices.size();
    }
    return {n, n, std::move(indptr), std::move(indices), std::move(values)};
}

LabelDistribution::LabelDistribution(DenseMatrix probs) : probs_(std::move(probs)) {
    for (std::size_t i = 0; i < probs_.rows(); ++i) {
        double total = 0.0;
        for (const double v : probs_.row(i)) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw std::invalid_argument("LabelDistribution: entries must be finite and non-negative");
            }
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw std::invalid_argument("LabelDistribution: rows must sum to 1");
        }
    }
}

LabelDistribution LabelDistribution::from_labels(std::span<const int> labels, const std::vector<bool>& known,
                                                 int num_classes) {
    if (labels.size() != known.size() || num_classes <= 0) {
        throw std::invalid_argument("LabelDistribution::from_labels: bad arguments");
    }
    const auto c = static_cast<std::size_t>(num_classes);
    DenseMatrix probs(labels.size(), c, 1.0 / static_cast<double>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (known[i]) {
            auto r = probs.row(i);
            std::fill(r.begin(), r.end(), 0.0);
            r[static_cast<std::size_t>(labels[i])] = 1.0;
        }
    }
    return LabelDistribution(std::move(probs));
}

LabelDistribution label_propagation(const Graph& g, const LabelDistribution& init, double kappa, int steps) {
    if (!(kappa >= 0.0 && kappa <= 1.0)) {
        throw std::invalid_argument("label_propagation: kappa must lie in [0, 1]");
    }
    if (init.rows() != g.num_nodes()) {
        throw std::invalid_argument("label_propagation: distribution rows do not match node count");
    }
    if (steps <= 0 || kappa == 1.0) {
        return init;
    }
    const std::size_t n = g.num_nodes();
    const std::size_t c = init.num_classes();
    std::vector<double> inv_sqrt_degree(n);
    for (NodeId u = 0; u < n; ++u) {
        inv_sqrt_degree[u] = 1.0 / std::sqrt(static_cast<double>(g.degree(u) + 1));
    }
    const DenseMatrix& y0 = init.matrix();
    DenseMatrix current = y0;
    DenseMatrix next(n, c);
    for (int step = 0; step < steps; ++step) {
        for (NodeId u = 0; u < n; ++u) {
            auto dst = next.row(u);
            const auto base = y0.row(u);
            for (std::size_t j = 0; j < c; ++j) {
                dst[j] = 0.0;
            }
            for (const NodeId v : g.neighbors(u)) {
                const double w = inv_sqrt_degree[u] * inv_sqrt_degree[v];
                const auto src = current.row(v);
                for (std::size_t j = 0; j < c; ++j) {
                    dst[j] += w * src[j];
                }
            }
            double total = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                dst[j] = kappa * base[j] + (1.0 - kappa) * dst[j];
                total += dst[j];
            }
            for (std::size_t j = 0; j < c; ++j) {
                dst[j] /= total;
            }
        }
        std::swap(current, next);
    }
    return LabelDistribution(std::move(current));
}

Graph sbm_generate(std::size_t n, int classes, double p_in, double p_out, std::size_t feature_dim,
                   std::uint64_t seed, const SbmOptions& options) {
    if (classes <= 0 || n < static_cast<std::size_t>(classes)) {
        throw std::invalid_argument("sbm_generate: need at least one node per class");
    }
    if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0)) {
        throw std::invalid_argument("sbm_generate: probabilities must lie in [0, 1]");
    }
    Rng edge_rng(Rng::derive(seed, 1));
    Rng feature_rng(Rng::derive(seed, 2));

    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
    }
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            const double p = labels[u] == labels[v] ? p_in : p_out;
            if (edge_rng.uniform() < p) {
                edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
            }
        }
    }
    DenseMatrix means(static_cast<std::size_t>(classes), feature_dim);
    for (auto& v : means.values()) {
        v = options.feature_signal * feature_rng.normal();
    }
    DenseMatrix features(n, feature_dim);
    for (std::size_t i = 0; i < n; ++i) {
        const auto mean = means.row(static_cast<std::size_t>(labels[i]));
        auto dst = features.row(i);
        for (std::size_t j = 0; j < feature_dim; ++j) {
            dst[j] = mean[j] + options.feature_noise * feature_rng.normal();
        }
    }
    return Graph(n, edges, std::move(features), std::move(labels), {}, classes);
}

} // namespace adafgl
