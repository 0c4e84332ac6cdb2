#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "adafgl/graph.hpp"
#include "adafgl/nn.hpp"
#include "adafgl/rng.hpp"

namespace testing {

using namespace adafgl;

// Erdos-Renyi graph with uniform random labels and Gaussian features.
inline Graph random_graph(std::size_t n, double p, int classes, std::size_t f, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Edge> edges;
    for (NodeId u = 0; u < n; ++u) {
        for (NodeId v = u + 1; v < n; ++v) {
            if (rng.bernoulli(p)) {
                edges.emplace_back(u, v);
            }
        }
    }
    std::vector<int> labels(n);
    for (auto& y : labels) {
        y = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    }
    DenseMatrix x(n, f);
    for (auto& v : x.values()) {
        v = rng.normal();
    }
    return Graph(n, edges, std::move(x), std::move(labels), {}, classes);
}

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    DenseMatrix m(rows, cols);
    for (auto& v : m.values()) {
        v = scale * rng.normal();
    }
    return m;
}

// Random biases. Zero biases put the pre-activation of a row whose inputs are
// all zero exactly on the ReLU kink, where central differences are meaningless.
inline void randomize_biases(ModelState& model, Rng& rng) {
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        for (auto& v : model.params()[2 * l + 1].value.values()) {
            v = 0.5 * rng.normal();
        }
    }
}

inline Graph with_random_roles(const Graph& g, std::uint64_t seed, double train = 0.5) {
    Rng rng(seed);
    std::vector<SplitRole> roles(g.num_nodes());
    for (auto& r : roles) {
        const double u = rng.uniform();
        r = u < train ? SplitRole::train : (u < train + (1 - train) / 2 ? SplitRole::val : SplitRole::test);
    }
    return g.with_roles(std::move(roles));
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
    }
    return worst;
}

// Central differences of `loss` with respect to every entry of `target`,
// compared against `analytic`. Returns the worst relative error, where the
// denominator is floored so that near-zero gradients compare absolutely.
inline double fd_relative_error(DenseMatrix& target, const DenseMatrix& analytic, const std::function<double()>& loss,
                                double eps = 1e-5, double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        double& v = target.values()[i];
        const double saved = v;
        v = saved + eps;
        const double up = loss();
        v = saved - eps;
        const double down = loss();
        v = saved;
        const double numeric = (up - down) / (2 * eps);
        const double a = analytic.values()[i];
        const double denom = std::max({std::abs(numeric), std::abs(a), floor});
        worst = std::max(worst, std::abs(numeric - a) / denom);
    }
    return worst;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("adafgl_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing
