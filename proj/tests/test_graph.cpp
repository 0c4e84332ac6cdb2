#include <doctest.h>

#include <cmath>

#include "adafgl/graph.hpp"
#include "support.hpp"

using namespace adafgl;
using testing::random_graph;

namespace {

Graph labeled(std::size_t n, std::vector<Edge> edges, std::vector<int> labels) {
    return Graph(n, edges, DenseMatrix(n, 1), std::move(labels));
}

double brute_edge_homophily(const Graph& g) {
    const DenseMatrix a = g.dense_adjacency();
    double same = 0, total = 0;
    for (std::size_t u = 0; u < g.num_nodes(); ++u) {
        for (std::size_t v = u + 1; v < g.num_nodes(); ++v) {
            if (a(u, v) != 0.0) {
                total += 1;
                same += g.labels()[u] == g.labels()[v] ? 1 : 0;
            }
        }
    }
    return same / total;
}

double brute_node_homophily(const Graph& g) {
    const DenseMatrix a = g.dense_adjacency();
    double sum = 0;
    std::size_t counted = 0;
    for (std::size_t u = 0; u < g.num_nodes(); ++u) {
        double deg = 0, same = 0;
        for (std::size_t v = 0; v < g.num_nodes(); ++v) {
            if (a(u, v) != 0.0) {
                deg += 1;
                same += g.labels()[u] == g.labels()[v] ? 1 : 0;
            }
        }
        if (deg > 0) {
            sum += same / deg;
            ++counted;
        }
    }
    return sum / static_cast<double>(counted);
}

// Y^k = kappa Y^0 + (1 - kappa) W Y^(k-1), row-renormalized, with W the
// self-looped symmetric weights restricted to true neighbors.
DenseMatrix dense_lp(const Graph& g, const DenseMatrix& y0, double kappa, int steps) {
    const std::size_t n = g.num_nodes();
    const DenseMatrix a = g.dense_adjacency();
    DenseMatrix w(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            w(i, j) = a(i, j) / std::sqrt((g.degree(i) + 1.0) * (g.degree(j) + 1.0));
        }
    }
    DenseMatrix y = y0;
    for (int s = 0; s < steps; ++s) {
        DenseMatrix next = matmul(w, y);
        for (std::size_t i = 0; i < n; ++i) {
            double total = 0;
            for (std::size_t c = 0; c < y.cols(); ++c) {
                next(i, c) = kappa * y0(i, c) + (1 - kappa) * next(i, c);
                total += next(i, c);
            }
            for (std::size_t c = 0; c < y.cols(); ++c) {
                next(i, c) /= total;
            }
        }
        y = next;
    }
    return y;
}

} // namespace

TEST_CASE("graph construction drops self-loops and duplicate edges") {
    const std::vector<Edge> edges{{0, 1}, {1, 0}, {1, 1}, {1, 2}, {0, 1}};
    const Graph g = labeled(3, edges, {0, 1, 0});
    CHECK(g.num_edges() == 2);
    CHECK(g.dropped_edges() == 3);
    CHECK(g.has_edge(1, 0));
    CHECK_FALSE(g.has_edge(0, 2));
    CHECK(g.num_classes() == 2);
    CHECK(g.count(SplitRole::none) == 3);
}

TEST_CASE("graph construction validates input") {
    const std::vector<Edge> out_of_range{{0, 5}};
    CHECK_THROWS_AS(labeled(3, out_of_range, {0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(labeled(3, {}, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(labeled(2, {}, {0, -1}), std::invalid_argument);
}

TEST_CASE("node homophily") {
    SUBCASE("triangle of one class") {
        CHECK(node_homophily(labeled(3, {{0, 1}, {1, 2}, {0, 2}}, {0, 0, 0})).value == 1.0);
    }
    SUBCASE("single heterophilous edge") {
        CHECK(node_homophily(labeled(2, {{0, 1}}, {0, 1})).value == 0.0);
    }
    SUBCASE("star with leaves 0, 0, 1") {
        const Graph g = labeled(4, {{0, 1}, {0, 2}, {0, 3}}, {0, 0, 0, 1});
        const double oracle = brute_node_homophily(g);
        CHECK(oracle == doctest::Approx(0.6666666666666666).epsilon(1e-15));
        CHECK(node_homophily(g).value == doctest::Approx(0.6666666666666666).epsilon(1e-15));
    }
    SUBCASE("edgeless graph is undefined") {
        const auto h = node_homophily(labeled(3, {}, {0, 1, 0}));
        CHECK_FALSE(h.defined);
        CHECK(h.value == 0.0);
    }
}

TEST_CASE("edge homophily") {
    CHECK(*edge_homophily(labeled(3, {{0, 1}, {1, 2}}, {2, 2, 2})) == 1.0);
    CHECK(*edge_homophily(labeled(4, {{0, 1}, {0, 3}, {2, 1}, {2, 3}}, {0, 1, 0, 1})) == 0.0);
    CHECK_FALSE(edge_homophily(labeled(2, {}, {0, 1})).has_value());
}

TEST_CASE("homophily matches brute-force counting on random graphs") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Graph g = random_graph(5 + seed % 20, 0.3, 3, 1, seed);
        if (g.num_edges() == 0) {
            continue;
        }
        CHECK(*edge_homophily(g) == brute_edge_homophily(g));
        CHECK(node_homophily(g).value == doctest::Approx(brute_node_homophily(g)).epsilon(1e-14));
    }
}

TEST_CASE("normalized adjacency") {
    SUBCASE("isolated node keeps its self-loop") {
        const Graph g = labeled(1, {}, {0});
        CHECK(normalized_adjacency(g, 0.5).to_dense() == DenseMatrix{{1.0}});
    }
    SUBCASE("single edge, r = 1/2") {
        const DenseMatrix a = normalized_adjacency(labeled(2, {{0, 1}}, {0, 1}), 0.5).to_dense();
        for (const double v : a.values()) {
            CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
        }
    }
    SUBCASE("r = 0 is row-stochastic and r = 1 column-stochastic") {
        const Graph g = random_graph(12, 0.3, 2, 1, 4);
        const DenseMatrix rows = normalized_adjacency(g, 0.0).to_dense();
        const DenseMatrix cols = normalized_adjacency(g, 1.0).to_dense();
        const DenseMatrix row_sums = matmul(rows, DenseMatrix(12, 1, 1.0));
        const DenseMatrix col_sums = column_sums(cols);
        for (std::size_t i = 0; i < 12; ++i) {
            CHECK(row_sums(i, 0) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(col_sums(0, i) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("label propagation") {
    const Graph path = labeled(3, {{0, 1}, {1, 2}}, {0, 1, 1});
    const std::vector<bool> known{true, false, false};
    const auto init = LabelDistribution::from_labels(path.labels(), known, 2);

    SUBCASE("zero steps and kappa 1 leave the input unchanged") {
        CHECK(label_propagation(path, init, 0.5, 0).matrix() == init.matrix());
        CHECK(label_propagation(path, init, 1.0, 7).matrix() == init.matrix());
    }
    SUBCASE("three-node path, two steps") {
        const DenseMatrix got = label_propagation(path, init, 0.5, 2).matrix();
        const DenseMatrix oracle = dense_lp(path, init.matrix(), 0.5, 2);
        CHECK(testing::max_abs_diff(got, oracle) < 1e-10);
        CHECK(got(0, 0) == doctest::Approx(0.88762756430420542).epsilon(1e-12));
        CHECK(got(1, 0) == doctest::Approx(0.57979589711327129).epsilon(1e-12));
        CHECK(got(2, 0) == doctest::Approx(0.5325765385825233).epsilon(1e-12));
    }
    SUBCASE("random graphs match the dense oracle") {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            const Graph g = random_graph(10 + seed, 0.2, 3, 1, 100 + seed);
            std::vector<bool> mask(g.num_nodes());
            for (std::size_t i = 0; i < mask.size(); i += 2) {
                mask[i] = true;
            }
            const auto y0 = LabelDistribution::from_labels(g.labels(), mask, 3);
            const auto got = label_propagation(g, y0, 0.3, 6);
            CHECK(testing::max_abs_diff(got.matrix(), dense_lp(g, y0.matrix(), 0.3, 6)) < 1e-10);
            for (std::size_t i = 0; i < g.num_nodes(); ++i) {
                double s = 0;
                for (const double v : got.matrix().row(i)) {
                    s += v;
                }
                CHECK(std::abs(s - 1.0) < 1e-9);
            }
        }
    }
}

TEST_CASE("label distribution validates rows") {
    CHECK_THROWS_AS(LabelDistribution(DenseMatrix{{0.5, 0.6}}), std::invalid_argument);
    CHECK_THROWS_AS(LabelDistribution(DenseMatrix{{1.5, -0.5}}), std::invalid_argument);
}

TEST_CASE("sbm generator") {
    CHECK(*edge_homophily(sbm_generate(40, 2, 1.0, 0.0, 2, 1)) == 1.0);
    CHECK(*edge_homophily(sbm_generate(40, 2, 0.0, 1.0, 2, 1)) == 0.0);

    const Graph g = sbm_generate(400, 2, 0.1, 0.01, 4, 7);
    // Expected same-label share of edges from the pair counts of a balanced
    // two-class split: 2 C(200, 2) intra pairs against 200^2 inter pairs.
    const double intra = 0.1 * 2 * (200.0 * 199 / 2);
    const double inter = 0.01 * 200.0 * 200.0;
    const double expected = intra / (intra + inter);
    CHECK(expected == doctest::Approx(0.9087).epsilon(1e-4));
    CHECK(std::abs(*edge_homophily(g) - expected) <= 0.05);
    CHECK(*edge_homophily(g) == brute_edge_homophily(g));
    CHECK(sbm_generate(50, 3, 0.2, 0.05, 3, 9) == sbm_generate(50, 3, 0.2, 0.05, 3, 9));
}
