#include <doctest.h>

#include <cmath>
#include <numeric>

#include "adafgl/adafgl.hpp"
#include "adafgl/io.hpp"
#include "support.hpp"

using namespace adafgl;
using testing::fd_relative_error;
using testing::random_matrix;

namespace {

ClientSubgraph whole(const Graph& g) {
    std::vector<NodeId> all(g.num_nodes());
    std::iota(all.begin(), all.end(), 0);
    return induced_subgraph(g, all, 0);
}

void check_rows_sum_to_one(const DenseMatrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        CHECK(std::abs(std::accumulate(r.begin(), r.end(), 0.0) - 1.0) < 1e-9);
    }
}

double worst_param_error(ModelState& model, const std::function<double()>& loss) {
    double worst = 0;
    for (auto& p : model.params()) {
        const DenseMatrix analytic = p.grad;
        worst = std::max(worst, fd_relative_error(p.value, analytic, loss));
    }
    return worst;
}

DenseMatrix random_propagation(std::size_t n, Rng& rng) {
    DenseMatrix p(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            p(i, j) = p(j, i) = rng.uniform();
        }
    }
    return scale_propagation(p);
}

} // namespace

TEST_CASE("topology blending") {
    SUBCASE("alpha 1 gives the degree-normalized adjacency") {
        const Graph g = testing::random_graph(9, 0.4, 2, 2, 1);
        Rng rng(2);
        const DenseMatrix probs = softmax_rows(random_matrix(9, 2, rng));
        const DenseMatrix p = blend_topology(g, probs, 1.0);
        const DenseMatrix a = g.dense_adjacency();
        for (std::size_t i = 0; i < 9; ++i) {
            for (std::size_t j = 0; j < 9; ++j) {
                const double expected =
                    a(i, j) == 0.0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(g.degree(i) * g.degree(j)));
                CHECK(p(i, j) == doctest::Approx(expected).epsilon(1e-14));
            }
        }
    }
    SUBCASE("alpha 0 with identical predictions is constant off the diagonal") {
        const Graph g = testing::random_graph(6, 0.5, 3, 2, 3);
        DenseMatrix probs(6, 3);
        for (std::size_t i = 0; i < 6; ++i) {
            probs(i, 0) = 0.2, probs(i, 1) = 0.5, probs(i, 2) = 0.3;
        }
        const DenseMatrix p = blend_topology(g, probs, 0.0);
        for (std::size_t i = 0; i < 6; ++i) {
            for (std::size_t j = 0; j < 6; ++j) {
                CHECK(p(i, j) == doctest::Approx(i == j ? 0.0 : 1.0 / 5.0).epsilon(1e-14));
            }
        }
    }
    SUBCASE("random clients: symmetric, zero diagonal, matches the dense scaling") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Graph g = testing::random_graph(8, 0.35, 3, 4, seed);
            const auto sub = whole(g);
            const std::vector<std::size_t> dims{4, 5, 3};
            const auto topo = optimize_topology(sub, make_gcn(dims, seed), 0.4);
            const DenseMatrix& p = topo.propagation;
            DenseMatrix raw = matmul_nt(topo.extractor_probs, topo.extractor_probs);
            raw *= 0.6;
            axpy(0.4, g.dense_adjacency(), raw);
            std::vector<double> d(8, 0.0);
            for (std::size_t i = 0; i < 8; ++i) {
                raw(i, i) = 0;
                d[i] = std::accumulate(raw.row(i).begin(), raw.row(i).end(), 0.0);
            }
            for (std::size_t i = 0; i < 8; ++i) {
                CHECK(p(i, i) == 0.0);
                // Rows of D^-1 P are stochastic.
                double stochastic = 0;
                for (std::size_t j = 0; j < 8; ++j) {
                    CHECK(p(i, j) == p(j, i));
                    CHECK(p(i, j) >= 0.0);
                    CHECK(p(i, j) == doctest::Approx(raw(i, j) / std::sqrt(d[i] * d[j])).epsilon(1e-12));
                    stochastic += raw(i, j) / d[i];
                }
                CHECK(stochastic == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
    SUBCASE("clients above the dense cap are refused") {
        const Graph g = testing::random_graph(12, 0.3, 2, 2, 1);
        const std::vector<std::size_t> dims{2, 2, 2};
        CHECK_THROWS_AS(optimize_topology(whole(g), make_gcn(dims, 1), 0.5, 10), std::length_error);
    }
}

TEST_CASE("knowledge smoothing") {
    SUBCASE("k = 1 over an empty propagation matrix is the identity") {
        Rng rng(1);
        const DenseMatrix x = random_matrix(5, 3, rng);
        const DenseMatrix op = smoothing_operator(DenseMatrix(5, 5));
        CHECK(op == DenseMatrix::identity(5));
        CHECK(propagate_features(op, x, 1).front() == x);
    }
    SUBCASE("stack matches repeated dense multiplication") {
        Rng rng(2);
        const DenseMatrix op = smoothing_operator(random_propagation(7, rng));
        const DenseMatrix x = random_matrix(7, 4, rng);
        const auto stack = propagate_features(op, x, 4);
        DenseMatrix power = DenseMatrix::identity(7);
        for (int j = 0; j < 4; ++j) {
            power = matmul(power, op);
            CHECK(testing::max_abs_diff(stack[static_cast<std::size_t>(j)], matmul(power, x)) < 1e-10);
        }
    }
    SUBCASE("zero weights give a zero embedding") {
        Rng rng(3);
        const DenseMatrix op = smoothing_operator(random_propagation(5, rng));
        const DenseMatrix x = random_matrix(5, 2, rng);
        const std::vector<std::size_t> dims{6, 4, 3};
        ModelState theta = make_mlp(dims, 1);
        for (auto& p : theta.params()) {
            p.value.fill(0);
        }
        CHECK(knowledge_smoothing(op, x, 3, theta).embedding == DenseMatrix(5, 3));
        CHECK(knowledge_forward(op, x, 3, theta) == DenseMatrix(5, 3));
    }
    SUBCASE("factored forward equals the explicit stack and backward matches finite differences") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(seed);
            const std::size_t n = 4 + seed % 4, f = 2 + seed % 3;
            const int k = 1 + static_cast<int>(seed % 4);
            const DenseMatrix op = smoothing_operator(random_propagation(n, rng));
            const DenseMatrix x = random_matrix(n, f, rng);
            const std::vector<std::size_t> dims{static_cast<std::size_t>(k) * f, 5, 3};
            ModelState theta = make_mlp(dims, seed);
            testing::randomize_biases(theta, rng);
            const DenseMatrix target = random_matrix(n, 3, rng);
            KnowledgeCache cache;
            const DenseMatrix h = knowledge_forward(op, x, k, theta, &cache);
            CHECK(testing::max_abs_diff(h, knowledge_smoothing(op, x, k, theta).embedding) < 1e-10);
            const auto l = frobenius_loss(h, target);
            knowledge_backward(op, x, k, cache, l.grad, theta);
            CHECK(worst_param_error(theta, [&] { return frobenius_loss(knowledge_forward(op, x, k, theta), target).value; }) <
                  1e-4);
        }
    }
}

TEST_CASE("homophilous branch") {
    SUBCASE("matching knowledge reproduces the extractor") {
        Rng rng(1);
        const DenseMatrix logits = random_matrix(4, 3, rng);
        const DenseMatrix probs = softmax_rows(logits);
        CHECK(testing::max_abs_diff(homo_forward(logits, probs), probs) < 1e-15);
        CHECK(knowledge_preserving_loss(logits, probs).value < 1e-15);
        check_rows_sum_to_one(homo_forward(logits, softmax_rows(random_matrix(4, 3, rng))));
    }
    SUBCASE("two-class hand example") {
        const DenseMatrix logits{{std::log(0.8), std::log(0.2)}};
        const DenseMatrix out = homo_forward(logits, DenseMatrix{{0.4, 0.6}});
        CHECK(out(0, 0) == doctest::Approx(0.6).epsilon(1e-14));
        CHECK(out(0, 1) == doctest::Approx(0.4).epsilon(1e-14));
    }
    SUBCASE("knowledge loss gradient and descent") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(seed);
            DenseMatrix h = random_matrix(5, 3, rng);
            const DenseMatrix target = softmax_rows(random_matrix(5, 3, rng));
            const auto l = knowledge_preserving_loss(h, target);
            CHECK(fd_relative_error(h, l.grad, [&] { return knowledge_preserving_loss(h, target).value; }) < 1e-4);
        }
        Rng rng(99);
        DenseMatrix h = random_matrix(6, 4, rng);
        const DenseMatrix target = softmax_rows(random_matrix(6, 4, rng));
        double previous = knowledge_preserving_loss(h, target).value;
        for (int step = 0; step < 50; ++step) {
            const auto l = knowledge_preserving_loss(h, target);
            axpy(-0.1, l.grad, h);
            const double now = knowledge_preserving_loss(h, target).value;
            CHECK(now < previous);
            previous = now;
        }
    }
}

TEST_CASE("heterophilous branch") {
    Rng rng(4);
    const std::size_t n = 6, c = 3;
    const DenseMatrix knowledge = random_matrix(n, c, rng);
    const DenseMatrix prop = random_propagation(n, rng);

    SUBCASE("zero propagation with beta 1 leaves each layer linear") {
        const ModelState theta = make_message_layers(c, 2, 1);
        HeteroCache cache;
        const DenseMatrix out = message_forward(knowledge, DenseMatrix(n, n), 1.0, theta, &cache);
        DenseMatrix expected = knowledge;
        for (std::size_t l = 0; l < 2; ++l) {
            expected = linear_forward(expected, theta.weight(l), theta.bias(l));
        }
        CHECK(testing::max_abs_diff(out, expected) < 1e-15);
        for (const auto& p : cache.propagation) {
            CHECK(p == DenseMatrix(n, n));
        }
    }
    SUBCASE("beta 1 keeps the propagation matrix") {
        HeteroCache cache;
        message_forward(knowledge, prop, 1.0, make_message_layers(c, 3, 2), &cache);
        REQUIRE(cache.propagation.size() == 3);
        for (const auto& p : cache.propagation) {
            CHECK(p == prop);
        }
    }
    SUBCASE("no layers returns the knowledge embedding") {
        const ModelState none = make_message_layers(c, 0, 1);
        CHECK(none.params().empty());
        CHECK(message_forward(knowledge, prop, 0.5, none) == knowledge);
    }
    SUBCASE("normalized messages have unit rows") {
        HeteroCache cache;
        message_forward(knowledge, prop, 0.5, make_message_layers(c, 2, 3), &cache);
        for (const auto& nrm : cache.normalized) {
            for (std::size_t i = 0; i < n; ++i) {
                double sq = 0;
                for (const double v : nrm.row(i)) {
                    sq += v * v;
                }
                CHECK(sq == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
    SUBCASE("combined output is a distribution and backward matches finite differences") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng r(seed);
            DenseMatrix h = random_matrix(n, c, r);
            const DenseMatrix feat = random_matrix(n, c, r);
            const DenseMatrix p = random_propagation(n, r);
            const double beta = r.uniform();
            ModelState theta = make_message_layers(c, 1 + static_cast<int>(seed % 3), seed);
            const DenseMatrix target = random_matrix(n, c, r);
            check_rows_sum_to_one(hetero_combine(feat, h, message_forward(h, p, beta, theta)));
            auto loss = [&] { return frobenius_loss(message_forward(h, p, beta, theta), target).value; };
            HeteroCache cache;
            const auto l = frobenius_loss(message_forward(h, p, beta, theta, &cache), target);
            const DenseMatrix dh = message_backward(cache, beta, l.grad, theta);
            CHECK(worst_param_error(theta, loss) < 1e-4);
            CHECK(fd_relative_error(h, dh, loss) < 1e-4);
        }
    }
}

TEST_CASE("adaptive combination") {
    const DenseMatrix ho{{0.7, 0.3}, {0.1, 0.9}};
    const DenseMatrix he{{0.2, 0.8}, {0.5, 0.5}};
    CHECK(adaptive_combine(ho, he, 1.0) == ho);
    CHECK(adaptive_combine(ho, he, 0.0) == he);
    const DenseMatrix mid = adaptive_combine(ho, he, 0.5);
    for (std::size_t i = 0; i < ho.size(); ++i) {
        CHECK(mid.values()[i] == doctest::Approx((ho.values()[i] + he.values()[i]) / 2).epsilon(1e-15));
    }
}

TEST_CASE("homophily confidence score") {
    SUBCASE("two single-class cliques") {
        std::vector<Edge> edges;
        for (NodeId base : {0u, 5u}) {
            for (NodeId i = 0; i < 5; ++i) {
                for (NodeId j = i + 1; j < 5; ++j) {
                    edges.emplace_back(base + i, base + j);
                }
            }
        }
        const Graph g(10, edges, DenseMatrix(10, 1), {0, 0, 0, 0, 0, 1, 1, 1, 1, 1},
                      std::vector<SplitRole>(10, SplitRole::train));
        const auto report = compute_hcs(g, 0.5, 5, 0.5, 3);
        CHECK(report.masked == 5);
        CHECK(report.informative);
        CHECK(report.hcs == 1.0);
        CHECK(report.accuracy_trace.size() == 6);
    }
    SUBCASE("bipartite two-class graph") {
        std::vector<Edge> edges;
        for (NodeId u = 0; u < 10; u += 2) {
            for (NodeId v = 1; v < 10; v += 2) {
                edges.emplace_back(u, v);
            }
        }
        std::vector<int> labels(10);
        for (std::size_t i = 0; i < 10; ++i) {
            labels[i] = static_cast<int>(i % 2);
        }
        const Graph g(10, edges, DenseMatrix(10, 1), labels, std::vector<SplitRole>(10, SplitRole::train));
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            CHECK(compute_hcs(g, 0.5, 5, 0.5, seed).hcs <= 0.2);
        }
    }
    SUBCASE("isolated masked nodes fall to the lowest class") {
        const Graph g(4, std::vector<Edge>{}, DenseMatrix(4, 1), {0, 1, 1, 0},
                      std::vector<SplitRole>(4, SplitRole::train));
        const auto report = compute_hcs(g, 0.5, 5, 1.0, 1);
        CHECK(report.masked == 4);
        CHECK(report.hcs == 0.5);
    }
    SUBCASE("fewer than two train nodes") {
        const Graph g(3, std::vector<Edge>{{0, 1}}, DenseMatrix(3, 1), {0, 1, 0},
                      {SplitRole::train, SplitRole::test, SplitRole::val});
        const auto report = compute_hcs(g, 0.5, 5, 0.5, 1);
        CHECK(report.hcs == 0.5);
        CHECK_FALSE(report.informative);
    }
}

TEST_CASE("step 2 composite backward matches finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 5 + seed % 4;
        Graph g = testing::with_random_roles(testing::random_graph(n, 0.4, 3, 3, seed), seed);
        auto roles = g.roles();
        roles[0] = SplitRole::train;
        g = g.with_roles(roles);
        const auto sub = whole(g);
        AdaFglConfig cfg;
        cfg.hidden = 4;
        cfg.k = 1 + static_cast<int>(seed % 3);
        cfg.layers = static_cast<int>(seed % 3);
        cfg.beta = 0.3;
        cfg.seed = seed;
        cfg.knowledge_scale_hcs = seed % 2 == 1;
        const std::vector<std::size_t> dims{3, 4, 3};
        const auto topo = optimize_topology(sub, make_gcn(dims, seed + 50), 0.5);
        Rng rng(seed);
        const auto ctx = make_step2_context(sub, topo, rng.uniform(), cfg);
        Step2Model model = Step2Model::create(3, 3, cfg);
        testing::randomize_biases(model.knowledge, rng);
        testing::randomize_biases(model.feature, rng);
        testing::randomize_biases(model.message, rng);
        model.zero_grad();
        model.run(ctx, true);
        auto loss = [&] { return model.run(ctx, false).loss(ctx.knowledge_scale); };
        CHECK(worst_param_error(model.knowledge, loss) < 1e-3);
        CHECK(worst_param_error(model.feature, loss) < 1e-3);
        CHECK(worst_param_error(model.message, loss) < 1e-3);
    }
}

TEST_CASE("step 2 training") {
    SbmOptions opt;
    opt.feature_signal = 1.0;
    const Graph g = io::make_masks(sbm_generate(150, 3, 0.12, 0.004, 6, 3, opt), {0.3, 0.2, 0.5}, 1);
    const auto sub = whole(g);
    const std::vector<std::size_t> dims{6, 16, 3};
    const ModelState extractor = make_gcn(dims, 9);

    SUBCASE("zero epochs record the untrained combination") {
        AdaFglConfig cfg;
        cfg.epochs = 0;
        const auto r = step2_train(sub, extractor, cfg);
        REQUIRE(r.trace.size() == 1);
        CHECK(r.best_epoch == 0);
        CHECK(r.test_acc == r.trace[0].test_acc);
        CHECK(r.tv_to_homo >= 0.0);
    }
    SUBCASE("degenerate settings train and are deterministic") {
        AdaFglConfig cfg;
        cfg.epochs = 5;
        cfg.alpha = 1.0;
        cfg.beta = 1.0;
        cfg.layers = 0;
        const auto a = step2_train(sub, extractor, cfg);
        const auto b = step2_train(sub, extractor, cfg);
        CHECK(a.trace.size() == 6);
        CHECK(a.test_acc == b.test_acc);
        CHECK(a.trace.back().loss == b.trace.back().loss);
        CHECK(a.trace.back().loss < a.trace.front().loss);
    }
    SUBCASE("best epoch is the first strict validation maximum") {
        AdaFglConfig cfg;
        cfg.epochs = 15;
        const auto r = step2_train(sub, extractor, cfg);
        double best = -1;
        int epoch = 0;
        for (const auto& t : r.trace) {
            if (t.val_acc > best) {
                best = t.val_acc;
                epoch = t.epoch;
            }
        }
        CHECK(r.best_epoch == epoch);
        CHECK(r.val_acc == best);
    }
    SUBCASE("invalid settings") {
        AdaFglConfig cfg;
        cfg.alpha = 1.5;
        CHECK_THROWS_AS(step2_train(sub, extractor, cfg), std::invalid_argument);
    }
}

TEST_CASE("step 2 against the extractor alone on sbm clients") {
    // Paired runs over five seeds. One test node is worth under a point here,
    // so the comparison is on the mean gap.
    auto paired_gap = [](bool hetero, double signal) {
        double gap = 0;
        for (std::uint64_t s = 0; s < 5; ++s) {
            SbmOptions opt;
            opt.feature_signal = signal;
            const Graph g = io::make_masks(
                sbm_generate(300, 3, hetero ? 0.04 : 0.08, hetero ? 0.01 : 0.003, 16, s, opt), {0.2, 0.4, 0.4}, s);
            FederatedTask task;
            if (hetero) {
                task = structure_noniid_split(g, 2, 0.0, 1.0, s);
                REQUIRE(task.injection_log[0].mode == InjectionMode::hetero);
                REQUIRE(*edge_homophily(task.clients[0].graph) < 0.4);
            } else {
                task.global_num_nodes = g.num_nodes();
                task.clients.push_back(whole(g));
                task.injection_log.push_back({});
                task.promoted_train.push_back(0);
                REQUIRE(*edge_homophily(g) >= 0.9);
            }
            FederationConfig fc;
            fc.seed = s;
            const auto fed = run_federation(task, fc);
            AdaFglConfig ac;
            ac.seed = s;
            const auto r = step2_train(task.clients[0], fed.global, ac);
            gap += r.test_acc - r.extractor_test_acc;
        }
        return gap / 5.0;
    };
    SUBCASE("homophilous client keeps extractor accuracy") { CHECK(paired_gap(false, 0.1) >= -0.01); }
    SUBCASE("hetero-injected client gains at least three points") { CHECK(paired_gap(true, 0.6) >= 0.03); }
}
