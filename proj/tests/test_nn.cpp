#include <doctest.h>

#include <cmath>
#include <numeric>

#include "adafgl/graph.hpp"
#include "adafgl/nn.hpp"
#include "support.hpp"

using namespace adafgl;
using testing::fd_relative_error;
using testing::random_matrix;

namespace {

std::vector<bool> all_rows(std::size_t n) { return std::vector<bool>(n, true); }

// Worst relative error over every parameter of `model`.
double check_model_grads(ModelState& model, const std::function<double()>& loss) {
    double worst = 0;
    for (auto& p : model.params()) {
        const DenseMatrix analytic = p.grad;
        worst = std::max(worst, fd_relative_error(p.value, analytic, loss));
    }
    return worst;
}

} // namespace

TEST_CASE("gcn gradients match finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 4 + seed % 5;
        const std::size_t f = 2 + seed % 4;
        const int classes = 2 + static_cast<int>(seed % 3);
        const Graph g = testing::with_random_roles(testing::random_graph(n, 0.4, classes, f, seed), seed, 0.6);
        std::vector<bool> mask = g.mask(SplitRole::train);
        if (std::find(mask.begin(), mask.end(), true) == mask.end()) {
            mask[0] = true;
        }
        const std::vector<std::size_t> dims{f, 3 + seed % 3, static_cast<std::size_t>(classes)};
        ModelState model = make_gcn(dims, seed, 0.5);
        Rng rng(seed);
        testing::randomize_biases(model, rng);
        const SparseMatrix adj = normalized_adjacency(g, 0.5);
        auto loss = [&] {
            return softmax_cross_entropy(gcn_forward(adj, g.features(), model), CrossEntropyInput::logits, g.labels(),
                                         mask)
                .value;
        };
        GcnCache cache;
        const auto ce = softmax_cross_entropy(gcn_forward(adj, g.features(), model, &cache),
                                              CrossEntropyInput::logits, g.labels(), mask);
        gcn_backward(adj, cache, ce.grad, model);
        CHECK(check_model_grads(model, loss) < 1e-4);
    }
}

TEST_CASE("gcn identity stack and zero weights") {
    const Graph g(3, std::vector<Edge>{}, DenseMatrix{{1, 2, 0}, {0, 3, 1}, {4, 0, 2}}, {0, 1, 2});
    const SparseMatrix adj = normalized_adjacency(g, 0.5);
    const std::vector<std::size_t> dims{3, 3, 3};
    ModelState model = make_gcn(dims, 1);
    model.params()[0].value = DenseMatrix::identity(3);
    model.params()[2].value = DenseMatrix::identity(3);
    CHECK(gcn_forward(adj, g.features(), model) == g.features());
    model.params()[0].value.fill(0);
    model.params()[2].value.fill(0);
    CHECK(gcn_forward(adj, g.features(), model) == DenseMatrix(3, 3));
}

TEST_CASE("mlp gradients including the input gradient") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const std::size_t n = 3 + seed % 4;
        const std::size_t f = 2 + seed % 5;
        const std::vector<std::size_t> dims{f, 4, 3, 2};
        ModelState model = make_mlp(dims, seed + 7);
        testing::randomize_biases(model, rng);
        DenseMatrix x = random_matrix(n, f, rng);
        const DenseMatrix target = random_matrix(n, 2, rng);
        auto loss = [&] { return frobenius_loss(mlp_forward(x, model), target).value; };
        MlpCache cache;
        const auto fl = frobenius_loss(mlp_forward(x, model, &cache), target);
        const DenseMatrix dx = mlp_backward(cache, fl.grad, model, true);
        CHECK(check_model_grads(model, loss) < 1e-4);
        CHECK(fd_relative_error(x, dx, loss) < 1e-4);
    }
}

TEST_CASE("softmax cross entropy") {
    SUBCASE("one-hot probabilities give zero loss") {
        const DenseMatrix p{{0, 1, 0}, {1, 0, 0}};
        const std::vector<int> y{1, 0};
        CHECK(softmax_cross_entropy(p, CrossEntropyInput::probabilities, y, all_rows(2)).value == 0.0);
    }
    SUBCASE("uniform over four classes gives ln 4") {
        const DenseMatrix p(2, 4, 0.25);
        const std::vector<int> y{3, 1};
        const double loss = softmax_cross_entropy(p, CrossEntropyInput::probabilities, y, all_rows(2)).value;
        CHECK(loss == doctest::Approx(std::log(4.0)).epsilon(1e-15));
        CHECK(loss == doctest::Approx(1.3863).epsilon(1e-4));
    }
    SUBCASE("logit and probability gradients") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(seed);
            const std::size_t n = 2 + seed % 5, c = 2 + seed % 4;
            DenseMatrix z = random_matrix(n, c, rng, 2.0);
            std::vector<int> y(n);
            std::vector<bool> mask(n);
            for (std::size_t i = 0; i < n; ++i) {
                y[i] = static_cast<int>(rng.below(c));
                mask[i] = i == 0 || rng.bernoulli(0.6);
            }
            const auto lz = softmax_cross_entropy(z, CrossEntropyInput::logits, y, mask);
            CHECK(fd_relative_error(z, lz.grad, [&] {
                      return softmax_cross_entropy(z, CrossEntropyInput::logits, y, mask).value;
                  }) < 1e-4);
            DenseMatrix p = softmax_rows(random_matrix(n, c, rng));
            const auto lp = softmax_cross_entropy(p, CrossEntropyInput::probabilities, y, mask);
            CHECK(fd_relative_error(p, lp.grad, [&] {
                      return softmax_cross_entropy(p, CrossEntropyInput::probabilities, y, mask).value;
                  }) < 1e-4);
        }
    }
    SUBCASE("empty mask is rejected") {
        const std::vector<int> y{0};
        CHECK_THROWS_AS(softmax_cross_entropy(DenseMatrix(1, 2), CrossEntropyInput::logits, y, {false}),
                        std::invalid_argument);
    }
}

TEST_CASE("frobenius loss") {
    const DenseMatrix a{{1, 2}, {3, 4}};
    const auto same = frobenius_loss(a, a);
    CHECK(same.value == 0.0);
    CHECK(same.grad == DenseMatrix(2, 2));
    CHECK(frobenius_loss(DenseMatrix{{3, 4}, {0, 0}}, DenseMatrix(2, 2)).value == 5.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        DenseMatrix x = random_matrix(4, 3, rng);
        const DenseMatrix b = random_matrix(4, 3, rng);
        const auto l = frobenius_loss(x, b);
        CHECK(fd_relative_error(x, l.grad, [&] { return frobenius_loss(x, b).value; }) < 1e-4);
    }
}

TEST_CASE("adam") {
    const std::vector<std::size_t> dims{3, 2};
    SUBCASE("first step from zero moments matches the closed form") {
        AdamConfig cfg;
        cfg.lr = 0.1;
        cfg.weight_decay = 0.01;
        ModelState model = make_mlp(dims, 3);
        const ModelState before = model;
        Rng rng(5);
        model.params()[0].grad = random_matrix(3, 2, rng);
        model.params()[1].grad = random_matrix(1, 2, rng);
        const ModelState with_grads = model;
        AdamOptimizer opt(cfg);
        opt.step(model);
        for (std::size_t p = 0; p < model.params().size(); ++p) {
            const auto& w0 = before.params()[p].value.values();
            const auto& g0 = with_grads.params()[p].grad.values();
            const auto& w1 = model.params()[p].value.values();
            for (std::size_t i = 0; i < w0.size(); ++i) {
                // m_hat = g, v_hat = g^2 after bias correction.
                const double g = g0[i] + cfg.weight_decay * w0[i];
                const double expected = w0[i] - cfg.lr * g / (std::abs(g) + cfg.eps);
                CHECK(w1[i] == doctest::Approx(expected).epsilon(1e-14));
            }
            CHECK(model.params()[p].grad == DenseMatrix(model.params()[p].grad.rows(), model.params()[p].grad.cols()));
        }
        CHECK(opt.steps() == 1);
    }
    SUBCASE("zero gradient without decay leaves parameters unchanged") {
        AdamConfig cfg;
        cfg.weight_decay = 0.0;
        ModelState model = make_mlp(dims, 4);
        const ModelState before = model;
        AdamOptimizer opt(cfg);
        opt.step(model);
        CHECK(model == before);
    }
    SUBCASE("zero gradient with decay shrinks toward zero") {
        ModelState model = make_mlp(dims, 4);
        const ModelState before = model;
        AdamOptimizer opt{AdamConfig{}};
        opt.step(model);
        const auto& w0 = before.params()[0].value.values();
        const auto& w1 = model.params()[0].value.values();
        for (std::size_t i = 0; i < w0.size(); ++i) {
            CHECK(std::abs(w1[i]) < std::abs(w0[i]));
        }
    }
    SUBCASE("identical models and gradients update identically") {
        ModelState a = make_mlp(dims, 6), b = make_mlp(dims, 6);
        AdamOptimizer oa{AdamConfig{}}, ob{AdamConfig{}};
        for (int s = 0; s < 3; ++s) {
            a.params()[0].grad.fill(0.3 * s);
            b.params()[0].grad.fill(0.3 * s);
            oa.step(a);
            ob.step(b);
        }
        CHECK(a == b);
    }
}

TEST_CASE("model serialization round-trips bit-exactly") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const std::vector<std::size_t> dims{5, 4 + seed, 3};
        const ModelState gcn = make_gcn(dims, seed, 0.25);
        const auto bytes = serialize(gcn);
        CHECK(deserialize(bytes) == gcn);
        auto truncated = bytes;
        truncated.pop_back();
        CHECK_THROWS(deserialize(truncated));
        auto extended = bytes;
        extended.push_back(0);
        CHECK_THROWS(deserialize(extended));
    }
    const auto dir = testing::scratch_dir("model");
    const std::vector<std::size_t> dims{2, 2};
    const ModelState mlp = make_mlp(dims, 9);
    save_model(mlp, dir / "m.bin");
    CHECK(load_model(dir / "m.bin") == mlp);
}

TEST_CASE("compatibility and accuracy") {
    const std::vector<std::size_t> a{3, 4, 2}, b{3, 5, 2};
    CHECK(make_gcn(a, 1).compatible(make_gcn(a, 2)));
    CHECK_FALSE(make_gcn(a, 1).compatible(make_gcn(b, 1)));
    CHECK_FALSE(make_gcn(a, 1).compatible(make_mlp(a, 1)));
    const DenseMatrix scores{{0.9, 0.1}, {0.2, 0.8}, {0.5, 0.5}};
    const std::vector<int> y{0, 0, 0};
    CHECK(masked_accuracy(scores, y, {true, true, true}) == doctest::Approx(2.0 / 3.0));
    CHECK(masked_accuracy(scores, y, {false, false, false}) == 0.0);
}
