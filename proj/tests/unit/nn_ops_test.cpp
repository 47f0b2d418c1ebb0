#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "finite_diff.hpp"
#include "oncf/nn_ops.hpp"
#include "oncf/rng.hpp"

using namespace oncf;
using oncf::testsupport::maxRelativeError;
using oncf::testsupport::numericGradient;

namespace {

void randomize(Tensor& t, Rng& rng, double scale = 1.0) {
    for (double& v : t.data()) {
        v = scale * (rng.uniform() * 2.0 - 1.0);
    }
}

Tensor randomTensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    randomize(t, rng, scale);
    return t;
}

// Scalar probe loss: fixed random weights dotted with the op output. Its
// analytic gradient is the op's backward pass fed with those weights.
double weighted(const Tensor& out, const Tensor& weights) {
    return dot(out.data(), weights.data());
}

}  // namespace

TEST_CASE("lookup selects rows and validates ids") {
    EmbeddingTable table;
    table.P = Tensor::fromData({0.1, 0.2, 0.3, 0.4}, {2, 2});
    table.Q = Tensor::fromData({1, 0, 0, 1}, {2, 2});
    const EmbeddingPair pq = lookup(table, 0, 1);
    CHECK(pq.p[0] == 0.1);
    CHECK(pq.p[1] == 0.2);
    CHECK(pq.q[0] == 0.0);
    CHECK(pq.q[1] == 1.0);

    const EmbeddingPair row1 = lookup(table, 1, 0);
    CHECK(row1.p[0] == 0.3);

    CHECK_THROWS_AS(lookup(table, 2, 0), IndexError);  // u == M
    CHECK_THROWS_AS(lookup(table, 0, -1), IndexError);
}

TEST_CASE("outerProduct matches the definition") {
    const std::vector<double> p{1, 2}, q{3, 4};
    const Tensor e = outerProduct(p, q);
    CHECK(e(0, 0) == 3.0);
    CHECK(e(0, 1) == 4.0);
    CHECK(e(1, 0) == 6.0);
    CHECK(e(1, 1) == 8.0);

    const std::vector<double> e1{1, 0, 0}, e2{0, 1, 0};
    const Tensor basis = outerProduct(e1, e2);
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = 0; b < 3; ++b) {
            CHECK(basis(a, b) == ((a == 0 && b == 1) ? 1.0 : 0.0));
        }
    }

    // Diagonal sums to the inner product.
    double diag = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
        diag += e(k, k);
    }
    CHECK(diag == 11.0);

    CHECK_THROWS_AS(outerProduct(p, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("outerProduct is rank-1 with an exact Hadamard diagonal") {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 2 + rng.uniformInt(7);
        std::vector<double> p(k), q(k);
        for (std::size_t a = 0; a < k; ++a) {
            p[a] = rng.gaussian();
            q[a] = rng.gaussian();
        }
        const Tensor e = outerProduct(p, q);
        for (std::size_t a = 0; a < k; ++a) {
            CHECK(e(a, a) == p[a] * q[a]);  // exact
            for (std::size_t c = a + 1; c < k; ++c) {
                for (std::size_t b = 0; b < k; ++b) {
                    for (std::size_t d = b + 1; d < k; ++d) {
                        const double lhs = e(a, b) * e(c, d);
                        const double rhs = e(a, d) * e(c, b);
                        const double scale = std::abs(lhs) + std::abs(rhs) + 1e-300;
                        CHECK(std::abs(lhs - rhs) / scale < 1e-9);
                    }
                }
            }
        }
    }
}

TEST_CASE("outerProductBackward") {
    const std::vector<double> ones{1, 1};
    Tensor gradE = Tensor::fromData({1, 0, 0, 1}, {2, 2});
    auto [gp, gq] = outerProductBackward(gradE, ones, ones);
    CHECK(gp(0) == 1.0);
    CHECK(gp(1) == 1.0);
    CHECK(gq(0) == 1.0);
    CHECK(gq(1) == 1.0);

    Tensor zero({2, 2});
    auto [zp, zq] = outerProductBackward(zero, ones, ones);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(zp(k) == 0.0);
        CHECK(zq(k) == 0.0);
    }
}

TEST_CASE("outerProductBackward matches finite differences") {
    Rng rng(5);
    Tensor p = randomTensor({4}, rng);
    Tensor q = randomTensor({4}, rng);
    const Tensor weights = randomTensor({4, 4}, rng);

    auto loss = [&] { return weighted(outerProduct(p.data(), q.data()), weights); };
    auto [gp, gq] = outerProductBackward(weights, p.data(), q.data());
    CHECK(maxRelativeError(gp, numericGradient(p, loss)) < 1e-6);
    CHECK(maxRelativeError(gq, numericGradient(q, loss)) < 1e-6);
}

TEST_CASE("convForward direct evaluations") {
    // 2x2 input, one all-ones filter, bias 0 -> single cell 1+2+3+4.
    ConvLayerParams layer;
    layer.filters = Tensor::fromData({1, 1, 1, 1}, {2, 2, 1});
    layer.bias = Tensor({1});
    const Tensor in = Tensor::fromData({1, 2, 3, 4}, {2, 2});
    const Tensor out = convForward(in, layer);
    CHECK(out.shape() == std::vector<std::size_t>{1, 1, 1});
    CHECK(out(0, 0, 0) == 10.0);

    // All-zero input: every output is ReLU(bias).
    Rng rng(8);
    ConvLayerParams biased;
    biased.filters = randomTensor({2, 2, 3}, rng);
    biased.bias = Tensor::fromData({0.5, -0.25, 1.5}, {3});
    const Tensor zeroOut = convForward(Tensor({4, 4}), biased);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(zeroOut(i, j, 0) == 0.5);
            CHECK(zeroOut(i, j, 1) == 0.0);
            CHECK(zeroOut(i, j, 2) == 1.5);
        }
    }
}

TEST_CASE("convForward applies the flipped filter indices") {
    // t(0,0) = 1, everything else 0: because of the (1-a, 1-b) flip this
    // selects input entry (2i+1, 2j+1).
    ConvLayerParams layer;
    layer.filters = Tensor({2, 2, 1});
    layer.filters(0, 0, 0) = 1.0;
    layer.bias = Tensor({1});
    Tensor in({4, 4});
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            in(i, j) = 10.0 * static_cast<double>(i) + static_cast<double>(j);
        }
    }
    const Tensor out = convForward(in, layer);
    CHECK(out(0, 0, 0) == 11.0);
    CHECK(out(0, 1, 0) == 13.0);
    CHECK(out(1, 0, 0) == 31.0);
    CHECK(out(1, 1, 0) == 33.0);
}

TEST_CASE("convForward rejects bad spatial extents") {
    ConvLayerParams layer;
    layer.filters = Tensor({2, 2, 1});
    layer.bias = Tensor({1});
    CHECK_THROWS_AS(convForward(Tensor({3, 3}), layer), DimensionError);
    CHECK_THROWS_AS(convForward(Tensor({2, 4}), layer), DimensionError);
    CHECK_THROWS_AS(convForward(Tensor({4, 4, 2}), layer), DimensionError);  // channel mismatch
}

TEST_CASE("convForward halves the spatial extent down to 1x1") {
    Rng rng(14);
    const std::size_t k = 64;
    const std::size_t channels = 2;
    Tensor x = randomTensor({k, k}, rng);
    std::size_t expected = k;
    for (std::size_t layerIdx = 0; expected > 1; ++layerIdx) {
        ConvLayerParams layer;
        layer.filters = layerIdx == 0 ? randomTensor({2, 2, channels}, rng)
                                      : randomTensor({2, 2, channels, channels}, rng);
        layer.bias = randomTensor({channels}, rng, 0.1);
        x = convForward(x, layer);
        expected /= 2;
        CHECK(x.extent(0) == expected);
        CHECK(x.extent(1) == expected);
        CHECK(x.extent(2) == channels);
    }
    CHECK(x.extent(0) == 1);
}

TEST_CASE("convBackward zero upstream and dead units") {
    Rng rng(15);
    ConvLayerParams layer;
    layer.filters = randomTensor({2, 2, 2, 3}, rng);
    layer.bias = randomTensor({3}, rng, 0.1);
    const Tensor in = randomTensor({4, 4, 2}, rng);
    const Tensor out = convForward(in, layer);

    const ConvGrads zero = convBackward(Tensor({2, 2, 3}), in, layer, out);
    for (double v : zero.input.data()) {
        CHECK(v == 0.0);
    }
    for (double v : zero.filters.data()) {
        CHECK(v == 0.0);
    }
    for (double v : zero.bias.data()) {
        CHECK(v == 0.0);
    }

    // Strongly negative bias kills every unit: no gradient flows anywhere.
    ConvLayerParams dead = layer;
    dead.bias.fill(-100.0);
    const Tensor deadOut = convForward(in, dead);
    for (double v : deadOut.data()) {
        CHECK(v == 0.0);
    }
    Tensor up({2, 2, 3});
    up.fill(1.0);
    const ConvGrads g = convBackward(up, in, dead, deadOut);
    for (double v : g.input.data()) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("convBackward matches finite differences") {
    Rng rng(16);
    for (int trial = 0; trial < 6; ++trial) {
        const bool first = trial % 2 == 0;
        const std::size_t cin = first ? 1 : 1 + rng.uniformInt(3);
        const std::size_t cout = 1 + rng.uniformInt(3);
        const std::size_t s = 2 * (1 + rng.uniformInt(3));
        ConvLayerParams layer;
        layer.filters =
            first ? randomTensor({2, 2, cout}, rng) : randomTensor({2, 2, cin, cout}, rng);
        layer.bias = randomTensor({cout}, rng, 0.3);
        Tensor in = first ? randomTensor({s, s}, rng) : randomTensor({s, s, cin}, rng);
        const Tensor weights = randomTensor({s / 2, s / 2, cout}, rng);

        auto loss = [&] { return weighted(convForward(in, layer), weights); };
        const Tensor out = convForward(in, layer);
        const ConvGrads grads = convBackward(weights, in, layer, out);

        CHECK(maxRelativeError(grads.input, numericGradient(in, loss)) < 1e-4);
        CHECK(maxRelativeError(grads.filters, numericGradient(layer.filters, loss)) < 1e-4);
        CHECK(maxRelativeError(grads.bias, numericGradient(layer.bias, loss)) < 1e-4);
    }
}

TEST_CASE("receptive field: one input entry maps to one output cell per layer") {
    Rng rng(18);
    const std::size_t k = 16;
    const std::size_t channels = 2;
    std::vector<ConvLayerParams> stack;
    for (std::size_t l = 0; (k >> l) > 1; ++l) {
        ConvLayerParams layer;
        layer.filters = l == 0 ? randomTensor({2, 2, channels}, rng)
                               : randomTensor({2, 2, channels, channels}, rng);
        layer.filters.data()[0] += 2.0;  // keep something nonzero everywhere
        layer.bias = Tensor({channels});
        stack.push_back(std::move(layer));
    }

    auto forwardAll = [&](const Tensor& input) {
        std::vector<Tensor> outs;
        const Tensor* cur = &input;
        for (const auto& layer : stack) {
            outs.push_back(convForward(*cur, layer));
            cur = &outs.back();
        }
        return outs;
    };

    Tensor base({k, k});
    for (double& v : base.data()) {
        v = 0.5 + rng.uniform();  // positive input keeps the ReLU gates open
    }
    const auto baseOuts = forwardAll(base);

    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t x = rng.uniformInt(k);
        const std::size_t y = rng.uniformInt(k);
        Tensor perturbed = base;
        perturbed(x, y) += 0.25;
        const auto outs = forwardAll(perturbed);
        for (std::size_t l = 0; l < stack.size(); ++l) {
            std::set<std::pair<std::size_t, std::size_t>> changed;
            const std::size_t extent = baseOuts[l].extent(0);
            for (std::size_t i = 0; i < extent; ++i) {
                for (std::size_t j = 0; j < extent; ++j) {
                    for (std::size_t c = 0; c < channels; ++c) {
                        if (outs[l](i, j, c) != baseOuts[l](i, j, c)) {
                            changed.insert({i, j});
                        }
                    }
                }
            }
            // With arbitrary filters the change may die out (ReLU), but it can
            // never leave the single predicted cell.
            const std::pair<std::size_t, std::size_t> cell{x >> (l + 1), y >> (l + 1)};
            CHECK(changed.size() <= 1);
            if (!changed.empty()) {
                CHECK(*changed.begin() == cell);
            }
        }
    }
}

TEST_CASE("concat and ewiseProduct") {
    const std::vector<double> p{1}, q{2};
    const Tensor c = concat(p, q);
    CHECK(c(0) == 1.0);
    CHECK(c(1) == 2.0);

    const std::vector<double> a{1, 2}, b{3, 4};
    const Tensor h = ewiseProduct(a, b);
    CHECK(h(0) == 3.0);
    CHECK(h(1) == 8.0);

    const std::vector<double> ones{1, 1};
    const Tensor same = ewiseProduct(a, ones);
    CHECK(same(0) == 1.0);
    CHECK(same(1) == 2.0);

    CHECK_THROWS_AS(ewiseProduct(a, std::vector<double>{1.0}), DimensionError);

    auto [gp, gq] = concatBackward(Tensor::fromData({5, 6, 7}, {3}), 1, 2);
    CHECK(gp(0) == 5.0);
    CHECK(gq(0) == 6.0);
    CHECK(gq(1) == 7.0);
}

TEST_CASE("dense layer") {
    DenseLayerParams layer;
    layer.weight = Tensor::fromData({1, 0, 0, 1}, {2, 2});
    layer.bias = Tensor({2});
    const std::vector<double> x{3, -4};
    const Tensor lin = dense(x, layer, Activation::None);
    CHECK(lin(0) == 3.0);
    CHECK(lin(1) == -4.0);
    const Tensor rel = dense(x, layer, Activation::Relu);
    CHECK(rel(0) == 3.0);
    CHECK(rel(1) == 0.0);

    CHECK_THROWS_AS(dense(std::vector<double>{1.0}, layer, Activation::None), DimensionError);
}

TEST_CASE("dense backward matches finite differences") {
    Rng rng(19);
    DenseLayerParams layer;
    layer.weight = randomTensor({3, 2}, rng);
    layer.bias = randomTensor({2}, rng, 0.3);
    Tensor x = randomTensor({3}, rng);
    const Tensor weights = randomTensor({2}, rng);

    for (Activation act : {Activation::None, Activation::Relu}) {
        auto loss = [&] { return weighted(dense(x.data(), layer, act), weights); };
        const Tensor out = dense(x.data(), layer, act);
        const DenseGrads grads = denseBackward(weights, x.data(), layer, out, act);
        CHECK(maxRelativeError(grads.input, numericGradient(x, loss)) < 1e-6);
        CHECK(maxRelativeError(grads.weight, numericGradient(layer.weight, loss)) < 1e-6);
        CHECK(maxRelativeError(grads.bias, numericGradient(layer.bias, loss)) < 1e-6);
    }
}

TEST_CASE("quantified gradient-check sweep over random shapes") {
    Rng rng(20);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        // outer product
        {
            const std::size_t k = 2 + rng.uniformInt(6);
            Tensor p = randomTensor({k}, rng), q = randomTensor({k}, rng);
            const Tensor w = randomTensor({k, k}, rng);
            auto loss = [&] { return weighted(outerProduct(p.data(), q.data()), w); };
            auto [gp, gq] = outerProductBackward(w, p.data(), q.data());
            worst = std::max(worst, maxRelativeError(gp, numericGradient(p, loss)));
            worst = std::max(worst, maxRelativeError(gq, numericGradient(q, loss)));
        }
        // dense relu
        {
            const std::size_t din = 1 + rng.uniformInt(5);
            const std::size_t dout = 1 + rng.uniformInt(5);
            DenseLayerParams layer;
            layer.weight = randomTensor({din, dout}, rng);
            layer.bias = randomTensor({dout}, rng, 0.3);
            Tensor x = randomTensor({din}, rng);
            const Tensor w = randomTensor({dout}, rng);
            auto loss = [&] { return weighted(dense(x.data(), layer, Activation::Relu), w); };
            const Tensor out = dense(x.data(), layer, Activation::Relu);
            const DenseGrads g = denseBackward(w, x.data(), layer, out, Activation::Relu);
            worst = std::max(worst, maxRelativeError(g.input, numericGradient(x, loss)));
            worst = std::max(worst, maxRelativeError(g.weight, numericGradient(layer.weight, loss)));
        }
    }
    CHECK(worst < 1e-4);
}
