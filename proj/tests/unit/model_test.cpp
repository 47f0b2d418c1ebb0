#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "oncf/checkpoint.hpp"
#include "oncf/model.hpp"
#include "temp_dir.hpp"

using namespace oncf;
using oncf::testsupport::TempDir;

namespace {

ModelParams makeMf(std::vector<double> p, std::vector<double> q) {
    ModelConfig cfg;
    cfg.kind = ModelKind::MfBpr;
    cfg.embeddingSize = p.size();
    ModelParams m = buildSkeleton(cfg, 1, 1);
    std::copy(p.begin(), p.end(), m.embeddings.P.data().begin());
    std::copy(q.begin(), q.end(), m.embeddings.Q.data().begin());
    return m;
}

std::string fileBytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool sameValues(const Tensor& a, const Tensor& b) {
    if (!a.sameShape(b)) {
        return false;
    }
    return std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

}  // namespace

TEST_CASE("mf_bpr scores the inner product") {
    const ModelParams m = makeMf({1, 2}, {3, 4});
    CHECK(score(m, 0, 0) == 11.0);
    CHECK_THROWS_AS(score(m, 1, 0), IndexError);
    CHECK_THROWS_AS(score(m, 0, 1), IndexError);
}

TEST_CASE("gmf with all-ones w equals mf_bpr") {
    ModelConfig mfCfg{.kind = ModelKind::MfBpr, .embeddingSize = 6, .seed = 11};
    ModelConfig gmfCfg{.kind = ModelKind::Gmf, .embeddingSize = 6, .seed = 11};
    Rng r1(11), r2(11);
    ModelParams mf = initModel(mfCfg, 4, 5, r1);
    ModelParams gmf = initModel(gmfCfg, 4, 5, r2);
    gmf.embeddings = mf.embeddings;
    gmf.outputWeight.fill(1.0);
    for (std::int64_t u = 0; u < 4; ++u) {
        for (std::int64_t i = 0; i < 5; ++i) {
            CHECK(score(gmf, u, i) == doctest::Approx(score(mf, u, i)).epsilon(1e-12));
        }
    }
}

TEST_CASE("convncf with zero filters and biases scores zero everywhere") {
    ModelConfig cfg{.kind = ModelKind::ConvNcf, .embeddingSize = 8, .featureMaps = 4, .seed = 3};
    Rng rng(3);
    ModelParams m = initModel(cfg, 3, 3, rng);
    for (ConvLayerParams& layer : m.convStack) {
        layer.filters.setZero();
        layer.bias.setZero();
    }
    for (std::int64_t u = 0; u < 3; ++u) {
        for (std::int64_t i = 0; i < 3; ++i) {
            CHECK(score(m, u, i) == 0.0);
        }
    }
}

TEST_CASE("scoreBatchForUser is bit-identical to single calls") {
    ModelConfig cfg{.kind = ModelKind::ConvNcf, .embeddingSize = 8, .featureMaps = 4, .seed = 7};
    Rng rng(7);
    const ModelParams m = initModel(cfg, 5, 1000, rng);

    const std::vector<std::int64_t> single{42};
    CHECK(scoreBatchForUser(m, 2, single)[0] == score(m, 2, 42));

    std::vector<std::int64_t> items(1000);
    for (std::size_t i = 0; i < items.size(); ++i) {
        items[i] = static_cast<std::int64_t>(i);
    }
    const std::vector<double> batch = scoreBatchForUser(m, 3, items);
    for (std::size_t i = 0; i < items.size(); ++i) {
        CHECK(batch[i] == score(m, 3, items[i]));  // oracle: looped single calls
    }

    std::vector<std::int64_t> permuted = items;
    std::reverse(permuted.begin(), permuted.end());
    const std::vector<double> reversed = scoreBatchForUser(m, 3, permuted);
    for (std::size_t i = 0; i < items.size(); ++i) {
        CHECK(reversed[items.size() - 1 - i] == batch[i]);
    }
}

TEST_CASE("countParams reproduces the architecture arithmetic") {
    ModelConfig cfg{.kind = ModelKind::ConvNcf, .embeddingSize = 64, .featureMaps = 32, .seed = 1};
    const ModelParams conv = buildSkeleton(cfg, 3, 3);
    CHECK(countParams(conv, {ParamGroup::Hidden, ParamGroup::Output}) == 20832);

    ModelConfig mlpCfg{
        .kind = ModelKind::OncfMlp, .embeddingSize = 64, .featureMaps = 32, .mlpLayers = 1};
    const ModelParams mlp1 = buildSkeleton(mlpCfg, 3, 3);
    CHECK(mlp1.denseLayers.size() == 1);
    CHECK(mlp1.denseLayers[0].weight.size() == 8388608);  // 4096 x 2048

    CHECK(countParams(conv, {}) == 0);
    CHECK(countParams(conv, {ParamGroup::Embedding}) == 2 * 3 * 64);
}

TEST_CASE("initModel is deterministic and validates its inputs") {
    ModelConfig cfg{.kind = ModelKind::ConvNcf, .embeddingSize = 16, .featureMaps = 4, .seed = 5};
    Rng r1(5), r2(5);
    const ModelParams a = initModel(cfg, 4, 6, r1);
    const ModelParams b = initModel(cfg, 4, 6, r2);
    const auto ra = a.registry();
    const auto rb = b.registry();
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
        CHECK(sameValues(*ra[i].tensor, *rb[i].tensor));
    }

    EmbeddingTable wrongK;
    wrongK.P = Tensor({4, 8});
    wrongK.Q = Tensor({6, 8});
    Rng r3(5);
    CHECK_THROWS_AS(initModel(cfg, 4, 6, r3, &wrongK), ConfigError);

    ModelConfig bad = cfg;
    bad.embeddingSize = 24;  // not a power of two
    Rng r4(5);
    CHECK_THROWS_AS(initModel(bad, 4, 6, r4), ConfigError);
}

TEST_CASE("convncf instantiates log2(K) layers with halving maps") {
    ModelConfig cfg{.kind = ModelKind::ConvNcf, .embeddingSize = 64, .featureMaps = 32, .seed = 9};
    Rng rng(9);
    const ModelParams m = initModel(cfg, 2, 2, rng);
    REQUIRE(m.convStack.size() == 6);
    const ForwardTrace trace = scoreWithTrace(m, 0, 1);
    const std::vector<std::size_t> expected{32, 16, 8, 4, 2, 1};
    REQUIRE(trace.convOutputs.size() == 6);
    for (std::size_t l = 0; l < 6; ++l) {
        CHECK(trace.convOutputs[l].extent(0) == expected[l]);
        CHECK(trace.convOutputs[l].extent(1) == expected[l]);
        CHECK(trace.convOutputs[l].extent(2) == 32);
    }
    CHECK(trace.g.size() == 32);

    ModelConfig k32 = cfg;
    k32.embeddingSize = 32;
    const ModelParams m32 = buildSkeleton(k32, 2, 2);
    CHECK(m32.convStack.size() == 5);
}

TEST_CASE("scaling w scales score differences and keeps rankings") {
    ModelConfig cfg{.kind = ModelKind::ConvNcf, .embeddingSize = 8, .featureMaps = 4, .seed = 13};
    Rng rng(13);
    ModelParams m = initModel(cfg, 2, 20, rng);

    std::vector<std::int64_t> items(20);
    for (std::size_t i = 0; i < items.size(); ++i) {
        items[i] = static_cast<std::int64_t>(i);
    }
    const std::vector<double> before = scoreBatchForUser(m, 0, items);
    const double c = 3.5;
    for (double& v : m.outputWeight.data()) {
        v *= c;
    }
    const std::vector<double> after = scoreBatchForUser(m, 0, items);
    for (std::size_t i = 1; i < items.size(); ++i) {
        const double d0 = before[i] - before[0];
        const double d1 = after[i] - after[0];
        CHECK(d1 == doctest::Approx(c * d0).epsilon(1e-9));
    }
    auto ranking = [](const std::vector<double>& s) {
        std::vector<std::size_t> order(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            order[i] = i;
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return s[a] != s[b] ? s[a] > s[b] : a < b;
        });
        return order;
    };
    CHECK(ranking(before) == ranking(after));
}

TEST_CASE("mf score is bilinear in the embeddings") {
    ModelParams m = makeMf({1.5, -2.0, 0.5}, {2.0, 1.0, -4.0});
    const double base = score(m, 0, 0);
    for (double& v : m.embeddings.P.row(0)) {
        v *= 2.5;
    }
    CHECK(score(m, 0, 0) == doctest::Approx(2.5 * base).epsilon(1e-12));
}

TEST_CASE("tower layers halve their width") {
    for (ModelKind kind : {ModelKind::Mlp, ModelKind::Jrl, ModelKind::OncfMlp}) {
        for (std::size_t depth : {std::size_t{1}, std::size_t{2}, std::size_t{3}}) {
            ModelConfig cfg{.kind = kind, .embeddingSize = 16, .mlpLayers = depth};
            const ModelParams m = buildSkeleton(cfg, 2, 2);
            REQUIRE(m.denseLayers.size() == depth);
            std::size_t width = kind == ModelKind::OncfMlp ? 256
                                : kind == ModelKind::Mlp   ? 32
                                                           : 16;
            for (const DenseLayerParams& layer : m.denseLayers) {
                CHECK(layer.weight.extent(0) == width);
                CHECK(layer.weight.extent(1) == width / 2);
                width /= 2;
            }
            CHECK(m.outputWeight.size() == width);
        }
    }
}

TEST_CASE("registry lists every trainable tensor exactly once") {
    ModelConfig cfg{.kind = ModelKind::ConvNcf, .embeddingSize = 16, .featureMaps = 4, .seed = 2};
    ModelParams m = buildSkeleton(cfg, 3, 4);
    const auto reg = m.registry();
    std::set<std::string> names;
    std::set<const Tensor*> tensors;
    for (const RegistryEntry& e : reg) {
        CHECK(names.insert(e.name).second);
        CHECK(tensors.insert(e.tensor).second);
        CHECK(e.trainable);
    }
    CHECK(names.count("P") == 1);
    CHECK(names.count("Q") == 1);
    CHECK(names.count("w") == 1);
    CHECK(names.count("conv0.filters") == 1);
    CHECK(reg.size() == 2 + 2 * m.convStack.size() + 1);
    CHECK(reg[0].group == ParamGroup::Embedding);
    CHECK(reg[2].group == ParamGroup::Hidden);
    CHECK(reg.back().group == ParamGroup::Output);
    CHECK(reg.back().name == "w");
}

TEST_CASE("checkpoints round-trip byte-identically") {
    for (ModelKind kind : {ModelKind::ConvNcf, ModelKind::OncfMlp, ModelKind::MfBpr,
                           ModelKind::Gmf, ModelKind::Jrl, ModelKind::Mlp}) {
        ModelConfig cfg{.kind = kind, .embeddingSize = 8, .featureMaps = 4, .mlpLayers = 2,
                        .seed = 21};
        Rng rng(21);
        const ModelParams m = initModel(cfg, 5, 7, rng);
        TempDir tmp("ckpt");
        saveCheckpoint(m, tmp.file("a.ckpt"));
        const ModelParams loaded = loadCheckpoint(tmp.file("a.ckpt"));
        CHECK(loaded.kind == kind);
        CHECK(loaded.K == m.K);
        CHECK(loaded.users == 5);
        CHECK(loaded.items == 7);
        saveCheckpoint(loaded, tmp.file("b.ckpt"));
        CHECK(fileBytes(tmp.file("a.ckpt")) == fileBytes(tmp.file("b.ckpt")));

        // Loaded weights score identically to float-rounded originals.
        const double a = score(m, 1, 2);
        const double b = score(loaded, 1, 2);
        CHECK(a == doctest::Approx(b).epsilon(1e-5));
    }
}

TEST_CASE("itempop persists its counts and rejects garbage") {
    ModelConfig cfg{.kind = ModelKind::ItemPop};
    ModelParams pop = buildSkeleton(cfg, 3, 4);
    const std::vector<std::int64_t> counts{5, 0, 2, 9};
    setItemCounts(pop, counts);
    CHECK(score(pop, 0, 3) == 9.0);
    CHECK(score(pop, 2, 1) == 0.0);

    TempDir tmp("pop");
    saveCheckpoint(pop, tmp.file("pop.ckpt"));
    const ModelParams back = loadCheckpoint(tmp.file("pop.ckpt"));
    CHECK(back.kind == ModelKind::ItemPop);
    CHECK(score(back, 1, 0) == 5.0);

    CHECK_THROWS_AS(setItemCounts(pop, std::vector<std::int64_t>{1, 2}), DimensionError);
    ModelParams mf = makeMf({1}, {1});
    CHECK_THROWS_AS(setItemCounts(mf, std::vector<std::int64_t>{1}), ConfigError);

    std::ofstream bad(tmp.file("bad.ckpt"), std::ios::binary);
    bad << "NOPE";
    bad.close();
    CHECK_THROWS_AS(loadCheckpoint(tmp.file("bad.ckpt")), DataError);
}
