#include "oncf/model.hpp"

#include <algorithm>
#include <cmath>

namespace oncf {

namespace {

const char* const kKindNames[] = {"convncf", "oncf_mlp", "mf_bpr", "gmf", "jrl", "mlp", "itempop"};

bool isPowerOfTwo(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t log2Exact(std::size_t n) {
    std::size_t l = 0;
    while ((std::size_t{1} << l) < n) {
        ++l;
    }
    return l;
}

// Width of the vector the dense tower (or the output weight) sits on.
std::size_t towerInputSize(ModelKind kind, std::size_t K) {
    switch (kind) {
        case ModelKind::OncfMlp:
            return K * K;  // flattened interaction map
        case ModelKind::Mlp:
            return 2 * K;  // concat(p, q)
        case ModelKind::Jrl:
        case ModelKind::Gmf:
            return K;  // p (.) q
        default:
            return 0;
    }
}

template <typename Entry, typename Model>
std::vector<Entry> buildRegistry(Model& m) {
    std::vector<Entry> out;
    if (m.kind == ModelKind::ItemPop) {
        out.push_back(Entry{"item_counts", &m.itemCounts, ParamGroup::Output, false});
        return out;
    }
    out.push_back(Entry{"P", &m.embeddings.P, ParamGroup::Embedding, true});
    out.push_back(Entry{"Q", &m.embeddings.Q, ParamGroup::Embedding, true});
    for (std::size_t l = 0; l < m.convStack.size(); ++l) {
        out.push_back(Entry{"conv" + std::to_string(l) + ".filters", &m.convStack[l].filters,
                            ParamGroup::Hidden, true});
        out.push_back(Entry{"conv" + std::to_string(l) + ".bias", &m.convStack[l].bias,
                            ParamGroup::Hidden, true});
    }
    for (std::size_t l = 0; l < m.denseLayers.size(); ++l) {
        out.push_back(Entry{"dense" + std::to_string(l) + ".W", &m.denseLayers[l].weight,
                            ParamGroup::Hidden, true});
        out.push_back(Entry{"dense" + std::to_string(l) + ".b", &m.denseLayers[l].bias,
                            ParamGroup::Hidden, true});
    }
    if (!m.outputWeight.empty()) {
        out.push_back(Entry{"w", &m.outputWeight, ParamGroup::Output, true});
    }
    return out;
}

// Registry slot indices; must mirror buildRegistry's order.
struct RegistryLayout {
    std::size_t p = 0;
    std::size_t q = 1;
    std::size_t convBase = 2;
    std::size_t denseBase = 2;
    std::size_t w = 0;

    std::size_t convFilters(std::size_t l) const { return convBase + 2 * l; }
    std::size_t convBias(std::size_t l) const { return convBase + 2 * l + 1; }
    std::size_t denseWeight(std::size_t l) const { return denseBase + 2 * l; }
    std::size_t denseBias(std::size_t l) const { return denseBase + 2 * l + 1; }
};

RegistryLayout layoutOf(const ModelParams& m) {
    RegistryLayout layout;
    layout.denseBase = layout.convBase + 2 * m.convStack.size();
    layout.w = layout.denseBase + 2 * m.denseLayers.size();
    return layout;
}

void checkIds(const ModelParams& m, std::int64_t u, std::int64_t i) {
    if (u < 0 || static_cast<std::size_t>(u) >= m.users) {
        throw IndexError("score: user id " + std::to_string(u) + " out of range");
    }
    if (i < 0 || static_cast<std::size_t>(i) >= m.items) {
        throw IndexError("score: item id " + std::to_string(i) + " out of range");
    }
}

}  // namespace

const char* modelKindName(ModelKind kind) { return kKindNames[static_cast<std::uint32_t>(kind)]; }

bool hasDenseTower(ModelKind kind) {
    return kind == ModelKind::OncfMlp || kind == ModelKind::Jrl || kind == ModelKind::Mlp;
}

std::optional<ModelKind> modelKindFromName(std::string_view name) {
    for (std::uint32_t k = 0; k < 7; ++k) {
        if (name == kKindNames[k]) {
            return static_cast<ModelKind>(k);
        }
    }
    return std::nullopt;
}

std::vector<RegistryEntry> ModelParams::registry() {
    return buildRegistry<RegistryEntry>(*this);
}

std::vector<ConstRegistryEntry> ModelParams::registry() const {
    return buildRegistry<ConstRegistryEntry>(*this);
}

ModelParams buildSkeleton(const ModelConfig& config, std::size_t users, std::size_t items) {
    if (users == 0 || items == 0) {
        throw ConfigError("model needs at least one user and one item");
    }
    ModelParams m;
    m.kind = config.kind;
    m.K = config.embeddingSize;
    m.C = config.featureMaps;
    m.users = users;
    m.items = items;

    if (config.kind == ModelKind::ItemPop) {
        m.K = 0;
        m.C = 0;
        m.itemCounts = Tensor({items});
        return m;
    }

    if (config.embeddingSize == 0) {
        throw ConfigError("embedding size must be positive");
    }
    m.embeddings.P = Tensor({users, m.K});
    m.embeddings.Q = Tensor({items, m.K});

    switch (config.kind) {
        case ModelKind::MfBpr:
            m.C = 0;
            break;
        case ModelKind::Gmf:
            m.C = 0;
            m.outputWeight = Tensor({m.K});
            break;
        case ModelKind::ConvNcf: {
            if (!isPowerOfTwo(m.K) || m.K < 4 || m.K > 128) {
                throw ConfigError("convncf requires K in {4,8,16,32,64,128}, got " +
                                  std::to_string(m.K));
            }
            if (m.C == 0) {
                throw ConfigError("convncf requires at least one feature map");
            }
            const std::size_t layers = log2Exact(m.K);
            m.convStack.reserve(layers);
            for (std::size_t l = 0; l < layers; ++l) {
                ConvLayerParams layer;
                layer.filters = l == 0 ? Tensor({2, 2, m.C}) : Tensor({2, 2, m.C, m.C});
                layer.bias = Tensor({m.C});
                m.convStack.push_back(std::move(layer));
            }
            m.outputWeight = Tensor({m.C});
            break;
        }
        case ModelKind::OncfMlp:
        case ModelKind::Jrl:
        case ModelKind::Mlp: {
            m.C = 0;
            if (config.mlpLayers < 1 || config.mlpLayers > 3) {
                throw ConfigError("tower depth must be 1..3, got " +
                                  std::to_string(config.mlpLayers));
            }
            std::size_t width = towerInputSize(config.kind, m.K);
            for (std::size_t l = 0; l < config.mlpLayers; ++l) {
                if (width < 2) {
                    throw ConfigError("tower layer " + std::to_string(l) +
                                      " would have zero width; reduce depth or raise K");
                }
                DenseLayerParams layer;
                layer.weight = Tensor({width, width / 2});
                layer.bias = Tensor({width / 2});
                width /= 2;
                m.denseLayers.push_back(std::move(layer));
            }
            m.outputWeight = Tensor({width});
            break;
        }
        case ModelKind::ItemPop:
            break;
    }
    return m;
}

ModelParams initModel(const ModelConfig& config, std::size_t users, std::size_t items, Rng& rng,
                      const EmbeddingTable* pretrained) {
    ModelParams m = buildSkeleton(config, users, items);
    if (m.kind == ModelKind::ItemPop) {
        return m;
    }

    if (pretrained != nullptr) {
        if (!pretrained->P.sameShape(m.embeddings.P) || !pretrained->Q.sameShape(m.embeddings.Q)) {
            throw ConfigError("pretrained embedding table has incompatible shape (expected K=" +
                              std::to_string(m.K) + ")");
        }
        m.embeddings = *pretrained;
    }

    for (RegistryEntry& entry : m.registry()) {
        if (!entry.trainable) {
            continue;
        }
        std::span<double> values = entry.tensor->data();
        if (entry.name == "P" || entry.name == "Q") {
            if (pretrained != nullptr) {
                continue;
            }
            for (double& v : values) {
                v = 0.01 * rng.gaussian();
            }
        } else if (entry.name == "w") {
            for (double& v : values) {
                v = 0.01 * rng.gaussian();
            }
        } else if (entry.name.ends_with(".filters") || entry.name.ends_with(".W")) {
            // He scaling: fan_in is 2*2*Cin for filters, the input width for
            // dense weights.
            const Tensor& t = *entry.tensor;
            const std::size_t fanIn =
                entry.name.ends_with(".W") ? t.extent(0) : 4 * (t.rank() == 3 ? 1 : t.extent(2));
            const double sigma = std::sqrt(2.0 / static_cast<double>(fanIn));
            for (double& v : values) {
                v = sigma * rng.gaussian();
            }
        }
        // biases stay zero
    }
    return m;
}

void setItemCounts(ModelParams& model, std::span<const std::int64_t> counts) {
    if (model.kind != ModelKind::ItemPop) {
        throw ConfigError("item counts only apply to the itempop model");
    }
    if (counts.size() != model.items) {
        throw DimensionError("setItemCounts: expected one count per item");
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        model.itemCounts(i) = static_cast<double>(counts[i]);
    }
}

namespace {

void runTower(const ModelParams& m, Tensor input, ForwardTrace& trace) {
    trace.towerInput = std::move(input);
    const Tensor* current = &trace.towerInput;
    trace.denseOutputs.reserve(m.denseLayers.size());
    for (const DenseLayerParams& layer : m.denseLayers) {
        trace.denseOutputs.push_back(dense(current->data(), layer, Activation::Relu));
        current = &trace.denseOutputs.back();
    }
    trace.g = *current;
    trace.value = dot(m.outputWeight.data(), trace.g.data());
}

}  // namespace

ForwardTrace scoreWithTrace(const ModelParams& model, std::int64_t u, std::int64_t i) {
    checkIds(model, u, i);
    ForwardTrace trace;
    trace.user = u;
    trace.item = i;

    if (model.kind == ModelKind::ItemPop) {
        trace.value = model.itemCounts(static_cast<std::size_t>(i));
        return trace;
    }

    const EmbeddingPair pq = lookup(model.embeddings, u, i);
    switch (model.kind) {
        case ModelKind::MfBpr:
            trace.value = dot(pq.p, pq.q);
            break;
        case ModelKind::Gmf:
            trace.g = ewiseProduct(pq.p, pq.q);
            trace.value = dot(model.outputWeight.data(), trace.g.data());
            break;
        case ModelKind::Jrl:
            runTower(model, ewiseProduct(pq.p, pq.q), trace);
            break;
        case ModelKind::Mlp:
            runTower(model, concat(pq.p, pq.q), trace);
            break;
        case ModelKind::OncfMlp:
            trace.interactionMap = outerProduct(pq.p, pq.q);
            runTower(model, trace.interactionMap.flattened(), trace);
            break;
        case ModelKind::ConvNcf: {
            trace.interactionMap = outerProduct(pq.p, pq.q);
            const Tensor* current = &trace.interactionMap;
            trace.convOutputs.reserve(model.convStack.size());
            for (const ConvLayerParams& layer : model.convStack) {
                trace.convOutputs.push_back(convForward(*current, layer));
                current = &trace.convOutputs.back();
            }
            trace.g = current->flattened();
            trace.value = dot(model.outputWeight.data(), trace.g.data());
            break;
        }
        case ModelKind::ItemPop:
            break;
    }
    return trace;
}

double score(const ModelParams& model, std::int64_t u, std::int64_t i) {
    return scoreWithTrace(model, u, i).value;
}

std::vector<double> scoreBatchForUser(const ModelParams& model, std::int64_t u,
                                      std::span<const std::int64_t> items) {
    std::vector<double> scores;
    scores.reserve(items.size());
    for (std::int64_t i : items) {
        scores.push_back(score(model, u, i));
    }
    return scores;
}

Gradients::Gradients(const ModelParams& model) {
    for (const ConstRegistryEntry& entry : model.registry()) {
        slots_.push_back(entry.trainable ? Tensor(entry.tensor->shape()) : Tensor());
    }
}

void Gradients::setZero() {
    for (Tensor& slot : slots_) {
        slot.setZero();
    }
}

void scoreBackward(const ModelParams& model, const ForwardTrace& trace, double upstream,
                   Gradients& grads) {
    if (model.kind == ModelKind::ItemPop) {
        return;  // nothing trainable
    }
    const RegistryLayout layout = layoutOf(model);
    const auto u = static_cast<std::size_t>(trace.user);
    const auto i = static_cast<std::size_t>(trace.item);
    const std::span<const double> p = model.embeddings.P.row(u);
    const std::span<const double> q = model.embeddings.Q.row(i);
    std::span<double> gradPRow = grads.slot(layout.p).row(u);
    std::span<double> gradQRow = grads.slot(layout.q).row(i);

    if (model.kind == ModelKind::MfBpr) {
        axpy(gradPRow, upstream, q);
        axpy(gradQRow, upstream, p);
        return;
    }

    // d(score)/d(w) = g, d(score)/d(g) = w.
    axpy(grads.slot(layout.w).data(), upstream, trace.g.data());
    Tensor gradVec({trace.g.size()});
    axpy(gradVec.data(), upstream, model.outputWeight.data());

    if (model.kind == ModelKind::Gmf) {
        auto [gp, gq] = ewiseProductBackward(gradVec, p, q);
        axpy(gradPRow, 1.0, gp.data());
        axpy(gradQRow, 1.0, gq.data());
        return;
    }

    if (model.kind == ModelKind::ConvNcf) {
        Tensor upstreamGrad = gradVec.reshaped({1, 1, model.C});
        for (std::size_t l = model.convStack.size(); l-- > 0;) {
            const Tensor& input = l == 0 ? trace.interactionMap : trace.convOutputs[l - 1];
            ConvGrads cg =
                convBackward(upstreamGrad, input, model.convStack[l], trace.convOutputs[l]);
            axpy(grads.slot(layout.convFilters(l)).data(), 1.0, cg.filters.data());
            axpy(grads.slot(layout.convBias(l)).data(), 1.0, cg.bias.data());
            upstreamGrad = std::move(cg.input);
        }
        auto [gp, gq] = outerProductBackward(upstreamGrad, p, q);
        axpy(gradPRow, 1.0, gp.data());
        axpy(gradQRow, 1.0, gq.data());
        return;
    }

    // Dense-tower family: mlp, jrl, oncf_mlp.
    for (std::size_t l = model.denseLayers.size(); l-- > 0;) {
        const Tensor& input = l == 0 ? trace.towerInput : trace.denseOutputs[l - 1];
        DenseGrads dg = denseBackward(gradVec, input.data(), model.denseLayers[l],
                                      trace.denseOutputs[l], Activation::Relu);
        axpy(grads.slot(layout.denseWeight(l)).data(), 1.0, dg.weight.data());
        axpy(grads.slot(layout.denseBias(l)).data(), 1.0, dg.bias.data());
        gradVec = std::move(dg.input);
    }

    switch (model.kind) {
        case ModelKind::Mlp: {
            auto [gp, gq] = concatBackward(gradVec, model.K, model.K);
            axpy(gradPRow, 1.0, gp.data());
            axpy(gradQRow, 1.0, gq.data());
            break;
        }
        case ModelKind::Jrl: {
            auto [gp, gq] = ewiseProductBackward(gradVec, p, q);
            axpy(gradPRow, 1.0, gp.data());
            axpy(gradQRow, 1.0, gq.data());
            break;
        }
        case ModelKind::OncfMlp: {
            const Tensor gradE = gradVec.reshaped({model.K, model.K});
            auto [gp, gq] = outerProductBackward(gradE, p, q);
            axpy(gradPRow, 1.0, gp.data());
            axpy(gradQRow, 1.0, gq.data());
            break;
        }
        default:
            break;
    }
}

std::size_t countParams(const ModelParams& model, std::span<const ParamGroup> groups) {
    std::size_t total = 0;
    for (const ConstRegistryEntry& entry : model.registry()) {
        if (!entry.trainable) {
            continue;
        }
        if (std::find(groups.begin(), groups.end(), entry.group) != groups.end()) {
            total += entry.tensor->size();
        }
    }
    return total;
}

std::size_t countParams(const ModelParams& model, std::initializer_list<ParamGroup> groups) {
    return countParams(model, std::span<const ParamGroup>(groups.begin(), groups.size()));
}

}  // namespace oncf
