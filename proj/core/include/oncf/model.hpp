#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oncf/nn_ops.hpp"
#include "oncf/rng.hpp"
#include "oncf/tensor.hpp"

namespace oncf {

enum class ModelKind : std::uint32_t {
    ConvNcf = 0,
    OncfMlp = 1,
    MfBpr = 2,
    Gmf = 3,
    Jrl = 4,
    Mlp = 5,
    ItemPop = 6,
};

const char* modelKindName(ModelKind kind);
std::optional<ModelKind> modelKindFromName(std::string_view name);

// True for the models whose hidden layers are a dense tower (mlp, jrl,
// oncf_mlp).
bool hasDenseTower(ModelKind kind);

// Regularization groups; each trainable tensor belongs to exactly one.
enum class ParamGroup { Embedding, Hidden, Output };

struct ModelConfig {
    ModelKind kind = ModelKind::ConvNcf;
    std::size_t embeddingSize = 64;  // K; must be a power of two in [4, 128] for convncf
    std::size_t featureMaps = 32;    // C, feature maps per convolution layer
    std::size_t mlpLayers = 3;       // tower depth for the MLP-family models (1..3)
    std::uint64_t seed = 42;
};

struct RegistryEntry {
    std::string name;
    Tensor* tensor;
    ParamGroup group;
    bool trainable;
};

struct ConstRegistryEntry {
    std::string name;
    const Tensor* tensor;
    ParamGroup group;
    bool trainable;
};

/// Parameters of one recommender model. The registry enumerates every tensor
/// in a fixed order (used by the optimizer, checkpoints, and deterministic
/// initialization). Scoring is read-only and safe to run concurrently;
/// training updates need exclusive access.
class ModelParams {
public:
    ModelKind kind = ModelKind::MfBpr;
    std::size_t K = 0;
    std::size_t C = 0;
    std::size_t users = 0;
    std::size_t items = 0;
    EmbeddingTable embeddings;
    std::vector<ConvLayerParams> convStack;
    std::vector<DenseLayerParams> denseLayers;
    Tensor outputWeight;
    Tensor itemCounts;  // ItemPop statistic; persisted but not trained

    std::size_t userCount() const { return users; }
    std::size_t itemCount() const { return items; }
    std::size_t hiddenLayerCount() const { return convStack.size() + denseLayers.size(); }

    std::vector<RegistryEntry> registry();
    std::vector<ConstRegistryEntry> registry() const;
};

// Structure without values: correct shapes, all zeros. Shared by initModel
// and the checkpoint loader. Throws ConfigError on invalid configs
// (non-power-of-two K for convncf, tower depth outside 1..3, ...).
ModelParams buildSkeleton(const ModelConfig& config, std::size_t users, std::size_t items);

// Fresh model: embeddings copied from `pretrained` when given, else drawn
// from N(0, 0.01^2); hidden weights from N(0, 2/fan_in); biases zero; output
// weight from N(0, 0.01^2). Fully determined by the rng stream.
ModelParams initModel(const ModelConfig& config, std::size_t users, std::size_t items, Rng& rng,
                      const EmbeddingTable* pretrained = nullptr);

// Installs the train-set interaction counts an ItemPop model scores with.
void setItemCounts(ModelParams& model, std::span<const std::int64_t> counts);

// Cached activations of one (u, i) forward pass, kept for the backward pass.
struct ForwardTrace {
    std::int64_t user = 0;
    std::int64_t item = 0;
    double value = 0.0;
    Tensor interactionMap;             // convncf, oncf_mlp
    std::vector<Tensor> convOutputs;   // post-ReLU, one per conv layer
    std::vector<Tensor> denseOutputs;  // post-activation, one per dense layer
    Tensor towerInput;                 // input vector of the first dense layer
    Tensor g;                          // final feature vector (empty for mf_bpr/itempop)
};

double score(const ModelParams& model, std::int64_t u, std::int64_t i);
ForwardTrace scoreWithTrace(const ModelParams& model, std::int64_t u, std::int64_t i);

// Element-wise equal to score(model, u, item) for each item, sharing the
// user-side lookup.
std::vector<double> scoreBatchForUser(const ModelParams& model, std::int64_t u,
                                      std::span<const std::int64_t> items);

/// Gradient accumulator aligned with ModelParams::registry() (slots for
/// non-trainable entries stay empty).
class Gradients {
public:
    explicit Gradients(const ModelParams& model);

    void setZero();
    Tensor& slot(std::size_t registryIndex) { return slots_[registryIndex]; }
    const Tensor& slot(std::size_t registryIndex) const { return slots_[registryIndex]; }
    std::size_t slotCount() const { return slots_.size(); }

private:
    std::vector<Tensor> slots_;
};

// Accumulates d(upstream * score)/d(params) into `grads` using the cached
// activations in `trace`.
void scoreBackward(const ModelParams& model, const ForwardTrace& trace, double upstream,
                   Gradients& grads);

// Total scalar count of the trainable tensors in the selected groups.
std::size_t countParams(const ModelParams& model, std::span<const ParamGroup> groups);
std::size_t countParams(const ModelParams& model, std::initializer_list<ParamGroup> groups);

}  // namespace oncf
