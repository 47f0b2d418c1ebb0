#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "oncf/dataset.hpp"
#include "oncf/evaluation.hpp"
#include "oncf/model.hpp"
#include "oncf/triplet_sampler.hpp"

namespace oncf {

// Per-group L2 coefficients for Eq-style regularization of the BPR objective.
struct GroupLambdas {
    double embedding = 0.0;
    double hidden = 0.0;
    double output = 0.0;

    double of(ParamGroup group) const {
        switch (group) {
            case ParamGroup::Embedding:
                return embedding;
            case ParamGroup::Hidden:
                return hidden;
            case ParamGroup::Output:
                return output;
        }
        return 0.0;
    }
};

struct TrainConfig {
    double learningRate = 0.05;
    std::size_t batchSize = 256;
    std::size_t epochs = 20;
    double lambdaEmbedding = 0.0;
    double lambdaHidden = 0.0;
    double lambdaOutput = 0.0;
    std::size_t noRegEpochs = 1;  // epochs trained without any regularization
    std::uint64_t seed = 42;
    double adagradEpsilon = 1e-8;
    double maxNormW = 0.0;  // optional max-norm constraint on w; 0 disables

    GroupLambdas lambdas() const { return {lambdaEmbedding, lambdaHidden, lambdaOutput}; }
};

// Numerically stable ln(1 + e^x); -ln sigma(d) == softplus(-d).
double softplus(double x);
double sigmoid(double x);

/// Per-tensor squared-gradient accumulators, aligned with the model registry.
class OptimizerState {
public:
    explicit OptimizerState(const ModelParams& model);

    Tensor& accumulator(std::size_t registryIndex) { return acc_[registryIndex]; }
    const Tensor& accumulator(std::size_t registryIndex) const { return acc_[registryIndex]; }
    std::size_t size() const { return acc_.size(); }

private:
    std::vector<Tensor> acc_;
};

struct BprLossResult {
    double loss = 0.0;                // pairwise sum plus regularization
    std::vector<double> perPair;      // softplus terms, one per score pair
};

// BPR objective over precomputed (y_ui, y_uj) score pairs. The pairwise term
// is softplus(-(y_ui - y_uj)), safe for |d| well beyond 1e3; the penalty is
// sum over groups of lambda_group * ||tensors in group||^2.
BprLossResult bprLoss(std::span<const std::pair<double, double>> scorePairs,
                      const ModelParams& model, const GroupLambdas& lambdas);

struct BatchStats {
    double pairLossSum = 0.0;
    std::size_t pairs = 0;
};

// Gradient of the batch BPR objective (sum over triplets) accumulated into
// `grads`: each pair contributes -sigma(-d) through both scoring paths, and
// every trainable tensor additionally receives 2*lambda*theta when its group
// coefficient is active.
BatchStats bprGradient(const ModelParams& model, std::span<const Triplet> batch,
                       const GroupLambdas& lambdas, Gradients& grads);

// acc += g^2; theta -= lr * g / (sqrt(acc) + eps), elementwise.
void adagradStep(ModelParams& model, const Gradients& grads, OptimizerState& state, double lr,
                 double epsilon);

// Rescales w onto the ball of radius maxNorm when it has left it.
void applyMaxNorm(ModelParams& model, double maxNorm);

// One pass over all train positives in shuffled order. Regularization is
// gated: epochs with epochIndex < noRegEpochs run with all lambdas at zero.
// Returns the mean per-pair loss; throws NumericError when the loss stops
// being finite.
double trainEpoch(ModelParams& model, const InteractionDataset& ds, OptimizerState& state,
                  const TrainConfig& config, std::size_t epochIndex);

// MF-BPR pretraining of the embedding layer; returns its P, Q.
EmbeddingTable pretrainEmbeddings(const InteractionDataset& ds, std::size_t embeddingSize,
                                  const TrainConfig& config);

struct TrainingRun {
    std::vector<double> epochLoss;
    MetricsHistory metrics;
};

// epoch index, mean loss, wall seconds, metrics (null unless evaluated).
using EpochCallback =
    std::function<void(std::size_t, double, double, const EpochMetrics*)>;

// Full training loop: config.epochs passes, evaluating every `evalEvery`
// epochs (0 = never). The callback fires after every epoch.
TrainingRun trainModel(ModelParams& model, const InteractionDataset& ds, const TrainConfig& config,
                       std::size_t evalEvery, std::span<const std::size_t> ks,
                       std::size_t tailWindow, unsigned threads,
                       const EpochCallback& callback = {});

}  // namespace oncf
