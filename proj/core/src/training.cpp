#include "oncf/training.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace oncf {

double softplus(double x) {
    // max(x, 0) + log1p(e^{ -|x| }) never overflows and keeps full precision
    // in both tails.
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

OptimizerState::OptimizerState(const ModelParams& model) {
    for (const ConstRegistryEntry& entry : model.registry()) {
        acc_.push_back(entry.trainable ? Tensor(entry.tensor->shape()) : Tensor());
    }
}

BprLossResult bprLoss(std::span<const std::pair<double, double>> scorePairs,
                      const ModelParams& model, const GroupLambdas& lambdas) {
    BprLossResult result;
    result.perPair.reserve(scorePairs.size());
    for (const auto& [posScore, negScore] : scorePairs) {
        const double pairLoss = softplus(-(posScore - negScore));
        result.perPair.push_back(pairLoss);
        result.loss += pairLoss;
    }
    for (const ConstRegistryEntry& entry : model.registry()) {
        if (!entry.trainable) {
            continue;
        }
        const double lambda = lambdas.of(entry.group);
        if (lambda != 0.0) {
            result.loss += lambda * squaredNorm(entry.tensor->data());
        }
    }
    return result;
}

BatchStats bprGradient(const ModelParams& model, std::span<const Triplet> batch,
                       const GroupLambdas& lambdas, Gradients& grads) {
    BatchStats stats;
    for (const Triplet& t : batch) {
        const ForwardTrace posTrace = scoreWithTrace(model, t.user, t.pos);
        const ForwardTrace negTrace = scoreWithTrace(model, t.user, t.neg);
        const double d = posTrace.value - negTrace.value;
        stats.pairLossSum += softplus(-d);
        ++stats.pairs;

        // dL/dd for -ln sigma(d).
        const double dLossDd = -sigmoid(-d);
        scoreBackward(model, posTrace, dLossDd, grads);
        scoreBackward(model, negTrace, -dLossDd, grads);
    }

    const auto registry = model.registry();
    for (std::size_t idx = 0; idx < registry.size(); ++idx) {
        if (!registry[idx].trainable) {
            continue;
        }
        const double lambda = lambdas.of(registry[idx].group);
        if (lambda != 0.0) {
            axpy(grads.slot(idx).data(), 2.0 * lambda, registry[idx].tensor->data());
        }
    }
    return stats;
}

void adagradStep(ModelParams& model, const Gradients& grads, OptimizerState& state, double lr,
                 double epsilon) {
    auto registry = model.registry();
    if (grads.slotCount() != registry.size() || state.size() != registry.size()) {
        throw DimensionError("adagradStep: gradient/state slots do not match the registry");
    }
    for (std::size_t idx = 0; idx < registry.size(); ++idx) {
        if (!registry[idx].trainable) {
            continue;
        }
        std::span<double> theta = registry[idx].tensor->data();
        std::span<const double> g = grads.slot(idx).data();
        std::span<double> acc = state.accumulator(idx).data();
        if (g.size() != theta.size() || acc.size() != theta.size()) {
            throw DimensionError("adagradStep: shape mismatch for " + registry[idx].name);
        }
        for (std::size_t k = 0; k < theta.size(); ++k) {
            acc[k] += g[k] * g[k];
            theta[k] -= lr * g[k] / (std::sqrt(acc[k]) + epsilon);
        }
    }
}

void applyMaxNorm(ModelParams& model, double maxNorm) {
    if (maxNorm <= 0.0 || model.outputWeight.empty()) {
        return;
    }
    const double norm = std::sqrt(squaredNorm(model.outputWeight.data()));
    if (norm > maxNorm) {
        const double scale = maxNorm / norm;
        for (double& v : model.outputWeight.data()) {
            v *= scale;
        }
    }
}

double trainEpoch(ModelParams& model, const InteractionDataset& ds, OptimizerState& state,
                  const TrainConfig& config, std::size_t epochIndex) {
    const GroupLambdas lambdas =
        epochIndex >= config.noRegEpochs ? config.lambdas() : GroupLambdas{};
    TripletSampler sampler(ds, config.seed, epochIndex);
    Gradients grads(model);

    double lossSum = 0.0;
    std::size_t pairCount = 0;
    while (!sampler.done()) {
        const std::size_t batchIndex = sampler.batchIndex();
        const std::vector<Triplet> batch = sampler.nextBatch(config.batchSize);
        grads.setZero();
        const BatchStats stats = bprGradient(model, batch, lambdas, grads);
        if (!std::isfinite(stats.pairLossSum)) {
            throw NumericError("training loss is not finite at epoch " +
                               std::to_string(epochIndex) + ", batch " +
                               std::to_string(batchIndex));
        }
        adagradStep(model, grads, state, config.learningRate, config.adagradEpsilon);
        if (config.maxNormW > 0.0) {
            applyMaxNorm(model, config.maxNormW);
        }
        lossSum += stats.pairLossSum;
        pairCount += stats.pairs;
    }
    return pairCount == 0 ? 0.0 : lossSum / static_cast<double>(pairCount);
}

EmbeddingTable pretrainEmbeddings(const InteractionDataset& ds, std::size_t embeddingSize,
                                  const TrainConfig& config) {
    ModelConfig modelConfig;
    modelConfig.kind = ModelKind::MfBpr;
    modelConfig.embeddingSize = embeddingSize;
    modelConfig.seed = config.seed;
    Rng rng(modelConfig.seed);
    ModelParams model = initModel(modelConfig, ds.userCount(), ds.itemCount(), rng);
    OptimizerState state(model);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        trainEpoch(model, ds, state, config, epoch);
    }
    return model.embeddings;
}

TrainingRun trainModel(ModelParams& model, const InteractionDataset& ds, const TrainConfig& config,
                       std::size_t evalEvery, std::span<const std::size_t> ks,
                       std::size_t tailWindow, unsigned threads, const EpochCallback& callback) {
    TrainingRun run{.epochLoss = {}, .metrics = MetricsHistory(tailWindow)};
    OptimizerState state(model);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const double meanLoss = trainEpoch(model, ds, state, config, epoch);
        run.epochLoss.push_back(meanLoss);

        const EpochMetrics* metricsPtr = nullptr;
        EpochMetrics metrics;
        if (evalEvery > 0 && (epoch + 1) % evalEvery == 0) {
            metrics = evaluate(model, ds, ks, threads);
            run.metrics.append(metrics);
            metricsPtr = &metrics;
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (callback) {
            callback(epoch, meanLoss, seconds, metricsPtr);
        }
    }
    return run;
}

}  // namespace oncf
