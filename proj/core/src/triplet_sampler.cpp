#include "oncf/triplet_sampler.hpp"

#include <span>
#include <string>

namespace oncf {

namespace {
constexpr std::uint64_t kShuffleTag = 0x9d2c5680aull;
constexpr std::uint64_t kNegativeTag = 0xb5026f5aa96619e9ULL;
}  // namespace

std::int64_t sampleNegativeItem(const InteractionDataset& ds, std::int64_t u, Rng& rng) {
    if (ds.trainDegree(u) >= ds.itemCount()) {
        throw SamplingError("user " + std::to_string(u) +
                            ": train positives cover all items, no negative exists");
    }
    for (;;) {
        const auto j = static_cast<std::int64_t>(rng.uniformInt(ds.itemCount()));
        if (!ds.seenInTraining(u, j)) {
            return j;
        }
    }
}

TripletSampler::TripletSampler(const InteractionDataset& ds, std::uint64_t seed,
                               std::uint64_t epoch)
    : ds_(&ds), seed_(seed), epoch_(epoch) {
    order_.reserve(ds.trainPairCount());
    for (std::size_t u = 0; u < ds.userCount(); ++u) {
        for (std::int64_t i : ds.trainItems(static_cast<std::int64_t>(u))) {
            order_.emplace_back(static_cast<std::int64_t>(u), i);
        }
    }
    Rng shuffleRng(deriveSeed(seed_, {kShuffleTag, epoch_}));
    shuffleRng.shuffle(std::span(order_));
}

std::vector<Triplet> TripletSampler::nextBatch(std::size_t batchSize) {
    std::vector<Triplet> batch;
    if (done() || batchSize == 0) {
        return batch;
    }
    const std::size_t end = std::min(order_.size(), cursor_ + batchSize);
    batch.reserve(end - cursor_);
    Rng negRng(deriveSeed(seed_, {kNegativeTag, epoch_, batchIndex_}));
    for (; cursor_ < end; ++cursor_) {
        const auto [u, i] = order_[cursor_];
        batch.push_back({u, i, sampleNegativeItem(*ds_, u, negRng)});
    }
    ++batchIndex_;
    return batch;
}

}  // namespace oncf
