#pragma once

#include <cstdint>
#include <vector>

#include "oncf/dataset.hpp"
#include "oncf/rng.hpp"

namespace oncf {

// One BPR training instance: i is a train positive of u, j is not.
struct Triplet {
    std::int64_t user = 0;
    std::int64_t pos = 0;
    std::int64_t neg = 0;

    friend bool operator==(const Triplet&, const Triplet&) = default;
};

// Uniform draw over items outside the user's train positives (rejection
// sampling). Throws SamplingError when the user's positives cover every item.
std::int64_t sampleNegativeItem(const InteractionDataset& ds, std::int64_t u, Rng& rng);

/// One epoch of BPR triplet batches: all observed (u, i) pairs are shuffled
/// once, batches are taken sequentially, and each positive is paired with a
/// negative drawn on the fly. Every batch is reproducible from
/// (seed, epoch, batch index) alone, so batches could be prepared in parallel
/// without changing the result.
class TripletSampler {
public:
    TripletSampler(const InteractionDataset& ds, std::uint64_t seed, std::uint64_t epoch);

    bool done() const { return cursor_ >= order_.size(); }
    std::size_t pairCount() const { return order_.size(); }
    std::size_t batchIndex() const { return batchIndex_; }

    // Next sequential batch of at most batchSize triplets; empty when done.
    std::vector<Triplet> nextBatch(std::size_t batchSize);

private:
    const InteractionDataset* ds_;
    std::uint64_t seed_;
    std::uint64_t epoch_;
    std::vector<std::pair<std::int64_t, std::int64_t>> order_;  // shuffled (u, i)
    std::size_t cursor_ = 0;
    std::size_t batchIndex_ = 0;
};

}  // namespace oncf
