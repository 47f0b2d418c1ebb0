#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oncf/dataset.hpp"
#include "oncf/model.hpp"

namespace oncf {

// 1-based position of the held-out item among its candidates. Ties are
// counted pessimistically: an equal-scoring negative ranks ahead.
struct RankResult {
    std::int64_t user = 0;
    std::size_t rank = 0;
};

RankResult rankTestItem(const ModelParams& model, const InteractionDataset& ds, std::int64_t u);

// 1 iff the test item landed within the top k.
int hrAtK(std::size_t rank, std::size_t k);

// Single-relevant-item NDCG: 1/log2(rank + 1) within the top k, else 0.
double ndcgAtK(std::size_t rank, std::size_t k);

// Mean HR@k / NDCG@k over all users for each cutoff in `ks`.
struct EpochMetrics {
    std::vector<std::size_t> ks;
    std::vector<double> hr;
    std::vector<double> ndcg;

    double hrAt(std::size_t k) const;
    double ndcgAt(std::size_t k) const;
};

// Ranks every user's test item against its frozen negatives. Users are
// independent; with threads > 1 the per-user work fans out but the reduction
// stays ordered by user id, so results are identical to the serial run.
EpochMetrics evaluate(const ModelParams& model, const InteractionDataset& ds,
                      std::span<const std::size_t> ks, unsigned threads = 1);

/// Per-epoch metric series with the tail-window averaging used for reporting
/// (mean of the final `tailWindow` epochs, or of everything when the run is
/// shorter).
class MetricsHistory {
public:
    explicit MetricsHistory(std::size_t tailWindow = 10) : tailWindow_(tailWindow) {}

    void append(EpochMetrics metrics) { epochs_.push_back(std::move(metrics)); }
    const std::vector<EpochMetrics>& epochs() const { return epochs_; }
    bool empty() const { return epochs_.empty(); }
    std::size_t tailWindow() const { return tailWindow_; }

    EpochMetrics tailAverage() const;  // ProtocolError on an empty history

private:
    std::size_t tailWindow_;
    std::vector<EpochMetrics> epochs_;
};

}  // namespace oncf
