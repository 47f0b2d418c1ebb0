#include "oncf/evaluation.hpp"

#include <cmath>
#include <string>
#include <thread>

namespace oncf {

RankResult rankTestItem(const ModelParams& model, const InteractionDataset& ds, std::int64_t u) {
    const std::int64_t test = ds.testItem(u);
    const std::span<const std::int64_t> negatives = ds.testNegatives(u);
    if (negatives.empty()) {
        throw ProtocolError("user " + std::to_string(u) + " has no evaluation negatives");
    }
    std::vector<std::int64_t> candidates;
    candidates.reserve(negatives.size() + 1);
    candidates.push_back(test);
    candidates.insert(candidates.end(), negatives.begin(), negatives.end());
    const std::vector<double> scores = scoreBatchForUser(model, u, candidates);

    std::size_t rank = 1;
    for (std::size_t k = 1; k < scores.size(); ++k) {
        if (scores[k] >= scores[0]) {
            ++rank;
        }
    }
    return {u, rank};
}

int hrAtK(std::size_t rank, std::size_t k) { return rank <= k ? 1 : 0; }

double ndcgAtK(std::size_t rank, std::size_t k) {
    if (rank > k) {
        return 0.0;
    }
    return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

double EpochMetrics::hrAt(std::size_t k) const {
    for (std::size_t idx = 0; idx < ks.size(); ++idx) {
        if (ks[idx] == k) {
            return hr[idx];
        }
    }
    throw ProtocolError("HR@" + std::to_string(k) + " was not evaluated");
}

double EpochMetrics::ndcgAt(std::size_t k) const {
    for (std::size_t idx = 0; idx < ks.size(); ++idx) {
        if (ks[idx] == k) {
            return ndcg[idx];
        }
    }
    throw ProtocolError("NDCG@" + std::to_string(k) + " was not evaluated");
}

EpochMetrics evaluate(const ModelParams& model, const InteractionDataset& ds,
                      std::span<const std::size_t> ks, unsigned threads) {
    const std::size_t users = ds.userCount();
    if (users == 0) {
        throw ProtocolError("evaluate: dataset has no users");
    }
    std::vector<std::size_t> ranks(users, 0);

    if (threads <= 1 || users < 2) {
        for (std::size_t u = 0; u < users; ++u) {
            ranks[u] = rankTestItem(model, ds, static_cast<std::int64_t>(u)).rank;
        }
    } else {
        const unsigned workerCount = std::min<unsigned>(threads, static_cast<unsigned>(users));
        std::vector<std::thread> workers;
        workers.reserve(workerCount);
        for (unsigned w = 0; w < workerCount; ++w) {
            workers.emplace_back([&, w] {
                for (std::size_t u = w; u < users; u += workerCount) {
                    ranks[u] = rankTestItem(model, ds, static_cast<std::int64_t>(u)).rank;
                }
            });
        }
        for (std::thread& t : workers) {
            t.join();
        }
    }

    EpochMetrics metrics;
    metrics.ks.assign(ks.begin(), ks.end());
    metrics.hr.resize(ks.size(), 0.0);
    metrics.ndcg.resize(ks.size(), 0.0);
    for (std::size_t u = 0; u < users; ++u) {
        for (std::size_t idx = 0; idx < metrics.ks.size(); ++idx) {
            metrics.hr[idx] += hrAtK(ranks[u], metrics.ks[idx]);
            metrics.ndcg[idx] += ndcgAtK(ranks[u], metrics.ks[idx]);
        }
    }
    for (std::size_t idx = 0; idx < metrics.ks.size(); ++idx) {
        metrics.hr[idx] /= static_cast<double>(users);
        metrics.ndcg[idx] /= static_cast<double>(users);
    }
    return metrics;
}

EpochMetrics MetricsHistory::tailAverage() const {
    if (epochs_.empty()) {
        throw ProtocolError("tailAverage: empty metrics history");
    }
    const std::size_t window = std::min(tailWindow_, epochs_.size());
    const std::size_t start = epochs_.size() - window;

    EpochMetrics avg;
    avg.ks = epochs_.front().ks;
    avg.hr.resize(avg.ks.size(), 0.0);
    avg.ndcg.resize(avg.ks.size(), 0.0);
    for (std::size_t e = start; e < epochs_.size(); ++e) {
        for (std::size_t idx = 0; idx < avg.ks.size(); ++idx) {
            avg.hr[idx] += epochs_[e].hr[idx];
            avg.ndcg[idx] += epochs_[e].ndcg[idx];
        }
    }
    for (std::size_t idx = 0; idx < avg.ks.size(); ++idx) {
        avg.hr[idx] /= static_cast<double>(window);
        avg.ndcg[idx] /= static_cast<double>(window);
    }
    return avg;
}

}  // namespace oncf
