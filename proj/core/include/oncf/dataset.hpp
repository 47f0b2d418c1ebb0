#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "oncf/error.hpp"

namespace oncf {

// One implicit-feedback event. Ids are dense (0..M-1 / 0..N-1) once the data
// has been through loadTriples / coreFilter.
struct Interaction {
    std::int64_t user = 0;
    std::int64_t item = 0;
    std::int64_t timestamp = 0;

    friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Interactions plus the dense-id -> raw-token maps retained for export.
struct TripleData {
    std::vector<Interaction> interactions;
    std::vector<std::string> userKeys;
    std::vector<std::string> itemKeys;

    std::size_t userCount() const { return userKeys.size(); }
    std::size_t itemCount() const { return itemKeys.size(); }
};

// Parses "user item timestamp" lines ('#' starts a comment). Raw user/item
// tokens are mapped to dense ids: numerically when every token is an integer,
// lexicographically otherwise, so re-loading a canonical file is the identity
// mapping. Throws ParseError with the offending line number, DataError when
// no interactions remain.
TripleData loadTriples(const std::string& path);
TripleData parseTriples(std::istream& in, const std::string& name);

// Collapses repeated (user, item) pairs to the earliest timestamp. Keeps the
// first-occurrence order of each pair.
std::vector<Interaction> mergeRepeats(const std::vector<Interaction>& data);
TripleData mergeRepeats(TripleData data);

struct ReindexedInteractions {
    std::vector<Interaction> interactions;
    std::vector<std::int64_t> userRemap;  // old dense id -> new, -1 if dropped
    std::vector<std::int64_t> itemRemap;
    std::size_t userCount = 0;
    std::size_t itemCount = 0;
};

// Iteratively removes users with < minUser interactions and items with
// < minItem interactions until a fixed point, then re-indexes the survivors
// densely in ascending old-id order. Throws DataError when nothing survives.
ReindexedInteractions coreFilter(const std::vector<Interaction>& data, std::size_t minUser,
                                 std::size_t minItem);
TripleData coreFilter(const TripleData& data, std::size_t minUser, std::size_t minItem);

// Canonical triples file: dense ids, "user<TAB>item<TAB>timestamp", sorted by
// (user, timestamp, item). Re-loading and re-writing is the identity.
void saveTriples(const TripleData& data, const std::string& path);

// One "denseId<TAB>rawKey" line per id.
void saveIdMap(const std::vector<std::string>& keys, const std::string& path);

/// Train/test split of an implicit-feedback dataset in the leave-latest-out
/// protocol: per user the newest interaction is the test positive and a frozen
/// list of never-interacted items are the ranking negatives. Immutable after
/// construction; safe to share across threads.
class InteractionDataset {
public:
    // Holds out the max-timestamp interaction per user (ties broken by larger
    // item id) and samples numNegatives unseen items per user without
    // replacement. Deterministic in `seed`. Throws ProtocolError when a user
    // has no interactions at all or too few unseen items.
    static InteractionDataset leaveLatestOut(const std::vector<Interaction>& data,
                                             std::size_t numNegatives, std::uint64_t seed);

    // Direct constructor for tests and for split files loaded from disk.
    InteractionDataset(std::size_t itemCount, std::vector<std::vector<std::int64_t>> trainItems,
                       std::vector<std::int64_t> testItems,
                       std::vector<std::vector<std::int64_t>> testNegatives);

    std::size_t userCount() const { return trainItems_.size(); }
    std::size_t itemCount() const { return itemCount_; }
    std::size_t numNegatives() const { return testNegatives_.empty() ? 0 : testNegatives_[0].size(); }

    std::span<const std::int64_t> trainItems(std::int64_t u) const;
    std::size_t trainDegree(std::int64_t u) const { return trainItems(u).size(); }
    bool seenInTraining(std::int64_t u, std::int64_t item) const;
    std::int64_t testItem(std::int64_t u) const;
    std::span<const std::int64_t> testNegatives(std::int64_t u) const;

    std::size_t trainPairCount() const { return trainPairCount_; }

    // Train-set interaction count per item (the ItemPop statistic).
    std::vector<std::int64_t> itemInteractionCounts() const;

    // Split files: train is one "user<TAB>item" line per train pair, test is
    // one "user<TAB>testItem<TAB>neg1,neg2,..." line per user. Both start with
    // a "# users M items N" header.
    void save(const std::string& trainPath, const std::string& testPath) const;
    static InteractionDataset load(const std::string& trainPath, const std::string& testPath);

private:
    void checkUser(std::int64_t u) const;

    std::size_t itemCount_ = 0;
    std::size_t trainPairCount_ = 0;
    std::vector<std::vector<std::int64_t>> trainItems_;    // per user, split order
    std::vector<std::vector<std::int64_t>> sortedTrain_;   // per user, ascending (membership)
    std::vector<std::int64_t> testItems_;
    std::vector<std::vector<std::int64_t>> testNegatives_;
};

}  // namespace oncf
