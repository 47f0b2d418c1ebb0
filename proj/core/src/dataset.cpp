#include "oncf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "oncf/rng.hpp"

namespace oncf {

namespace {

constexpr std::uint64_t kSplitStreamTag = 0xf1d2d2f924e986acULL;

bool parseInt(std::string_view token, std::int64_t& out) {
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> splitWs(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
            ++i;
        }
        if (i > start) {
            tokens.push_back(line.substr(start, i - start));
        }
    }
    return tokens;
}

// Dense ids follow the sorted order of the raw tokens (numeric when every
// token is an integer). Canonical files therefore reload as the identity map,
// which is what makes `prep` idempotent.
std::vector<std::string> sortedKeys(const std::vector<std::string>& seen) {
    std::vector<std::string> keys = seen;
    bool allNumeric = true;
    std::vector<std::pair<std::int64_t, std::string>> numeric;
    numeric.reserve(keys.size());
    for (const std::string& k : keys) {
        std::int64_t value = 0;
        if (!parseInt(k, value)) {
            allNumeric = false;
            break;
        }
        numeric.emplace_back(value, k);
    }
    if (allNumeric) {
        std::sort(numeric.begin(), numeric.end());
        for (std::size_t i = 0; i < keys.size(); ++i) {
            keys[i] = std::move(numeric[i].second);
        }
    } else {
        std::sort(keys.begin(), keys.end());
    }
    return keys;
}

}  // namespace

TripleData parseTriples(std::istream& in, const std::string& name) {
    struct RawInteraction {
        std::string user, item;
        std::int64_t timestamp;
    };
    std::vector<RawInteraction> raw;
    std::vector<std::string> userSeen, itemSeen;
    std::unordered_map<std::string, std::int64_t> userIds, itemIds;

    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        std::string_view view = line;
        if (!view.empty() && view.front() == '#') {
            continue;
        }
        auto tokens = splitWs(view);
        if (tokens.empty()) {
            continue;
        }
        if (tokens.size() != 3) {
            throw ParseError(name + ":" + std::to_string(lineNo) +
                             ": expected 'user item timestamp', got " +
                             std::to_string(tokens.size()) + " fields");
        }
        std::int64_t ts = 0;
        if (!parseInt(tokens[2], ts)) {
            throw ParseError(name + ":" + std::to_string(lineNo) + ": bad timestamp '" +
                             std::string(tokens[2]) + "'");
        }
        RawInteraction r{std::string(tokens[0]), std::string(tokens[1]), ts};
        if (userIds.emplace(r.user, 0).second) {
            userSeen.push_back(r.user);
        }
        if (itemIds.emplace(r.item, 0).second) {
            itemSeen.push_back(r.item);
        }
        raw.push_back(std::move(r));
    }
    if (raw.empty()) {
        throw DataError(name + ": empty dataset");
    }

    TripleData out;
    out.userKeys = sortedKeys(userSeen);
    out.itemKeys = sortedKeys(itemSeen);
    for (std::size_t i = 0; i < out.userKeys.size(); ++i) {
        userIds[out.userKeys[i]] = static_cast<std::int64_t>(i);
    }
    for (std::size_t i = 0; i < out.itemKeys.size(); ++i) {
        itemIds[out.itemKeys[i]] = static_cast<std::int64_t>(i);
    }
    out.interactions.reserve(raw.size());
    for (const RawInteraction& r : raw) {
        out.interactions.push_back({userIds[r.user], itemIds[r.item], r.timestamp});
    }
    return out;
}

TripleData loadTriples(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open triples file: " + path);
    }
    return parseTriples(in, path);
}

std::vector<Interaction> mergeRepeats(const std::vector<Interaction>& data) {
    std::vector<Interaction> out;
    out.reserve(data.size());
    std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> firstPos;
    for (const Interaction& it : data) {
        auto [pos, inserted] = firstPos.try_emplace({it.user, it.item}, out.size());
        if (inserted) {
            out.push_back(it);
        } else if (it.timestamp < out[pos->second].timestamp) {
            out[pos->second].timestamp = it.timestamp;
        }
    }
    return out;
}

TripleData mergeRepeats(TripleData data) {
    data.interactions = mergeRepeats(data.interactions);
    return data;
}

ReindexedInteractions coreFilter(const std::vector<Interaction>& data, std::size_t minUser,
                                 std::size_t minItem) {
    std::int64_t maxUser = -1, maxItem = -1;
    for (const Interaction& it : data) {
        maxUser = std::max(maxUser, it.user);
        maxItem = std::max(maxItem, it.item);
    }
    const std::size_t users = static_cast<std::size_t>(maxUser + 1);
    const std::size_t items = static_cast<std::size_t>(maxItem + 1);

    std::vector<bool> userAlive(users, true), itemAlive(items, true);
    std::vector<std::size_t> userDeg(users, 0), itemDeg(items, 0);

    bool changed = true;
    while (changed) {
        changed = false;
        std::fill(userDeg.begin(), userDeg.end(), 0);
        std::fill(itemDeg.begin(), itemDeg.end(), 0);
        for (const Interaction& it : data) {
            if (userAlive[it.user] && itemAlive[it.item]) {
                ++userDeg[it.user];
                ++itemDeg[it.item];
            }
        }
        for (std::size_t u = 0; u < users; ++u) {
            if (userAlive[u] && userDeg[u] < minUser) {
                userAlive[u] = false;
                changed = true;
            }
        }
        for (std::size_t i = 0; i < items; ++i) {
            if (itemAlive[i] && itemDeg[i] < minItem) {
                itemAlive[i] = false;
                changed = true;
            }
        }
    }

    ReindexedInteractions out;
    out.userRemap.assign(users, -1);
    out.itemRemap.assign(items, -1);
    for (std::size_t u = 0; u < users; ++u) {
        if (userAlive[u]) {
            out.userRemap[u] = static_cast<std::int64_t>(out.userCount++);
        }
    }
    for (std::size_t i = 0; i < items; ++i) {
        if (itemAlive[i]) {
            out.itemRemap[i] = static_cast<std::int64_t>(out.itemCount++);
        }
    }
    for (const Interaction& it : data) {
        if (userAlive[it.user] && itemAlive[it.item]) {
            out.interactions.push_back(
                {out.userRemap[it.user], out.itemRemap[it.item], it.timestamp});
        }
    }
    if (out.interactions.empty()) {
        throw DataError("coreFilter: no interactions survive minUser=" + std::to_string(minUser) +
                        " minItem=" + std::to_string(minItem));
    }
    return out;
}

TripleData coreFilter(const TripleData& data, std::size_t minUser, std::size_t minItem) {
    ReindexedInteractions filtered = coreFilter(data.interactions, minUser, minItem);
    TripleData out;
    out.interactions = std::move(filtered.interactions);
    out.userKeys.resize(filtered.userCount);
    out.itemKeys.resize(filtered.itemCount);
    for (std::size_t u = 0; u < filtered.userRemap.size(); ++u) {
        if (filtered.userRemap[u] >= 0 && u < data.userKeys.size()) {
            out.userKeys[filtered.userRemap[u]] = data.userKeys[u];
        }
    }
    for (std::size_t i = 0; i < filtered.itemRemap.size(); ++i) {
        if (filtered.itemRemap[i] >= 0 && i < data.itemKeys.size()) {
            out.itemKeys[filtered.itemRemap[i]] = data.itemKeys[i];
        }
    }
    return out;
}

void saveTriples(const TripleData& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write triples file: " + path);
    }
    std::vector<Interaction> sorted = data.interactions;
    std::sort(sorted.begin(), sorted.end(), [](const Interaction& a, const Interaction& b) {
        return std::tie(a.user, a.timestamp, a.item) < std::tie(b.user, b.timestamp, b.item);
    });
    for (const Interaction& it : sorted) {
        out << it.user << '\t' << it.item << '\t' << it.timestamp << '\n';
    }
}

void saveIdMap(const std::vector<std::string>& keys, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write id map: " + path);
    }
    for (std::size_t i = 0; i < keys.size(); ++i) {
        out << i << '\t' << keys[i] << '\n';
    }
}

InteractionDataset::InteractionDataset(std::size_t itemCount,
                                       std::vector<std::vector<std::int64_t>> trainItems,
                                       std::vector<std::int64_t> testItems,
                                       std::vector<std::vector<std::int64_t>> testNegatives)
    : itemCount_(itemCount),
      trainItems_(std::move(trainItems)),
      testItems_(std::move(testItems)),
      testNegatives_(std::move(testNegatives)) {
    if (trainItems_.size() != testItems_.size() || trainItems_.size() != testNegatives_.size()) {
        throw ProtocolError("split: per-user arrays disagree on user count");
    }
    sortedTrain_ = trainItems_;
    for (auto& items : sortedTrain_) {
        std::sort(items.begin(), items.end());
        trainPairCount_ += items.size();
    }
}

InteractionDataset InteractionDataset::leaveLatestOut(const std::vector<Interaction>& data,
                                                      std::size_t numNegatives,
                                                      std::uint64_t seed) {
    std::int64_t maxUser = -1, maxItem = -1;
    for (const Interaction& it : data) {
        maxUser = std::max(maxUser, it.user);
        maxItem = std::max(maxItem, it.item);
    }
    const std::size_t users = static_cast<std::size_t>(maxUser + 1);
    const std::size_t items = static_cast<std::size_t>(maxItem + 1);

    std::vector<std::vector<Interaction>> perUser(users);
    for (const Interaction& it : data) {
        perUser[it.user].push_back(it);
    }

    std::vector<std::vector<std::int64_t>> train(users);
    std::vector<std::int64_t> test(users, -1);
    std::vector<std::vector<std::int64_t>> negatives(users);

    for (std::size_t u = 0; u < users; ++u) {
        auto& history = perUser[u];
        if (history.empty()) {
            throw ProtocolError("leaveLatestOut: user " + std::to_string(u) +
                                " has no interactions");
        }
        // Latest interaction wins; timestamp ties go to the larger item id.
        std::sort(history.begin(), history.end(), [](const Interaction& a, const Interaction& b) {
            return std::tie(a.timestamp, a.item) < std::tie(b.timestamp, b.item);
        });
        test[u] = history.back().item;
        train[u].reserve(history.size() - 1);
        for (std::size_t k = 0; k + 1 < history.size(); ++k) {
            train[u].push_back(history[k].item);
        }

        std::vector<bool> seen(items, false);
        for (const Interaction& it : history) {
            seen[it.item] = true;
        }
        std::vector<std::int64_t> unseen;
        unseen.reserve(items);
        for (std::size_t i = 0; i < items; ++i) {
            if (!seen[i]) {
                unseen.push_back(static_cast<std::int64_t>(i));
            }
        }
        if (unseen.size() < numNegatives) {
            throw ProtocolError("leaveLatestOut: user " + std::to_string(u) + " has only " +
                                std::to_string(unseen.size()) + " unseen items, need " +
                                std::to_string(numNegatives));
        }
        // Partial Fisher-Yates: uniform without replacement, one stream per
        // user so the split does not depend on user processing order.
        Rng rng(deriveSeed(seed, {kSplitStreamTag, u}));
        negatives[u].reserve(numNegatives);
        for (std::size_t k = 0; k < numNegatives; ++k) {
            const std::size_t j = k + rng.uniformInt(unseen.size() - k);
            std::swap(unseen[k], unseen[j]);
            negatives[u].push_back(unseen[k]);
        }
    }

    return InteractionDataset(items, std::move(train), std::move(test), std::move(negatives));
}

void InteractionDataset::checkUser(std::int64_t u) const {
    if (u < 0 || static_cast<std::size_t>(u) >= trainItems_.size()) {
        throw IndexError("user id " + std::to_string(u) + " out of range");
    }
}

std::span<const std::int64_t> InteractionDataset::trainItems(std::int64_t u) const {
    checkUser(u);
    return trainItems_[static_cast<std::size_t>(u)];
}

bool InteractionDataset::seenInTraining(std::int64_t u, std::int64_t item) const {
    checkUser(u);
    const auto& sorted = sortedTrain_[static_cast<std::size_t>(u)];
    return std::binary_search(sorted.begin(), sorted.end(), item);
}

std::int64_t InteractionDataset::testItem(std::int64_t u) const {
    checkUser(u);
    const std::int64_t item = testItems_[static_cast<std::size_t>(u)];
    if (item < 0) {
        throw ProtocolError("user " + std::to_string(u) + " has no test item");
    }
    return item;
}

std::span<const std::int64_t> InteractionDataset::testNegatives(std::int64_t u) const {
    checkUser(u);
    return testNegatives_[static_cast<std::size_t>(u)];
}

std::vector<std::int64_t> InteractionDataset::itemInteractionCounts() const {
    std::vector<std::int64_t> counts(itemCount_, 0);
    for (const auto& items : trainItems_) {
        for (std::int64_t i : items) {
            ++counts[static_cast<std::size_t>(i)];
        }
    }
    return counts;
}

void InteractionDataset::save(const std::string& trainPath, const std::string& testPath) const {
    std::ofstream train(trainPath);
    if (!train) {
        throw DataError("cannot write " + trainPath);
    }
    train << "# users " << userCount() << " items " << itemCount_ << "\n";
    for (std::size_t u = 0; u < trainItems_.size(); ++u) {
        for (std::int64_t i : trainItems_[u]) {
            train << u << '\t' << i << '\n';
        }
    }

    std::ofstream test(testPath);
    if (!test) {
        throw DataError("cannot write " + testPath);
    }
    test << "# users " << userCount() << " items " << itemCount_ << "\n";
    for (std::size_t u = 0; u < testItems_.size(); ++u) {
        test << u << '\t' << testItems_[u] << '\t';
        const auto& negs = testNegatives_[u];
        for (std::size_t k = 0; k < negs.size(); ++k) {
            if (k > 0) {
                test << ',';
            }
            test << negs[k];
        }
        test << '\n';
    }
}

namespace {

struct SplitHeader {
    std::size_t users = 0;
    std::size_t items = 0;
};

SplitHeader parseSplitHeader(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError(path + ": empty split file");
    }
    SplitHeader h;
    std::istringstream ss(line);
    std::string hash, usersWord, itemsWord;
    if (!(ss >> hash >> usersWord >> h.users >> itemsWord >> h.items) || hash != "#" ||
        usersWord != "users" || itemsWord != "items") {
        throw ParseError(path + ":1: expected '# users M items N' header");
    }
    return h;
}

}  // namespace

InteractionDataset InteractionDataset::load(const std::string& trainPath,
                                            const std::string& testPath) {
    std::ifstream train(trainPath);
    if (!train) {
        throw DataError("cannot open split train file: " + trainPath);
    }
    SplitHeader header = parseSplitHeader(train, trainPath);

    std::vector<std::vector<std::int64_t>> trainItems(header.users);
    std::string line;
    std::size_t lineNo = 1;
    while (std::getline(train, line)) {
        ++lineNo;
        auto tokens = splitWs(line);
        if (tokens.empty()) {
            continue;
        }
        std::int64_t u = 0, i = 0;
        if (tokens.size() != 2 || !parseInt(tokens[0], u) || !parseInt(tokens[1], i)) {
            throw ParseError(trainPath + ":" + std::to_string(lineNo) + ": expected 'user item'");
        }
        if (u < 0 || static_cast<std::size_t>(u) >= header.users) {
            throw ParseError(trainPath + ":" + std::to_string(lineNo) + ": user out of range");
        }
        trainItems[static_cast<std::size_t>(u)].push_back(i);
    }

    std::ifstream test(testPath);
    if (!test) {
        throw DataError("cannot open split test file: " + testPath);
    }
    SplitHeader testHeader = parseSplitHeader(test, testPath);
    if (testHeader.users != header.users || testHeader.items != header.items) {
        throw DataError("split headers disagree between " + trainPath + " and " + testPath);
    }

    std::vector<std::int64_t> testItems(header.users, -1);
    std::vector<std::vector<std::int64_t>> negatives(header.users);
    lineNo = 1;
    while (std::getline(test, line)) {
        ++lineNo;
        auto tokens = splitWs(line);
        if (tokens.empty()) {
            continue;
        }
        std::int64_t u = 0, item = 0;
        if (tokens.size() != 3 || !parseInt(tokens[0], u) || !parseInt(tokens[1], item)) {
            throw ParseError(testPath + ":" + std::to_string(lineNo) +
                             ": expected 'user testItem negatives'");
        }
        if (u < 0 || static_cast<std::size_t>(u) >= header.users) {
            throw ParseError(testPath + ":" + std::to_string(lineNo) + ": user out of range");
        }
        testItems[static_cast<std::size_t>(u)] = item;
        std::string negs(tokens[2]);
        std::size_t start = 0;
        while (start <= negs.size()) {
            std::size_t comma = negs.find(',', start);
            std::string_view tok(negs.data() + start,
                                 (comma == std::string::npos ? negs.size() : comma) - start);
            std::int64_t n = 0;
            if (!parseInt(tok, n)) {
                throw ParseError(testPath + ":" + std::to_string(lineNo) + ": bad negative '" +
                                 std::string(tok) + "'");
            }
            negatives[static_cast<std::size_t>(u)].push_back(n);
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
    }
    for (std::size_t u = 0; u < header.users; ++u) {
        if (testItems[u] < 0) {
            throw DataError(testPath + ": user " + std::to_string(u) + " missing from test file");
        }
    }

    return InteractionDataset(header.items, std::move(trainItems), std::move(testItems),
                              std::move(negatives));
}

}  // namespace oncf
