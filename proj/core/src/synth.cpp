#include "oncf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>

#include "oncf/rng.hpp"

namespace oncf {

TripleData synthesize(const SynthConfig& config) {
    if (config.users == 0 || config.items < 4 || config.itemsPerUser < 2) {
        throw ConfigError("synthesize: need users >= 1, items >= 4, itemsPerUser >= 2");
    }
    if (config.itemsPerUser * 2 > config.items) {
        throw ConfigError("synthesize: itemsPerUser too large for the item space");
    }
    Rng rng(config.seed);

    std::vector<double> userFactor(config.users);
    for (double& a : userFactor) {
        a = rng.gaussian();
    }
    std::vector<double> itemFactor(config.items);
    std::vector<double> popularity(config.items);
    for (std::size_t i = 0; i < config.items; ++i) {
        itemFactor[i] = rng.gaussian();
        popularity[i] = -config.popularitySkew * std::log(static_cast<double>(i + 1));
    }

    std::vector<Interaction> interactions;
    std::vector<std::size_t> byUtility(config.items);
    std::vector<double> utility(config.items);
    std::vector<std::int64_t> times;

    for (std::size_t u = 0; u < config.users; ++u) {
        const std::size_t count =
            std::max<std::size_t>(2, config.itemsPerUser / 2 + rng.uniformInt(config.itemsPerUser));
        for (std::size_t i = 0; i < config.items; ++i) {
            double noise = rng.uniform();
            while (noise <= 0.0) {
                noise = rng.uniform();
            }
            const double gumbel = -std::log(-std::log(noise));
            utility[i] = config.signal * userFactor[u] * itemFactor[i] +
                         config.popularityWeight * popularity[i] + gumbel;
        }
        std::iota(byUtility.begin(), byUtility.end(), 0);
        std::partial_sort(byUtility.begin(),
                          byUtility.begin() + static_cast<std::ptrdiff_t>(count), byUtility.end(),
                          [&](std::size_t a, std::size_t b) { return utility[a] > utility[b]; });

        times.resize(count);
        std::iota(times.begin(), times.end(), 1);
        rng.shuffle(std::span(times));
        for (std::size_t k = 0; k < count; ++k) {
            interactions.push_back({static_cast<std::int64_t>(u),
                                    static_cast<std::int64_t>(byUtility[k]), times[k]});
        }
    }

    // Drop never-consumed items and re-index densely; keys keep the original
    // decimal ids.
    ReindexedInteractions dense = coreFilter(interactions, 1, 1);
    TripleData out;
    out.interactions = std::move(dense.interactions);
    out.userKeys.resize(dense.userCount);
    out.itemKeys.resize(dense.itemCount);
    for (std::size_t u = 0; u < dense.userRemap.size(); ++u) {
        if (dense.userRemap[u] >= 0) {
            out.userKeys[static_cast<std::size_t>(dense.userRemap[u])] = std::to_string(u);
        }
    }
    for (std::size_t i = 0; i < dense.itemRemap.size(); ++i) {
        if (dense.itemRemap[i] >= 0) {
            out.itemKeys[static_cast<std::size_t>(dense.itemRemap[i])] = std::to_string(i);
        }
    }
    return out;
}

}  // namespace oncf
