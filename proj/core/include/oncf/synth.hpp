#pragma once

#include <cstdint>

#include "oncf/dataset.hpp"

namespace oncf {

// Synthetic implicit-feedback generator: a planted rank-1 preference matrix
// (scalar user/item factors) mixed with a power-law popularity boost and
// Gumbel noise. Each user consumes their top-utility items, which is
// equivalent to sampling without replacement from the softmax of the noiseless
// utilities. Timestamps are a random permutation per user.
struct SynthConfig {
    std::size_t users = 200;
    std::size_t items = 300;
    std::size_t itemsPerUser = 20;   // mean history length; actual in [n/2, 3n/2]
    double signal = 3.0;             // weight of the rank-1 term
    double popularitySkew = 1.0;     // power-law exponent of item popularity
    double popularityWeight = 1.0;   // weight of the popularity term
    std::uint64_t seed = 7;
};

// Returns dense, canonical triple data (items nobody consumed are dropped).
TripleData synthesize(const SynthConfig& config);

}  // namespace oncf
