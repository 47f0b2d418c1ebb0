#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "oncf/model.hpp"
#include "oncf/synth.hpp"
#include "oncf/training.hpp"

namespace oncf {

// Resolved configuration of a CLI run: the union of the model and training
// configs, dataset paths, split parameters, and the global seed. Loadable
// from a line-oriented "key = value" file with [section] headers (sections
// are cosmetic; keys are globally unique), and every key can be overridden
// by the same-named command-line flag.
struct RunConfig {
    // paths
    std::string input;
    std::string outdir;
    std::string out;
    std::string trainFile;
    std::string testFile;
    std::string checkpoint;
    std::string pretrained;

    // prep
    std::size_t minUser = 2;
    std::size_t minItem = 10;

    // split
    std::size_t numNeg = 999;

    // model + training
    ModelConfig model;
    TrainConfig train;
    std::size_t evalEvery = 0;
    std::size_t checkpointEvery = 0;  // 0: only the final checkpoint

    // eval
    std::vector<std::size_t> ks{5, 10, 20};
    unsigned threads = 1;
    std::size_t tailWindow = 10;

    // synth
    SynthConfig synth;

    // rank
    std::int64_t user = 0;
    std::size_t topK = 10;

    // global seed, copied into the model/train/synth seeds by finalize()
    std::uint64_t seed = 42;

    // Propagates the global seed into the per-stage configs.
    void finalize();
};

// Applies "key = value"; throws ConfigError for unknown keys or bad values.
void applyConfigValue(RunConfig& config, const std::string& key, const std::string& value);

void applyConfigFile(RunConfig& config, const std::string& path);
void applyConfigStream(RunConfig& config, std::istream& in, const std::string& name);

// Canonical echo of a resolved config; parsing it back reproduces the run.
std::string resolvedConfigText(const RunConfig& config);

// The digest input: the resolved config without the [paths] section, so two
// identical computations written to different directories hash the same.
std::string configDigestText(const RunConfig& config);

}  // namespace oncf
