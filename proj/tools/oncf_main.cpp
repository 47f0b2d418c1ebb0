// oncf: train and evaluate outer-product collaborative-filtering models.
//
// Subcommands: synth, prep, split, pretrain, train, eval, rank. Every option
// can also come from a "key = value" config file (--config); command-line
// flags win. Exit codes: 0 ok, 1 usage/config error, 2 data error, 3 numeric
// failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oncf/checkpoint.hpp"
#include "oncf/dataset.hpp"
#include "oncf/metrics_io.hpp"
#include "oncf/model.hpp"
#include "oncf/run_config.hpp"
#include "oncf/synth.hpp"
#include "oncf/training.hpp"

namespace fs = std::filesystem;
using namespace oncf;

namespace {

void writeResolvedConfig(const RunConfig& cfg, const std::string& command) {
    if (cfg.outdir.empty()) {
        return;
    }
    const fs::path path = fs::path(cfg.outdir) / (command + ".config");
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << resolvedConfigText(cfg);
}

void ensureOutdir(const RunConfig& cfg) {
    if (cfg.outdir.empty()) {
        throw ConfigError("--outdir is required");
    }
    fs::create_directories(cfg.outdir);
}

InteractionDataset loadSplit(const RunConfig& cfg) {
    if (cfg.trainFile.empty() || cfg.testFile.empty()) {
        throw ConfigError("--train-file and --test-file are required");
    }
    return InteractionDataset::load(cfg.trainFile, cfg.testFile);
}

bool hasK(std::span<const std::size_t> ks, std::size_t k) {
    return std::find(ks.begin(), ks.end(), k) != ks.end();
}

int runSynth(RunConfig& cfg) {
    ensureOutdir(cfg);
    const TripleData data = synthesize(cfg.synth);
    saveTriples(data, (fs::path(cfg.outdir) / "triples.txt").string());
    writeResolvedConfig(cfg, "synth");
    std::cout << "synth: " << data.interactions.size() << " interactions, " << data.userCount()
              << " users, " << data.itemCount() << " items\n";
    return 0;
}

int runPrep(RunConfig& cfg) {
    if (cfg.input.empty()) {
        throw ConfigError("--input is required");
    }
    ensureOutdir(cfg);
    TripleData data = loadTriples(cfg.input);
    data = mergeRepeats(std::move(data));
    data = coreFilter(data, cfg.minUser, cfg.minItem);
    saveTriples(data, (fs::path(cfg.outdir) / "triples.txt").string());
    saveIdMap(data.userKeys, (fs::path(cfg.outdir) / "users.map").string());
    saveIdMap(data.itemKeys, (fs::path(cfg.outdir) / "items.map").string());
    writeResolvedConfig(cfg, "prep");
    std::cout << "prep: " << data.interactions.size() << " interactions, " << data.userCount()
              << " users, " << data.itemCount() << " items\n";
    return 0;
}

int runSplit(RunConfig& cfg) {
    if (cfg.input.empty()) {
        throw ConfigError("--input is required");
    }
    ensureOutdir(cfg);
    const TripleData data = loadTriples(cfg.input);
    const InteractionDataset ds =
        InteractionDataset::leaveLatestOut(data.interactions, cfg.numNeg, cfg.seed);
    ds.save((fs::path(cfg.outdir) / "train.txt").string(),
            (fs::path(cfg.outdir) / "test.txt").string());
    writeResolvedConfig(cfg, "split");
    std::cout << "split: " << ds.userCount() << " users, " << ds.itemCount() << " items, "
              << cfg.numNeg << " negatives per user\n";
    return 0;
}

// Shared by train and pretrain (pretrain is train with the kind pinned to
// mf_bpr and a fixed checkpoint name).
int runTraining(RunConfig& cfg, const std::string& command) {
    ensureOutdir(cfg);
    const InteractionDataset ds = loadSplit(cfg);

    ModelParams pretrainedModel;
    const EmbeddingTable* pretrained = nullptr;
    if (!cfg.pretrained.empty()) {
        pretrainedModel = loadCheckpoint(cfg.pretrained);
        if (pretrainedModel.users != ds.userCount() || pretrainedModel.items != ds.itemCount()) {
            throw ConfigError("pretrained checkpoint was built for a different split");
        }
        if (pretrainedModel.K != cfg.model.embeddingSize) {
            throw ConfigError("pretrained checkpoint has K=" + std::to_string(pretrainedModel.K) +
                              ", configured K=" + std::to_string(cfg.model.embeddingSize));
        }
        pretrained = &pretrainedModel.embeddings;
    }

    Rng rng(cfg.model.seed);
    ModelParams model = initModel(cfg.model, ds.userCount(), ds.itemCount(), rng, pretrained);
    if (model.kind == ModelKind::ItemPop) {
        setItemCounts(model, ds.itemInteractionCounts());
    }

    const fs::path outdir(cfg.outdir);
    std::ofstream log(outdir / "train.log.tsv");
    if (!log) {
        throw DataError("cannot write training log");
    }
    log << "# epoch\tloss\tseconds";
    const bool logMetrics = cfg.evalEvery > 0 && hasK(cfg.ks, 10);
    if (logMetrics) {
        log << "\thr@10\tndcg@10";
    }
    log << "\n";

    const EpochCallback callback = [&](std::size_t epoch, double loss, double seconds,
                                       const EpochMetrics* metrics) {
        char line[160];
        std::snprintf(line, sizeof(line), "%zu\t%.6f\t%.3f", epoch, loss, seconds);
        log << line;
        if (logMetrics && metrics != nullptr) {
            std::snprintf(line, sizeof(line), "\t%.6f\t%.6f", metrics->hrAt(10),
                          metrics->ndcgAt(10));
            log << line;
        }
        log << "\n" << std::flush;
        if (cfg.checkpointEvery > 0 && (epoch + 1) % cfg.checkpointEvery == 0) {
            char name[48];
            std::snprintf(name, sizeof(name), "model_epoch_%04zu.ckpt", epoch);
            saveCheckpoint(model, (outdir / name).string());
        }
    };

    const TrainingRun run = trainModel(model, ds, cfg.train, cfg.evalEvery, cfg.ks, cfg.tailWindow,
                                       cfg.threads, callback);

    const std::string ckptName = command == "pretrain" ? "mf.ckpt" : "model_final.ckpt";
    saveCheckpoint(model, (outdir / ckptName).string());

    const std::string digest = fnv1aHex(configDigestText(cfg));
    if (cfg.evalEvery > 0) {
        writeMetricsJson((outdir / "metrics.json").string(), modelKindName(model.kind), digest,
                         run.metrics);
        writeMetricsTsv((outdir / "metrics.tsv").string(), run.metrics);
    }
    writeResolvedConfig(cfg, command);

    std::cout << command << ": " << cfg.train.epochs << " epochs of " << modelKindName(model.kind)
              << ", final mean loss " << (run.epochLoss.empty() ? 0.0 : run.epochLoss.back())
              << ", checkpoint " << (outdir / ckptName).string() << "\n";
    return 0;
}

int runEval(RunConfig& cfg) {
    if (cfg.checkpoint.empty()) {
        throw ConfigError("--checkpoint is required");
    }
    ensureOutdir(cfg);
    const ModelParams model = loadCheckpoint(cfg.checkpoint);
    const InteractionDataset ds = loadSplit(cfg);
    if (model.users != ds.userCount() || model.items != ds.itemCount()) {
        throw ConfigError("checkpoint was built for a different split (" +
                          std::to_string(model.users) + "x" + std::to_string(model.items) + ")");
    }

    const EpochMetrics metrics = evaluate(model, ds, cfg.ks, cfg.threads);
    MetricsHistory history(cfg.tailWindow);
    history.append(metrics);

    const fs::path outdir(cfg.outdir);
    const std::string digest = fnv1aHex(configDigestText(cfg));
    writeMetricsJson((outdir / "metrics.json").string(), modelKindName(model.kind), digest,
                     history);
    writeMetricsTsv((outdir / "metrics.tsv").string(), history);
    writeResolvedConfig(cfg, "eval");

    std::cout << "eval: model " << modelKindName(model.kind) << "\n";
    for (std::size_t idx = 0; idx < metrics.ks.size(); ++idx) {
        char line[96];
        std::snprintf(line, sizeof(line), "hr@%zu = %.6f\tndcg@%zu = %.6f\n", metrics.ks[idx],
                      metrics.hr[idx], metrics.ks[idx], metrics.ndcg[idx]);
        std::cout << line;
    }
    return 0;
}

int runRank(RunConfig& cfg) {
    if (cfg.checkpoint.empty()) {
        throw ConfigError("--checkpoint is required");
    }
    const ModelParams model = loadCheckpoint(cfg.checkpoint);
    const InteractionDataset ds = loadSplit(cfg);
    if (cfg.user < 0 || static_cast<std::size_t>(cfg.user) >= ds.userCount()) {
        throw IndexError("unknown user " + std::to_string(cfg.user));
    }

    std::vector<std::int64_t> candidates;
    candidates.reserve(ds.itemCount());
    for (std::size_t i = 0; i < ds.itemCount(); ++i) {
        if (!ds.seenInTraining(cfg.user, static_cast<std::int64_t>(i))) {
            candidates.push_back(static_cast<std::int64_t>(i));
        }
    }
    const std::vector<double> scores = scoreBatchForUser(model, cfg.user, candidates);

    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return candidates[a] < candidates[b];
    });
    const std::size_t count = std::min(cfg.topK, order.size());

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!cfg.out.empty()) {
        file.open(cfg.out);
        if (!file) {
            throw DataError("cannot write " + cfg.out);
        }
        out = &file;
    }
    for (std::size_t r = 0; r < count; ++r) {
        char line[64];
        std::snprintf(line, sizeof(line), "%lld\t%.17g\n",
                      static_cast<long long>(candidates[order[r]]), scores[order[r]]);
        *out << line;
    }
    return 0;
}

void addConfigFlag(CLI::App* sub, std::string& configPath) {
    sub->add_option("--config", configPath, "key = value config file (flags override)");
}

void addModelFlags(CLI::App* sub, RunConfig& cfg) {
    sub->add_option(
        "--kind",
        [&cfg](const std::vector<std::string>& values) {
            const auto kind = modelKindFromName(values.front());
            if (!kind) {
                return false;
            }
            cfg.model.kind = *kind;
            return true;
        },
        "model: convncf, oncf_mlp, mf_bpr, gmf, jrl, mlp, itempop");
    sub->add_option("--k", cfg.model.embeddingSize, "embedding size");
    sub->add_option("--c", cfg.model.featureMaps, "feature maps per conv layer");
    sub->add_option("--mlp-layers", cfg.model.mlpLayers, "tower depth (1..3)");
}

void addTrainFlags(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--lr", cfg.train.learningRate, "learning rate");
    sub->add_option("--batch-size", cfg.train.batchSize, "mini-batch size");
    sub->add_option("--epochs", cfg.train.epochs, "training epochs");
    sub->add_option("--lambda-embedding", cfg.train.lambdaEmbedding, "L2 on P, Q");
    sub->add_option("--lambda-hidden", cfg.train.lambdaHidden, "L2 on hidden layers");
    sub->add_option("--lambda-output", cfg.train.lambdaOutput, "L2 on w");
    sub->add_option("--no-reg-epochs", cfg.train.noRegEpochs,
                    "initial epochs without regularization");
    sub->add_option("--adagrad-epsilon", cfg.train.adagradEpsilon, "Adagrad epsilon");
    sub->add_option("--max-norm-w", cfg.train.maxNormW, "max-norm constraint on w (0 = off)");
    sub->add_option("--eval-every", cfg.evalEvery, "evaluate every N epochs (0 = never)");
    sub->add_option("--checkpoint-every", cfg.checkpointEvery,
                    "write a checkpoint every N epochs (0 = only final)");
}

void addEvalFlags(CLI::App* sub, RunConfig& cfg) {
    sub->add_option(
        "--ks",
        [&cfg](const std::vector<std::string>& values) {
            cfg.ks.clear();
            for (const std::string& v : values) {
                std::size_t start = 0;
                while (start <= v.size()) {
                    const std::size_t comma = v.find(',', start);
                    const std::string tok =
                        v.substr(start, (comma == std::string::npos ? v.size() : comma) - start);
                    if (!tok.empty()) {
                        cfg.ks.push_back(static_cast<std::size_t>(std::stoull(tok)));
                    }
                    if (comma == std::string::npos) {
                        break;
                    }
                    start = comma + 1;
                }
            }
            return !cfg.ks.empty();
        },
        "metric cutoffs, e.g. 5,10,20");
    sub->add_option("--threads", cfg.threads, "evaluation threads");
    sub->add_option("--tail-window", cfg.tailWindow, "epochs in the reported tail average");
}

void addSplitFiles(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--train-file", cfg.trainFile, "split train file");
    sub->add_option("--test-file", cfg.testFile, "split test file");
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;

    // Config file values act as defaults, so apply them before CLI11 parses
    // the flag overrides.
    try {
        for (int i = 1; i + 1 < argc; ++i) {
            if (std::string_view(argv[i]) == "--config") {
                applyConfigFile(cfg, argv[i + 1]);
            }
        }
        for (int i = 1; i < argc; ++i) {
            const std::string_view arg(argv[i]);
            if (arg.starts_with("--config=")) {
                applyConfigFile(cfg, std::string(arg.substr(9)));
            }
        }
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 1;
    }

    CLI::App app{"outer-product collaborative filtering (ConvNCF and baselines)"};
    app.require_subcommand(1);
    std::string configPath;  // consumed above; registered so CLI11 accepts it

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    addConfigFlag(synth, configPath);
    synth->add_option("--outdir", cfg.outdir, "output directory");
    synth->add_option("--users", cfg.synth.users, "number of users");
    synth->add_option("--items", cfg.synth.items, "number of items");
    synth->add_option("--items-per-user", cfg.synth.itemsPerUser, "mean history length");
    synth->add_option("--signal", cfg.synth.signal, "planted rank-1 signal strength");
    synth->add_option("--popularity-skew", cfg.synth.popularitySkew, "popularity exponent");
    synth->add_option("--popularity-weight", cfg.synth.popularityWeight, "popularity weight");
    synth->add_option("--seed", cfg.seed, "global seed");

    CLI::App* prep = app.add_subcommand("prep", "merge repeats and core-filter raw triples");
    addConfigFlag(prep, configPath);
    prep->add_option("--input", cfg.input, "raw triples file");
    prep->add_option("--outdir", cfg.outdir, "output directory");
    prep->add_option("--min-user", cfg.minUser, "min interactions per user");
    prep->add_option("--min-item", cfg.minItem, "min interactions per item");

    CLI::App* split = app.add_subcommand("split", "build the leave-latest-out split");
    addConfigFlag(split, configPath);
    split->add_option("--input", cfg.input, "prepared triples file");
    split->add_option("--outdir", cfg.outdir, "output directory");
    split->add_option("--num-neg", cfg.numNeg, "evaluation negatives per user");
    split->add_option("--seed", cfg.seed, "global seed");

    CLI::App* pretrain = app.add_subcommand("pretrain", "train MF-BPR embeddings");
    addConfigFlag(pretrain, configPath);
    addSplitFiles(pretrain, cfg);
    pretrain->add_option("--outdir", cfg.outdir, "output directory");
    pretrain->add_option("--k", cfg.model.embeddingSize, "embedding size");
    addTrainFlags(pretrain, cfg);
    addEvalFlags(pretrain, cfg);
    pretrain->add_option("--seed", cfg.seed, "global seed");

    CLI::App* train = app.add_subcommand("train", "train a model on a split");
    addConfigFlag(train, configPath);
    addSplitFiles(train, cfg);
    train->add_option("--outdir", cfg.outdir, "output directory");
    train->add_option("--pretrained", cfg.pretrained, "MF checkpoint to initialize embeddings");
    addModelFlags(train, cfg);
    addTrainFlags(train, cfg);
    addEvalFlags(train, cfg);
    train->add_option("--seed", cfg.seed, "global seed");

    CLI::App* evalCmd = app.add_subcommand("eval", "evaluate a checkpoint");
    addConfigFlag(evalCmd, configPath);
    evalCmd->add_option("--checkpoint", cfg.checkpoint, "model checkpoint");
    addSplitFiles(evalCmd, cfg);
    evalCmd->add_option("--outdir", cfg.outdir, "output directory");
    addEvalFlags(evalCmd, cfg);

    CLI::App* rank = app.add_subcommand("rank", "top-k recommendations for one user");
    addConfigFlag(rank, configPath);
    rank->add_option("--checkpoint", cfg.checkpoint, "model checkpoint");
    addSplitFiles(rank, cfg);
    rank->add_option("--user", cfg.user, "user id");
    rank->add_option("--top-k", cfg.topK, "list length");
    rank->add_option("--out", cfg.out, "write the list here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    cfg.finalize();
    try {
        if (synth->parsed()) {
            return runSynth(cfg);
        }
        if (prep->parsed()) {
            return runPrep(cfg);
        }
        if (split->parsed()) {
            return runSplit(cfg);
        }
        if (pretrain->parsed()) {
            cfg.model.kind = ModelKind::MfBpr;
            cfg.pretrained.clear();
            return runTraining(cfg, "pretrain");
        }
        if (train->parsed()) {
            return runTraining(cfg, "train");
        }
        if (evalCmd->parsed()) {
            return runEval(cfg);
        }
        if (rank->parsed()) {
            return runRank(cfg);
        }
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 1;
    } catch (const NumericError& err) {
        std::cerr << "numeric failure: " << err.what() << "\n";
        return 3;
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
