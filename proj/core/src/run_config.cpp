#include "oncf/run_config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace oncf {

namespace {

std::string trim(std::string_view s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) {
        --end;
    }
    return std::string(s.substr(begin, end - begin));
}

template <typename T>
T parseNumber(const std::string& key, const std::string& value) {
    T out{};
    if constexpr (std::is_floating_point_v<T>) {
        try {
            std::size_t used = 0;
            out = static_cast<T>(std::stod(value, &used));
            if (used != value.size()) {
                throw std::invalid_argument(value);
            }
        } catch (const std::exception&) {
            throw ConfigError("bad numeric value for '" + key + "': " + value);
        }
    } else {
        const char* last = value.data() + value.size();
        const auto res = std::from_chars(value.data(), last, out);
        if (res.ec != std::errc() || res.ptr != last) {
            throw ConfigError("bad integer value for '" + key + "': " + value);
        }
    }
    return out;
}

std::vector<std::size_t> parseSizeList(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        const std::string token =
            trim(value.substr(start, (comma == std::string::npos ? value.size() : comma) - start));
        if (!token.empty()) {
            out.push_back(parseNumber<std::size_t>(key, token));
        }
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    if (out.empty()) {
        throw ConfigError("empty list for '" + key + "'");
    }
    return out;
}

std::string formatDouble(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void RunConfig::finalize() {
    model.seed = seed;
    train.seed = seed;
    synth.seed = seed;
}

void applyConfigValue(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "input") {
        c.input = value;
    } else if (key == "outdir") {
        c.outdir = value;
    } else if (key == "out") {
        c.out = value;
    } else if (key == "train-file") {
        c.trainFile = value;
    } else if (key == "test-file") {
        c.testFile = value;
    } else if (key == "checkpoint") {
        c.checkpoint = value;
    } else if (key == "pretrained") {
        c.pretrained = value;
    } else if (key == "min-user") {
        c.minUser = parseNumber<std::size_t>(key, value);
    } else if (key == "min-item") {
        c.minItem = parseNumber<std::size_t>(key, value);
    } else if (key == "num-neg") {
        c.numNeg = parseNumber<std::size_t>(key, value);
    } else if (key == "kind") {
        const auto kind = modelKindFromName(value);
        if (!kind) {
            throw ConfigError("unknown model kind '" + value + "'");
        }
        c.model.kind = *kind;
    } else if (key == "k") {
        c.model.embeddingSize = parseNumber<std::size_t>(key, value);
    } else if (key == "c") {
        c.model.featureMaps = parseNumber<std::size_t>(key, value);
    } else if (key == "mlp-layers") {
        c.model.mlpLayers = parseNumber<std::size_t>(key, value);
    } else if (key == "lr") {
        c.train.learningRate = parseNumber<double>(key, value);
    } else if (key == "batch-size") {
        c.train.batchSize = parseNumber<std::size_t>(key, value);
    } else if (key == "epochs") {
        c.train.epochs = parseNumber<std::size_t>(key, value);
    } else if (key == "lambda-embedding") {
        c.train.lambdaEmbedding = parseNumber<double>(key, value);
    } else if (key == "lambda-hidden") {
        c.train.lambdaHidden = parseNumber<double>(key, value);
    } else if (key == "lambda-output") {
        c.train.lambdaOutput = parseNumber<double>(key, value);
    } else if (key == "no-reg-epochs") {
        c.train.noRegEpochs = parseNumber<std::size_t>(key, value);
    } else if (key == "adagrad-epsilon") {
        c.train.adagradEpsilon = parseNumber<double>(key, value);
    } else if (key == "max-norm-w") {
        c.train.maxNormW = parseNumber<double>(key, value);
    } else if (key == "eval-every") {
        c.evalEvery = parseNumber<std::size_t>(key, value);
    } else if (key == "checkpoint-every") {
        c.checkpointEvery = parseNumber<std::size_t>(key, value);
    } else if (key == "ks") {
        c.ks = parseSizeList(key, value);
    } else if (key == "threads") {
        c.threads = parseNumber<unsigned>(key, value);
    } else if (key == "tail-window") {
        c.tailWindow = parseNumber<std::size_t>(key, value);
    } else if (key == "users") {
        c.synth.users = parseNumber<std::size_t>(key, value);
    } else if (key == "items") {
        c.synth.items = parseNumber<std::size_t>(key, value);
    } else if (key == "items-per-user") {
        c.synth.itemsPerUser = parseNumber<std::size_t>(key, value);
    } else if (key == "signal") {
        c.synth.signal = parseNumber<double>(key, value);
    } else if (key == "popularity-skew") {
        c.synth.popularitySkew = parseNumber<double>(key, value);
    } else if (key == "popularity-weight") {
        c.synth.popularityWeight = parseNumber<double>(key, value);
    } else if (key == "user") {
        c.user = parseNumber<std::int64_t>(key, value);
    } else if (key == "top-k") {
        c.topK = parseNumber<std::size_t>(key, value);
    } else if (key == "seed") {
        c.seed = parseNumber<std::uint64_t>(key, value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void applyConfigStream(RunConfig& config, std::istream& in, const std::string& name) {
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') {
            continue;
        }
        if (stripped.front() == '[') {
            if (stripped.back() != ']') {
                throw ConfigError(name + ":" + std::to_string(lineNo) + ": unterminated section");
            }
            continue;  // sections are organizational only
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(name + ":" + std::to_string(lineNo) + ": expected 'key = value'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        try {
            applyConfigValue(config, key, value);
        } catch (const ConfigError& err) {
            throw ConfigError(name + ":" + std::to_string(lineNo) + ": " + err.what());
        }
    }
}

void applyConfigFile(RunConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    applyConfigStream(config, in, path);
}

namespace {

void writeNonPathSections(const RunConfig& c, std::ostringstream& out);

}  // namespace

std::string resolvedConfigText(const RunConfig& c) {
    std::ostringstream out;
    out << "[paths]\n";
    out << "input = " << c.input << "\n";
    out << "outdir = " << c.outdir << "\n";
    out << "out = " << c.out << "\n";
    out << "train-file = " << c.trainFile << "\n";
    out << "test-file = " << c.testFile << "\n";
    out << "checkpoint = " << c.checkpoint << "\n";
    out << "pretrained = " << c.pretrained << "\n";
    out << "\n";
    writeNonPathSections(c, out);
    return out.str();
}

std::string configDigestText(const RunConfig& c) {
    std::ostringstream out;
    writeNonPathSections(c, out);
    return out.str();
}

namespace {

void writeNonPathSections(const RunConfig& c, std::ostringstream& out) {
    out << "[prep]\n";
    out << "min-user = " << c.minUser << "\n";
    out << "min-item = " << c.minItem << "\n";
    out << "\n[split]\n";
    out << "num-neg = " << c.numNeg << "\n";
    out << "\n[model]\n";
    out << "kind = " << modelKindName(c.model.kind) << "\n";
    out << "k = " << c.model.embeddingSize << "\n";
    out << "c = " << c.model.featureMaps << "\n";
    out << "mlp-layers = " << c.model.mlpLayers << "\n";
    out << "\n[train]\n";
    out << "lr = " << formatDouble(c.train.learningRate) << "\n";
    out << "batch-size = " << c.train.batchSize << "\n";
    out << "epochs = " << c.train.epochs << "\n";
    out << "lambda-embedding = " << formatDouble(c.train.lambdaEmbedding) << "\n";
    out << "lambda-hidden = " << formatDouble(c.train.lambdaHidden) << "\n";
    out << "lambda-output = " << formatDouble(c.train.lambdaOutput) << "\n";
    out << "no-reg-epochs = " << c.train.noRegEpochs << "\n";
    out << "adagrad-epsilon = " << formatDouble(c.train.adagradEpsilon) << "\n";
    out << "max-norm-w = " << formatDouble(c.train.maxNormW) << "\n";
    out << "eval-every = " << c.evalEvery << "\n";
    out << "checkpoint-every = " << c.checkpointEvery << "\n";
    out << "\n[eval]\n";
    out << "ks = ";
    for (std::size_t i = 0; i < c.ks.size(); ++i) {
        out << (i ? "," : "") << c.ks[i];
    }
    out << "\n";
    out << "threads = " << c.threads << "\n";
    out << "tail-window = " << c.tailWindow << "\n";
    out << "\n[synth]\n";
    out << "users = " << c.synth.users << "\n";
    out << "items = " << c.synth.items << "\n";
    out << "items-per-user = " << c.synth.itemsPerUser << "\n";
    out << "signal = " << formatDouble(c.synth.signal) << "\n";
    out << "popularity-skew = " << formatDouble(c.synth.popularitySkew) << "\n";
    out << "popularity-weight = " << formatDouble(c.synth.popularityWeight) << "\n";
    out << "\n[rank]\n";
    out << "user = " << c.user << "\n";
    out << "top-k = " << c.topK << "\n";
    out << "\n[global]\n";
    out << "seed = " << c.seed << "\n";
}

}  // namespace

}  // namespace oncf
