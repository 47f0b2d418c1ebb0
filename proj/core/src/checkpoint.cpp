#include "oncf/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace oncf {

namespace {

constexpr char kMagic[4] = {'O', 'N', 'C', 'F'};
constexpr std::uint32_t kVersion = 1;

void writeU32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int k = 0; k < 4; ++k) {
        buf[k] = static_cast<char>((v >> (8 * k)) & 0xff);
    }
    out.write(buf, 4);
}

void writeU64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int k = 0; k < 8; ++k) {
        buf[k] = static_cast<char>((v >> (8 * k)) & 0xff);
    }
    out.write(buf, 8);
}

void writeF32(std::ostream& out, float v) { writeU32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t readU32(std::istream& in, const std::string& path) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) {
        throw DataError(path + ": truncated checkpoint");
    }
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
        v |= static_cast<std::uint32_t>(buf[k]) << (8 * k);
    }
    return v;
}

std::uint64_t readU64(std::istream& in, const std::string& path) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) {
        throw DataError(path + ": truncated checkpoint");
    }
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) {
        v |= static_cast<std::uint64_t>(buf[k]) << (8 * k);
    }
    return v;
}

float readF32(std::istream& in, const std::string& path) {
    return std::bit_cast<float>(readU32(in, path));
}

}  // namespace

void saveCheckpoint(const ModelParams& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write checkpoint: " + path);
    }
    out.write(kMagic, 4);
    writeU32(out, kVersion);
    writeU32(out, static_cast<std::uint32_t>(model.kind));
    writeU32(out, static_cast<std::uint32_t>(model.K));
    writeU32(out, static_cast<std::uint32_t>(model.C));
    writeU32(out, static_cast<std::uint32_t>(model.hiddenLayerCount()));
    writeU64(out, model.users);
    writeU64(out, model.items);

    const auto registry = model.registry();
    writeU32(out, static_cast<std::uint32_t>(registry.size()));
    for (const ConstRegistryEntry& entry : registry) {
        writeU32(out, static_cast<std::uint32_t>(entry.name.size()));
        out.write(entry.name.data(), static_cast<std::streamsize>(entry.name.size()));
        const Tensor& t = *entry.tensor;
        writeU32(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t axis = 0; axis < t.rank(); ++axis) {
            writeU64(out, t.extent(axis));
        }
        for (double v : t.data()) {
            writeF32(out, static_cast<float>(v));
        }
    }
    if (!out) {
        throw DataError("write failed for checkpoint: " + path);
    }
}

ModelParams loadCheckpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open checkpoint: " + path);
    }
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError(path + ": not an ONCF checkpoint");
    }
    const std::uint32_t version = readU32(in, path);
    if (version != kVersion) {
        throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint32_t kindRaw = readU32(in, path);
    if (kindRaw > 6) {
        throw DataError(path + ": unknown model kind " + std::to_string(kindRaw));
    }

    ModelConfig config;
    config.kind = static_cast<ModelKind>(kindRaw);
    config.embeddingSize = readU32(in, path);
    config.featureMaps = readU32(in, path);
    const std::uint32_t hiddenLayers = readU32(in, path);
    const std::uint64_t users = readU64(in, path);
    const std::uint64_t items = readU64(in, path);
    if (hasDenseTower(config.kind)) {
        config.mlpLayers = hiddenLayers;
    }

    ModelParams model = buildSkeleton(config, users, items);
    if (model.hiddenLayerCount() != hiddenLayers) {
        throw DataError(path + ": header layer count disagrees with architecture");
    }

    auto registry = model.registry();
    const std::uint32_t tensorCount = readU32(in, path);
    if (tensorCount != registry.size()) {
        throw DataError(path + ": expected " + std::to_string(registry.size()) +
                        " tensors, found " + std::to_string(tensorCount));
    }
    for (RegistryEntry& entry : registry) {
        const std::uint32_t nameLen = readU32(in, path);
        std::string name(nameLen, '\0');
        if (!in.read(name.data(), nameLen)) {
            throw DataError(path + ": truncated checkpoint");
        }
        if (name != entry.name) {
            throw DataError(path + ": tensor '" + name + "' where '" + entry.name +
                            "' was expected");
        }
        Tensor& t = *entry.tensor;
        const std::uint32_t rank = readU32(in, path);
        if (rank != t.rank()) {
            throw DataError(path + ": tensor '" + name + "' rank mismatch");
        }
        for (std::size_t axis = 0; axis < rank; ++axis) {
            if (readU64(in, path) != t.extent(axis)) {
                throw DataError(path + ": tensor '" + name + "' extent mismatch");
            }
        }
        for (double& v : t.data()) {
            v = static_cast<double>(readF32(in, path));
        }
    }
    return model;
}

}  // namespace oncf
