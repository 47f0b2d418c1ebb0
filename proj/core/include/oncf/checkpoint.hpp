#pragma once

#include <string>

#include "oncf/model.hpp"

namespace oncf {

// Binary checkpoint:
//   magic "ONCF", u32 version, u32 kind, u32 K, u32 C, u32 hiddenLayers,
//   u64 users, u64 items, u32 tensorCount, then per registry tensor:
//   u32 nameLen, name bytes, u32 rank, u64 extents..., row-major f32 data.
// All integers and floats little-endian. Tensors are stored as 32-bit floats
// and promoted back to doubles on load, so save -> load -> save is
// byte-identical.
void saveCheckpoint(const ModelParams& model, const std::string& path);
ModelParams loadCheckpoint(const std::string& path);

}  // namespace oncf
