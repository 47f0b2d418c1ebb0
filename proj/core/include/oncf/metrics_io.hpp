#pragma once

#include <string>
#include <string_view>

#include "oncf/evaluation.hpp"

namespace oncf {

// FNV-1a over the resolved config text; identifies a run in the metrics file.
std::string fnv1aHex(std::string_view text);

// One JSON document per run: model, config digest, per-epoch metric arrays,
// tail-window averages.
void writeMetricsJson(const std::string& path, const std::string& modelName,
                      const std::string& configDigest, const MetricsHistory& history);

// Flat companion table for plotting: epoch <TAB> metric <TAB> value.
void writeMetricsTsv(const std::string& path, const MetricsHistory& history);

}  // namespace oncf
