#include "oncf/metrics_io.hpp"

#include <fstream>

#include <json.hpp>

namespace oncf {

std::string fnv1aHex(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

namespace {

std::string metricKey(const char* metric, std::size_t k) {
    return std::string(metric) + "@" + std::to_string(k);
}

}  // namespace

void writeMetricsJson(const std::string& path, const std::string& modelName,
                      const std::string& configDigest, const MetricsHistory& history) {
    nlohmann::ordered_json doc;
    doc["model"] = modelName;
    doc["config_digest"] = configDigest;

    nlohmann::ordered_json perEpoch = nlohmann::ordered_json::object();
    if (!history.empty()) {
        const auto& ks = history.epochs().front().ks;
        doc["ks"] = ks;
        for (std::size_t idx = 0; idx < ks.size(); ++idx) {
            std::vector<double> hr, ndcg;
            for (const EpochMetrics& m : history.epochs()) {
                hr.push_back(m.hr[idx]);
                ndcg.push_back(m.ndcg[idx]);
            }
            perEpoch[metricKey("hr", ks[idx])] = hr;
            perEpoch[metricKey("ndcg", ks[idx])] = ndcg;
        }
    } else {
        doc["ks"] = nlohmann::ordered_json::array();
    }
    doc["epochs"] = perEpoch;
    doc["tail_window"] = history.tailWindow();

    nlohmann::ordered_json tail = nlohmann::ordered_json::object();
    if (!history.empty()) {
        const EpochMetrics avg = history.tailAverage();
        for (std::size_t idx = 0; idx < avg.ks.size(); ++idx) {
            tail[metricKey("hr", avg.ks[idx])] = avg.hr[idx];
            tail[metricKey("ndcg", avg.ks[idx])] = avg.ndcg[idx];
        }
    }
    doc["tail_average"] = tail;

    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write metrics file: " + path);
    }
    out << doc.dump(2) << "\n";
}

void writeMetricsTsv(const std::string& path, const MetricsHistory& history) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write metrics file: " + path);
    }
    out << "epoch\tmetric\tvalue\n";
    out.precision(17);
    for (std::size_t e = 0; e < history.epochs().size(); ++e) {
        const EpochMetrics& m = history.epochs()[e];
        for (std::size_t idx = 0; idx < m.ks.size(); ++idx) {
            out << e << '\t' << metricKey("hr", m.ks[idx]) << '\t' << m.hr[idx] << '\n';
            out << e << '\t' << metricKey("ndcg", m.ks[idx]) << '\t' << m.ndcg[idx] << '\n';
        }
    }
}

}  // namespace oncf
