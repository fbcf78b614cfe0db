#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace pathnet {

/// Per-utterance tensor file. `shape[0]` counts segments; the remaining
/// dimensions describe one segment (e.g. {3, 64, 64} for channel, mel-bin,
/// frame). `values` is the row-major payload in that order.
struct FeatureCache {
    std::string utterance_id;
    std::vector<int> shape;
    std::vector<std::string> channel_order;
    std::vector<float> values;
    /// Free-form provenance copied into the header (config echo, source hash).
    nlohmann::json meta = nlohmann::json::object();

    std::size_t segments() const { return shape.empty() ? 0 : static_cast<std::size_t>(shape.front()); }
    std::size_t segment_size() const;
    /// Channel count: shape[1] for rank >= 3 tensors, otherwise 1.
    std::size_t channels() const { return shape.size() >= 3 ? static_cast<std::size_t>(shape[1]) : 1; }
};

void write_feature_cache(const std::filesystem::path& path, const FeatureCache& cache);
FeatureCache read_feature_cache(const std::filesystem::path& path);
/// Header only; `values` is left empty.
FeatureCache read_feature_cache_header(const std::filesystem::path& path);

}  // namespace pathnet
