#include "pathnet/feature_cache.hpp"

#include <functional>
#include <numeric>

#include "pathnet/container.hpp"
#include "pathnet/error.hpp"

namespace pathnet {

std::size_t FeatureCache::segment_size() const
{
    if (shape.size() < 2) {
        return 0;
    }
    return std::accumulate(shape.begin() + 1, shape.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

namespace {

FeatureCache from_header(const nlohmann::json& header, const std::filesystem::path& path)
{
    FeatureCache cache;
    try {
        cache.utterance_id = header.at("utterance_id").get<std::string>();
        cache.shape = header.at("shape").get<std::vector<int>>();
        cache.channel_order = header.value("channel_order", std::vector<std::string>{});
        cache.meta = header.value("meta", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed feature cache header: " + e.what());
    }
    if (cache.shape.size() < 2) {
        throw DataError(path.string() + ": feature cache shape needs at least two dimensions");
    }
    for (int d : cache.shape) {
        if (d < 0) {
            throw DataError(path.string() + ": negative dimension in feature cache shape");
        }
    }
    return cache;
}

}  // namespace

void write_feature_cache(const std::filesystem::path& path, const FeatureCache& cache)
{
    if (cache.values.size() != cache.segments() * cache.segment_size()) {
        throw Error("feature cache '" + cache.utterance_id + "': payload does not match shape");
    }
    nlohmann::json header{{"utterance_id", cache.utterance_id},
                          {"shape", cache.shape},
                          {"channel_order", cache.channel_order},
                          {"meta", cache.meta}};
    write_container(path, kFeatureCacheMagic, header, cache.values);
}

FeatureCache read_feature_cache(const std::filesystem::path& path)
{
    Container c = read_container(path, kFeatureCacheMagic);
    FeatureCache cache = from_header(c.header, path);
    if (c.payload.size() != cache.segments() * cache.segment_size()) {
        throw DataError(path.string() + ": payload size does not match declared shape");
    }
    cache.values = std::move(c.payload);
    return cache;
}

FeatureCache read_feature_cache_header(const std::filesystem::path& path)
{
    return from_header(read_container_header(path, kFeatureCacheMagic), path);
}

}  // namespace pathnet
