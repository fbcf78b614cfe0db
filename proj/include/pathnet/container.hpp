#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pathnet {

/// Binary container shared by checkpoints and feature caches:
///
///   offset 0   8 bytes   magic tag (ASCII)
///   offset 8   8 bytes   header length H, unsigned little-endian
///   offset 16  H bytes   UTF-8 JSON header
///   offset 16+H          float32 little-endian payload to end of file
struct Container {
    nlohmann::json header;
    std::vector<float> payload;
};

inline constexpr std::string_view kCheckpointMagic = "PNETCKPT";
inline constexpr std::string_view kFeatureCacheMagic = "PNETFEAT";

void write_container(const std::filesystem::path& path, std::string_view magic, const nlohmann::json& header,
                     std::span<const float> payload);
/// Throws DataError on a wrong magic, truncated file or malformed header.
Container read_container(const std::filesystem::path& path, std::string_view magic);
/// Reads only the JSON header.
nlohmann::json read_container_header(const std::filesystem::path& path, std::string_view magic);

/// 64-bit FNV-1a, used for change detection and checksums.
std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);

}  // namespace pathnet
