#include "pathnet/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "pathnet/error.hpp"

namespace pathnet {

namespace {

void put_u64(std::ostream& out, std::uint64_t v)
{
    std::array<char, 8> bytes{};
    for (int i = 0; i < 8; ++i) {
        bytes[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffU);
    }
    out.write(bytes.data(), 8);
}

std::uint64_t get_u64(const std::byte* p)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(std::to_integer<unsigned>(p[i])) << (8 * i);
    }
    return v;
}

void floats_to_le(std::span<const float> values, std::vector<char>& out)
{
    out.resize(values.size() * 4);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data(), values.data(), out.size());
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            auto bits = std::bit_cast<std::uint32_t>(values[i]);
            for (int b = 0; b < 4; ++b) {
                out[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xffU);
            }
        }
    }
}

struct Parsed {
    nlohmann::json header;
    std::size_t payload_offset = 0;
};

Parsed parse(const std::vector<std::byte>& bytes, std::string_view magic, const std::filesystem::path& path)
{
    if (bytes.size() < 16 || std::memcmp(bytes.data(), magic.data(), 8) != 0) {
        throw DataError(path.string() + ": not a " + std::string(magic) + " container");
    }
    const std::uint64_t header_len = get_u64(bytes.data() + 8);
    if (header_len > bytes.size() - 16) {
        throw DataError(path.string() + ": truncated header");
    }
    Parsed parsed;
    const auto* begin = reinterpret_cast<const char*>(bytes.data() + 16);
    try {
        parsed.header = nlohmann::json::parse(begin, begin + header_len);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed header: " + e.what());
    }
    parsed.payload_offset = 16 + static_cast<std::size_t>(header_len);
    if ((bytes.size() - parsed.payload_offset) % 4 != 0) {
        throw DataError(path.string() + ": payload is not a whole number of float32 values");
    }
    return parsed;
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t seed)
{
    std::uint64_t h = seed;
    for (std::byte b : bytes) {
        h ^= std::to_integer<std::uint64_t>(b);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<std::byte> bytes(size);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!in) {
        throw DataError("cannot read " + path.string());
    }
    return bytes;
}

void write_container(const std::filesystem::path& path, std::string_view magic, const nlohmann::json& header,
                     std::span<const float> payload)
{
    if (magic.size() != 8) {
        throw Error("container magic must be 8 bytes");
    }
    const std::string text = header.dump();
    std::vector<char> body;
    floats_to_le(payload, body);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out.write(magic.data(), 8);
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) {
        throw Error("write failed for " + path.string());
    }
}

Container read_container(const std::filesystem::path& path, std::string_view magic)
{
    const auto bytes = read_file_bytes(path);
    Parsed parsed = parse(bytes, magic, path);
    Container c;
    c.header = std::move(parsed.header);
    const std::size_t count = (bytes.size() - parsed.payload_offset) / 4;
    c.payload.resize(count);
    const std::byte* p = bytes.data() + parsed.payload_offset;
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) {
            bits |= static_cast<std::uint32_t>(std::to_integer<unsigned>(p[i * 4 + static_cast<std::size_t>(b)]))
                    << (8 * b);
        }
        c.payload[i] = std::bit_cast<float>(bits);
    }
    return c;
}

nlohmann::json read_container_header(const std::filesystem::path& path, std::string_view magic)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::array<std::byte, 16> prefix{};
    in.read(reinterpret_cast<char*>(prefix.data()), 16);
    if (!in || std::memcmp(prefix.data(), magic.data(), 8) != 0) {
        throw DataError(path.string() + ": not a " + std::string(magic) + " container");
    }
    const std::uint64_t header_len = get_u64(prefix.data() + 8);
    std::string text(static_cast<std::size_t>(header_len), '\0');
    in.read(text.data(), static_cast<std::streamsize>(header_len));
    if (!in) {
        throw DataError(path.string() + ": truncated header");
    }
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed header: " + e.what());
    }
}

}  // namespace pathnet
