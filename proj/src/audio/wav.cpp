#include <cstdint>
#include <algorithm>
#include <cstring>
#include <string>

#include "pathnet/audio/features.hpp"
#include "pathnet/container.hpp"
#include "pathnet/error.hpp"

namespace pathnet::audio {

namespace {

std::uint32_t le32(const std::byte* p)
{
    return static_cast<std::uint32_t>(std::to_integer<unsigned>(p[0])) |
           (static_cast<std::uint32_t>(std::to_integer<unsigned>(p[1])) << 8) |
           (static_cast<std::uint32_t>(std::to_integer<unsigned>(p[2])) << 16) |
           (static_cast<std::uint32_t>(std::to_integer<unsigned>(p[3])) << 24);
}

std::uint16_t le16(const std::byte* p)
{
    return static_cast<std::uint16_t>(std::to_integer<unsigned>(p[0]) | (std::to_integer<unsigned>(p[1]) << 8));
}

bool tag(const std::byte* p, const char* id)
{
    return std::memcmp(p, id, 4) == 0;
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

Waveform parse_wav(std::span<const std::byte> bytes, int expected_rate)
{
    if (bytes.size() < 12 || !tag(bytes.data(), "RIFF") || !tag(bytes.data() + 8, "WAVE")) {
        throw DataError("unsupported encoding: not a RIFF/WAVE file");
    }
    bool have_fmt = false;
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t rate = 0;
    std::uint16_t bits = 0;
    std::span<const std::byte> data;
    bool have_data = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::byte* chunk = bytes.data() + pos;
        const std::size_t size = le32(chunk + 4);
        const std::size_t body = pos + 8;
        if (size > bytes.size() - body) {
            throw DataError("truncated WAV chunk");
        }
        if (tag(chunk, "fmt ")) {
            if (size < 16) {
                throw DataError("unsupported encoding: short fmt chunk");
            }
            const std::byte* f = bytes.data() + body;
            format = le16(f);
            channels = le16(f + 2);
            rate = le32(f + 4);
            bits = le16(f + 14);
            if (format == kFormatExtensible) {
                // The sub-format GUID starts with the plain format tag.
                format = size >= 26 ? le16(f + 24) : 0;
            }
            have_fmt = true;
        } else if (tag(chunk, "data")) {
            data = bytes.subspan(body, size);
            have_data = true;
        }
        pos = body + size + (size & 1U);
    }
    if (!have_fmt || !have_data) {
        throw DataError("unsupported encoding: missing fmt or data chunk");
    }
    if (format != kFormatPcm || bits != 16) {
        throw DataError("unsupported encoding: only 16-bit PCM is accepted");
    }
    if (channels != 1) {
        throw DataError("mono required: file has " + std::to_string(channels) + " channels");
    }
    if (expected_rate > 0 && rate != static_cast<std::uint32_t>(expected_rate)) {
        throw DataError("sample rate " + std::to_string(rate) + " Hz differs from configured " +
                        std::to_string(expected_rate) + " Hz; resample externally");
    }
    Waveform wav;
    wav.sample_rate = static_cast<int>(rate);
    wav.samples.resize(data.size() / 2);
    for (std::size_t i = 0; i < wav.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(le16(data.data() + 2 * i));
        wav.samples[i] = static_cast<double>(v) / 32768.0;
    }
    return wav;
}

Waveform load_wav(const std::filesystem::path& path, int expected_rate)
{
    const auto bytes = read_file_bytes(path);
    try {
        return parse_wav(bytes, expected_rate);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::vector<std::byte> encode_wav(std::span<const double> samples, int sample_rate)
{
    std::vector<std::byte> out;
    auto put = [&](std::uint32_t v, int n) {
        for (int i = 0; i < n; ++i) {
            out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffU));
        }
    };
    auto put_tag = [&](const char* t) {
        for (int i = 0; i < 4; ++i) {
            out.push_back(static_cast<std::byte>(t[i]));
        }
    };
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    put_tag("RIFF");
    put(36 + data_bytes, 4);
    put_tag("WAVE");
    put_tag("fmt ");
    put(16, 4);
    put(kFormatPcm, 2);
    put(1, 2);
    put(static_cast<std::uint32_t>(sample_rate), 4);
    put(static_cast<std::uint32_t>(sample_rate) * 2, 4);
    put(2, 2);
    put(16, 2);
    put_tag("data");
    put(data_bytes, 4);
    for (double s : samples) {
        double scaled = std::clamp(s, -1.0, 1.0) * 32768.0;
        scaled = std::clamp(scaled, -32768.0, 32767.0);
        const auto v = static_cast<std::int16_t>(scaled);
        put(static_cast<std::uint16_t>(v), 2);
    }
    return out;
}

}  // namespace pathnet::audio
