#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace pathnet::audio {

/// Log-Mel front-end settings. Defaults: 16 kHz, 25 ms Hamming windows every
/// 10 ms, 512-point FFT, 64 HTK-mel bands over 20-8000 Hz, 64-frame
/// segments every 34 frames, delta regression window 2.
struct MelConfig {
    int sample_rate = 16000;
    int win_len = 400;
    int hop = 160;
    int fft_size = 512;
    int n_mels = 64;
    double fmin = 20.0;
    double fmax = 8000.0;
    double log_epsilon = 1e-6;
    int segment_frames = 64;
    int segment_hop = 34;
    int delta_window = 2;

    void validate() const;
    /// Duration covered by one segment: hop * (segment_frames - 1) + win_len.
    double segment_span_ms() const;

    bool operator==(const MelConfig&) const = default;
};

void to_json(nlohmann::json& j, const MelConfig& c);
void from_json(const nlohmann::json& j, MelConfig& c);

/// Dense row-major matrix; for spectrograms rows are frames and columns mel bins.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    bool operator==(const Matrix&) const = default;
};

struct Waveform {
    std::vector<double> samples;
    int sample_rate = 0;
};

/// Decodes RIFF/WAVE, 16-bit PCM, mono. Samples are int16 / 32768.
/// Errors: "unsupported encoding", "mono required", and "resample externally"
/// when the rate differs from `expected_rate` (skipped when 0).
Waveform parse_wav(std::span<const std::byte> bytes, int expected_rate);
Waveform load_wav(const std::filesystem::path& path, int expected_rate);
/// 16-bit PCM mono writer (values clipped to [-1, 1)).
std::vector<std::byte> encode_wav(std::span<const double> samples, int sample_rate);

std::size_t frame_count(std::size_t samples, const MelConfig& cfg);
std::size_t segment_count(std::size_t frames, const MelConfig& cfg);

/// Triangular filters on the HTK mel scale, peak 1, unnormalized.
struct MelFilterbank {
    /// n_mels x (fft_size / 2 + 1).
    Matrix weights;
    std::vector<double> center_hz;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);
MelFilterbank make_filterbank(const MelConfig& cfg);

/// Mel-band power (before the log), frames x n_mels.
Matrix mel_energies(std::span<const double> samples, const MelConfig& cfg);
/// Natural log of mel_energies + log_epsilon. Throws "utterance shorter than one window".
Matrix log_mel(std::span<const double> samples, const MelConfig& cfg);

/// Regression delta along frames with edge replication:
/// d_t = sum_n n (c_{t+n} - c_{t-n}) / (2 sum_n n^2).
Matrix delta(const Matrix& m, int window = 2);

inline constexpr std::size_t kChannels = 3;

/// One (channel, mel-bin, frame) tensor; channels are static, delta, delta-delta.
struct SegmentTensor {
    std::size_t n_mels = 0;
    std::size_t frames = 0;
    std::vector<float> values;
    std::string utterance_id;
    std::size_t index = 0;

    float at(std::size_t channel, std::size_t mel, std::size_t frame) const
    {
        return values[(channel * n_mels + mel) * frames + frame];
    }
};

/// Windows of segment_frames frames every segment_hop frames. Inputs shorter
/// than one window yield a single segment padded by repeating the last frame.
std::vector<SegmentTensor> segment(const Matrix& statics, const Matrix& delta1, const Matrix& delta2,
                                   const MelConfig& cfg, const std::string& utterance_id = {});

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

/// Per-channel z-score. With no `stats` they are computed from `segments`
/// (the training split); given stats are applied verbatim. Std is floored at 1e-8.
std::pair<std::vector<SegmentTensor>, ChannelStats> normalize(std::vector<SegmentTensor> segments,
                                                              const std::optional<ChannelStats>& stats = {});

/// WAV file to segments: load, log-Mel, deltas, segmentation.
std::vector<SegmentTensor> extract_segments(const Waveform& wav, const MelConfig& cfg, const std::string& utterance_id);

}  // namespace pathnet::audio
