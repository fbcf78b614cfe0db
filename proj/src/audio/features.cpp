#include "pathnet/audio/features.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <set>

#include <fftw3.h>

#include "pathnet/error.hpp"

namespace pathnet::audio {

void MelConfig::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw ConfigError(std::string("invalid mel configuration: ") + what);
        }
    };
    require(sample_rate > 0, "sample_rate must be positive");
    require(win_len > 0 && hop > 0, "win_len and hop must be positive");
    require(fft_size >= win_len, "fft_size must be >= win_len");
    require(n_mels >= 1, "n_mels must be >= 1");
    require(fmin >= 0.0 && fmin < fmax, "need 0 <= fmin < fmax");
    require(fmax <= sample_rate / 2.0, "fmax must not exceed sample_rate / 2");
    require(log_epsilon > 0.0, "log_epsilon must be positive");
    require(segment_frames >= 1, "segment_frames must be >= 1");
    require(segment_hop >= 1, "segment_hop must be >= 1");
    require(delta_window >= 1, "delta_window must be >= 1");
}

double MelConfig::segment_span_ms() const
{
    return 1000.0 * (static_cast<double>(hop) * (segment_frames - 1) + win_len) / sample_rate;
}

void to_json(nlohmann::json& j, const MelConfig& c)
{
    j = {{"sample_rate", c.sample_rate}, {"win_len", c.win_len},         {"hop", c.hop},
         {"fft_size", c.fft_size},       {"n_mels", c.n_mels},           {"fmin", c.fmin},
         {"fmax", c.fmax},               {"log_epsilon", c.log_epsilon}, {"segment_frames", c.segment_frames},
         {"segment_hop", c.segment_hop}, {"delta_window", c.delta_window}, {"window", "hamming"}};
}

void from_json(const nlohmann::json& j, MelConfig& c)
{
    static const std::set<std::string> known = {"sample_rate", "win_len", "hop", "fft_size", "n_mels", "fmin",
                                                "fmax", "log_epsilon", "segment_frames", "segment_hop",
                                                "delta_window", "window"};
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown mel setting '" + key + "'");
        }
    }
    try {
        if (j.contains("window") && j.at("window").get<std::string>() != "hamming") {
            throw ConfigError("only the Hamming window is supported");
        }
        c.sample_rate = j.value("sample_rate", c.sample_rate);
        c.win_len = j.value("win_len", c.win_len);
        c.hop = j.value("hop", c.hop);
        c.fft_size = j.value("fft_size", c.fft_size);
        c.n_mels = j.value("n_mels", c.n_mels);
        c.fmin = j.value("fmin", c.fmin);
        c.fmax = j.value("fmax", c.fmax);
        c.log_epsilon = j.value("log_epsilon", c.log_epsilon);
        c.segment_frames = j.value("segment_frames", c.segment_frames);
        c.segment_hop = j.value("segment_hop", c.segment_hop);
        c.delta_window = j.value("delta_window", c.delta_window);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("mel configuration: ") + e.what());
    }
}

std::size_t frame_count(std::size_t samples, const MelConfig& cfg)
{
    const auto win = static_cast<std::size_t>(cfg.win_len);
    if (samples < win) {
        return 0;
    }
    return (samples - win) / static_cast<std::size_t>(cfg.hop) + 1;
}

std::size_t segment_count(std::size_t frames, const MelConfig& cfg)
{
    const auto len = static_cast<std::size_t>(cfg.segment_frames);
    if (frames == 0) {
        return 0;
    }
    if (frames < len) {
        return 1;
    }
    return (frames - len) / static_cast<std::size_t>(cfg.segment_hop) + 1;
}

double hz_to_mel(double hz)
{
    return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel)
{
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank make_filterbank(const MelConfig& cfg)
{
    cfg.validate();
    const auto bins = static_cast<std::size_t>(cfg.fft_size / 2 + 1);
    const auto bands = static_cast<std::size_t>(cfg.n_mels);
    const double lo = hz_to_mel(cfg.fmin);
    const double hi = hz_to_mel(cfg.fmax);
    std::vector<double> edges(bands + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bands + 1);
    }
    MelFilterbank fb;
    fb.weights = Matrix(bands, bins);
    for (std::size_t k = 0; k < bands; ++k) {
        fb.center_hz.push_back(mel_to_hz(edges[k + 1]));
        for (std::size_t b = 0; b < bins; ++b) {
            const double mel = hz_to_mel(static_cast<double>(b) * cfg.sample_rate / cfg.fft_size);
            double w = 0.0;
            if (mel > edges[k] && mel <= edges[k + 1]) {
                w = (mel - edges[k]) / (edges[k + 1] - edges[k]);
            } else if (mel > edges[k + 1] && mel < edges[k + 2]) {
                w = (edges[k + 2] - mel) / (edges[k + 2] - edges[k + 1]);
            }
            fb.weights(k, b) = w;
        }
    }
    return fb;
}

namespace {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
struct PlanDestroy {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};

}  // namespace

Matrix mel_energies(std::span<const double> samples, const MelConfig& cfg)
{
    cfg.validate();
    const std::size_t frames = frame_count(samples.size(), cfg);
    if (frames == 0) {
        throw DataError("utterance shorter than one window (" + std::to_string(samples.size()) + " < " +
                        std::to_string(cfg.win_len) + " samples)");
    }
    const auto n = static_cast<std::size_t>(cfg.fft_size);
    const auto win = static_cast<std::size_t>(cfg.win_len);
    const std::size_t bins = n / 2 + 1;
    const MelFilterbank fb = make_filterbank(cfg);

    std::vector<double> window(win);
    for (std::size_t i = 0; i < win; ++i) {
        window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(win - 1));
    }

    std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    std::unique_ptr<fftw_complex, FftwFree> out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
    std::unique_ptr<fftw_plan_s, PlanDestroy> plan(
        fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));

    Matrix energies(frames, static_cast<std::size_t>(cfg.n_mels));
    std::vector<double> power(bins);
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t start = t * static_cast<std::size_t>(cfg.hop);
        std::fill(in.get(), in.get() + n, 0.0);
        for (std::size_t i = 0; i < win; ++i) {
            in.get()[i] = samples[start + i] * window[i];
        }
        fftw_execute(plan.get());
        for (std::size_t b = 0; b < bins; ++b) {
            const double re = out.get()[b][0];
            const double im = out.get()[b][1];
            power[b] = re * re + im * im;
        }
        for (std::size_t k = 0; k < energies.cols; ++k) {
            double e = 0.0;
            for (std::size_t b = 0; b < bins; ++b) {
                e += fb.weights(k, b) * power[b];
            }
            energies(t, k) = e;
        }
    }
    return energies;
}

Matrix log_mel(std::span<const double> samples, const MelConfig& cfg)
{
    Matrix m = mel_energies(samples, cfg);
    for (double& v : m.data) {
        v = std::log(v + cfg.log_epsilon);
    }
    return m;
}

Matrix delta(const Matrix& m, int window)
{
    if (window < 1) {
        throw Error("delta window must be >= 1");
    }
    Matrix d(m.rows, m.cols);
    if (m.rows == 0) {
        return d;
    }
    double denom = 0.0;
    for (int n = 1; n <= window; ++n) {
        denom += static_cast<double>(n) * n;
    }
    denom *= 2.0;
    const auto last = static_cast<std::ptrdiff_t>(m.rows) - 1;
    auto clamp_row = [last](std::ptrdiff_t t) { return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(t, 0, last)); };
    for (std::size_t t = 0; t < m.rows; ++t) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            double acc = 0.0;
            for (int n = 1; n <= window; ++n) {
                const auto ti = static_cast<std::ptrdiff_t>(t);
                acc += n * (m(clamp_row(ti + n), c) - m(clamp_row(ti - n), c));
            }
            d(t, c) = acc / denom;
        }
    }
    return d;
}

std::vector<SegmentTensor> segment(const Matrix& statics, const Matrix& delta1, const Matrix& delta2,
                                   const MelConfig& cfg, const std::string& utterance_id)
{
    if (statics.rows != delta1.rows || statics.rows != delta2.rows || statics.cols != delta1.cols ||
        statics.cols != delta2.cols) {
        throw Error("segment: channel matrices differ in shape");
    }
    const std::size_t frames = statics.rows;
    const std::size_t bands = statics.cols;
    const auto len = static_cast<std::size_t>(cfg.segment_frames);
    const std::size_t count = segment_count(frames, cfg);
    const Matrix* channels[kChannels] = {&statics, &delta1, &delta2};

    std::vector<SegmentTensor> out;
    out.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t start = s * static_cast<std::size_t>(cfg.segment_hop);
        SegmentTensor seg;
        seg.n_mels = bands;
        seg.frames = len;
        seg.utterance_id = utterance_id;
        seg.index = s;
        seg.values.resize(kChannels * bands * len);
        for (std::size_t ch = 0; ch < kChannels; ++ch) {
            for (std::size_t k = 0; k < bands; ++k) {
                for (std::size_t f = 0; f < len; ++f) {
                    // Short inputs repeat their final frame.
                    const std::size_t src = std::min(start + f, frames - 1);
                    seg.values[(ch * bands + k) * len + f] = static_cast<float>((*channels[ch])(src, k));
                }
            }
        }
        out.push_back(std::move(seg));
    }
    return out;
}

std::pair<std::vector<SegmentTensor>, ChannelStats> normalize(std::vector<SegmentTensor> segments,
                                                              const std::optional<ChannelStats>& stats)
{
    ChannelStats use;
    if (stats) {
        use = *stats;
        if (use.mean.size() != kChannels || use.stddev.size() != kChannels) {
            throw Error("normalize: statistics must cover three channels");
        }
    } else {
        use.mean.assign(kChannels, 0.0);
        use.stddev.assign(kChannels, 0.0);
        std::vector<double> count(kChannels, 0.0);
        for (const auto& s : segments) {
            const std::size_t block = s.n_mels * s.frames;
            for (std::size_t ch = 0; ch < kChannels; ++ch) {
                for (std::size_t i = 0; i < block; ++i) {
                    use.mean[ch] += s.values[ch * block + i];
                }
                count[ch] += static_cast<double>(block);
            }
        }
        for (std::size_t ch = 0; ch < kChannels; ++ch) {
            use.mean[ch] = count[ch] > 0 ? use.mean[ch] / count[ch] : 0.0;
        }
        std::vector<double> ss(kChannels, 0.0);
        for (const auto& s : segments) {
            const std::size_t block = s.n_mels * s.frames;
            for (std::size_t ch = 0; ch < kChannels; ++ch) {
                for (std::size_t i = 0; i < block; ++i) {
                    const double d = s.values[ch * block + i] - use.mean[ch];
                    ss[ch] += d * d;
                }
            }
        }
        for (std::size_t ch = 0; ch < kChannels; ++ch) {
            use.stddev[ch] = count[ch] > 0 ? std::sqrt(ss[ch] / count[ch]) : 0.0;
        }
    }
    for (double& sd : use.stddev) {
        sd = std::max(sd, 1e-8);
    }
    for (auto& s : segments) {
        const std::size_t block = s.n_mels * s.frames;
        for (std::size_t ch = 0; ch < kChannels; ++ch) {
            for (std::size_t i = 0; i < block; ++i) {
                float& v = s.values[ch * block + i];
                v = static_cast<float>((v - use.mean[ch]) / use.stddev[ch]);
            }
        }
    }
    return {std::move(segments), std::move(use)};
}

std::vector<SegmentTensor> extract_segments(const Waveform& wav, const MelConfig& cfg, const std::string& utterance_id)
{
    if (wav.sample_rate != cfg.sample_rate) {
        throw DataError("sample rate " + std::to_string(wav.sample_rate) + " Hz differs from configured " +
                        std::to_string(cfg.sample_rate) + " Hz; resample externally");
    }
    const Matrix statics = log_mel(wav.samples, cfg);
    const Matrix d1 = delta(statics, cfg.delta_window);
    const Matrix d2 = delta(d1, cfg.delta_window);
    return segment(statics, d1, d2, cfg, utterance_id);
}

}  // namespace pathnet::audio
