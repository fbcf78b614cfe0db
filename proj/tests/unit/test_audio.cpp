#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "pathnet/audio/features.hpp"
#include "pathnet/error.hpp"
#include "support.hpp"

using namespace pathnet;
using namespace pathnet::audio;

namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
    }
}

void put_u16(std::vector<std::byte>& out, std::uint16_t v)
{
    out.push_back(static_cast<std::byte>(v & 0xff));
    out.push_back(static_cast<std::byte>(v >> 8));
}

void put_tag(std::vector<std::byte>& out, const char* tag)
{
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::byte>(tag[i]));
    }
}

// Minimal RIFF/WAVE writer, independent of the library encoder.
std::vector<std::byte> wav_bytes(const std::vector<std::int16_t>& samples, std::uint32_t rate, std::uint16_t channels = 1,
                                 std::uint16_t format = 1, std::uint16_t bits = 16)
{
    std::vector<std::byte> out;
    const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_len);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, format);
    put_u16(out, channels);
    put_u32(out, rate);
    put_u32(out, rate * channels * bits / 8);
    put_u16(out, static_cast<std::uint16_t>(channels * bits / 8));
    put_u16(out, bits);
    put_tag(out, "data");
    put_u32(out, data_len);
    for (auto s : samples) {
        put_u16(out, static_cast<std::uint16_t>(s));
    }
    return out;
}

std::vector<double> sine(double hz, std::size_t n, double amp = 0.5, double rate = 16000.0)
{
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
    }
    return x;
}

Matrix reference_delta(const Matrix& m, int window)
{
    Matrix d(m.rows, m.cols);
    double norm = 0.0;
    for (int n = 1; n <= window; ++n) {
        norm += 2.0 * n * n;
    }
    const auto last = static_cast<long>(m.rows) - 1;
    auto at = [&](long t, std::size_t c) { return m(static_cast<std::size_t>(std::clamp(t, 0L, last)), c); };
    for (std::size_t t = 0; t < m.rows; ++t) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            double acc = 0.0;
            for (int n = 1; n <= window; ++n) {
                acc += n * (at(static_cast<long>(t) + n, c) - at(static_cast<long>(t) - n, c));
            }
            d(t, c) = acc / norm;
        }
    }
    return d;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng)
{
    Matrix m(rows, cols);
    for (double& v : m.data) {
        v = rng.uniform(-3.0, 3.0);
    }
    return m;
}

}  // namespace

TEST_CASE("mel config defaults and span")
{
    MelConfig cfg;
    CHECK(cfg.sample_rate == 16000);
    CHECK(cfg.win_len == 400);
    CHECK(cfg.hop == 160);
    CHECK(cfg.fft_size == 512);
    CHECK(cfg.n_mels == 64);
    CHECK(cfg.segment_frames == 64);
    CHECK(cfg.segment_hop == 34);
    CHECK(cfg.segment_span_ms() == doctest::Approx(655.0));
    CHECK_NOTHROW(cfg.validate());
    MelConfig bad = cfg;
    bad.fmax = 9000.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.fft_size = 256;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.segment_hop = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    const nlohmann::json j = cfg;
    CHECK(j.get<MelConfig>() == cfg);
}

TEST_CASE("wav decoding scales int16")
{
    const auto bytes = wav_bytes({0, 16384, -32768}, 16000);
    const auto w = parse_wav(bytes, 16000);
    CHECK(w.sample_rate == 16000);
    CHECK(w.samples == std::vector<double>{0.0, 0.5, -1.0});

    const auto three = parse_wav(wav_bytes(std::vector<std::int16_t>(48000, 7), 16000), 16000);
    CHECK(three.samples.size() == 48000);
}

TEST_CASE("wav errors")
{
    CHECK_THROWS_WITH(parse_wav(wav_bytes({1, 2}, 44100), 16000), doctest::Contains("resample externally"));
    CHECK_NOTHROW(parse_wav(wav_bytes({1, 2}, 44100), 0));
    CHECK_THROWS_WITH(parse_wav(wav_bytes({1, 2, 3, 4}, 16000, 2), 16000), doctest::Contains("mono required"));
    CHECK_THROWS_WITH(parse_wav(wav_bytes({1, 2}, 16000, 1, 3, 32), 16000), doctest::Contains("unsupported encoding"));
    CHECK_THROWS_WITH(parse_wav(wav_bytes({1, 2}, 16000, 1, 1, 8), 16000), doctest::Contains("unsupported encoding"));
    std::vector<std::byte> garbage(20, std::byte{0x41});
    CHECK_THROWS_AS(parse_wav(garbage, 16000), DataError);
    auto truncated = wav_bytes({1, 2, 3}, 16000);
    truncated.resize(30);
    CHECK_THROWS_AS(parse_wav(truncated, 16000), DataError);
}

TEST_CASE("wav encoder round trip and file loading")
{
    const std::vector<double> x{0.0, 0.25, -0.5, 0.999};
    const auto bytes = encode_wav(x, 16000);
    const auto back = parse_wav(bytes, 16000);
    REQUIRE(back.samples.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(back.samples[i] == doctest::Approx(x[i]).epsilon(1e-4));
    }
    testsupport::TempDir dir("wav");
    {
        std::ofstream out(dir / "a.wav", std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK(load_wav(dir / "a.wav", 16000).samples == back.samples);
    CHECK_THROWS_AS(load_wav(dir / "missing.wav", 16000), DataError);
}

TEST_CASE("framing formulas agree with enumeration")
{
    MelConfig cfg;
    CHECK(frame_count(48000, cfg) == 298);
    CHECK(segment_count(298, cfg) == 7);
    CHECK(segment_count(64, cfg) == 1);
    CHECK(segment_count(10, cfg) == 1);
    CHECK(frame_count(399, cfg) == 0);
    Rng rng(17);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t len = 400 + rng.uniform_index(200000 - 400 + 1);
        const std::size_t frames = frame_count(len, cfg);
        CHECK(frames == testsupport::brute_frames(len, 400, 160));
        CHECK(frames == (len - 400) / 160 + 1);
        CHECK(segment_count(frames, cfg) == testsupport::brute_segments(frames, 64, 34));
    }
}

TEST_CASE("log mel shape, silence floor and too-short input")
{
    MelConfig cfg;
    const std::vector<double> silence(48000, 0.0);
    const Matrix m = log_mel(silence, cfg);
    CHECK(m.rows == 298);
    CHECK(m.cols == 64);
    for (double v : m.data) {
        CHECK(v == doctest::Approx(std::log(1e-6)).epsilon(1e-12));
    }
    Rng rng(2);
    for (int i = 0; i < 5; ++i) {
        const std::size_t len = 400 + rng.uniform_index(20000);
        CHECK(log_mel(std::vector<double>(len, 0.1), cfg).rows == testsupport::brute_frames(len, 400, 160));
    }
    CHECK_THROWS_WITH(log_mel(std::vector<double>(399, 0.0), cfg), doctest::Contains("utterance shorter than one window"));
}

TEST_CASE("filterbank geometry")
{
    MelConfig cfg;
    const auto fb = make_filterbank(cfg);
    REQUIRE(fb.center_hz.size() == 64);
    CHECK(fb.weights.rows == 64);
    CHECK(fb.weights.cols == 257);
    // HTK mel scale written out here.
    auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
    auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
    const double lo = mel(20.0);
    const double hi = mel(8000.0);
    for (int b = 0; b < 64; ++b) {
        const double expected = hz(lo + (hi - lo) * (b + 1) / 65.0);
        CHECK(fb.center_hz[static_cast<std::size_t>(b)] == doctest::Approx(expected).epsilon(1e-9));
        double area = 0.0;
        double peak = 0.0;
        for (std::size_t k = 0; k < fb.weights.cols; ++k) {
            const double w = fb.weights(static_cast<std::size_t>(b), k);
            CHECK(w >= 0.0);
            CHECK(w <= 1.0 + 1e-12);
            area += w;
            peak = std::max(peak, w);
        }
        CHECK(area > 0.0);
        if (b > 0) {
            CHECK(fb.center_hz[static_cast<std::size_t>(b)] > fb.center_hz[static_cast<std::size_t>(b - 1)]);
        }
    }
    CHECK(hz_to_mel(1000.0) == doctest::Approx(mel(1000.0)));
    CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5));
}

TEST_CASE("a pure tone peaks in the band centred nearest to it")
{
    MelConfig cfg;
    const auto fb = make_filterbank(cfg);
    for (double f : {300.0, 1000.0, 2500.0, 6000.0}) {
        const Matrix m = log_mel(sine(f, 16000), cfg);
        std::vector<double> mean(64, 0.0);
        for (std::size_t t = 0; t < m.rows; ++t) {
            for (std::size_t b = 0; b < 64; ++b) {
                mean[b] += m(t, b);
            }
        }
        std::size_t nearest = 0;
        for (std::size_t b = 1; b < 64; ++b) {
            if (std::abs(fb.center_hz[b] - f) < std::abs(fb.center_hz[nearest] - f)) {
                nearest = b;
            }
        }
        CHECK(std::max_element(mean.begin(), mean.end()) - mean.begin() == static_cast<long>(nearest));
    }
}

TEST_CASE("mel energy scales with the square of the amplitude")
{
    MelConfig cfg;
    Rng rng(5);
    std::vector<double> x(4000);
    for (double& v : x) {
        v = rng.uniform(-0.3, 0.3);
    }
    const double a = 1.7;
    std::vector<double> ax(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        ax[i] = a * x[i];
    }
    const Matrix e = mel_energies(x, cfg);
    const Matrix ea = mel_energies(ax, cfg);
    for (std::size_t i = 0; i < e.data.size(); ++i) {
        CHECK(ea.data[i] == doctest::Approx(a * a * e.data[i]).epsilon(1e-9));
    }
}

TEST_CASE("delta identities")
{
    Matrix c(20, 3, 4.25);
    const Matrix d = delta(c, 2);
    for (double v : d.data) {
        CHECK(v == 0.0);
    }
    Matrix ramp(20, 1);
    for (std::size_t t = 0; t < 20; ++t) {
        ramp(t, 0) = static_cast<double>(t);
    }
    const Matrix dr = delta(ramp, 2);
    for (std::size_t t = 2; t < 18; ++t) {
        CHECK(dr(t, 0) == doctest::Approx((1.0 * 2 + 2.0 * 4) / 10.0).epsilon(1e-15));
    }
    // Edge replication at t=0: (1*(1-0) + 2*(2-0)) / 10.
    CHECK(dr(0, 0) == doctest::Approx(0.5));
    const Matrix ddr = delta(dr, 2);
    for (std::size_t t = 4; t < 16; ++t) {
        CHECK(std::abs(ddr(t, 0)) < 1e-12);
    }
    Matrix one(1, 2, 3.0);
    CHECK(delta(one, 2) == Matrix(1, 2, 0.0));
}

TEST_CASE("delta matches the regression formula and is linear")
{
    Rng rng(6);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix m = random_matrix(1 + rng.uniform_index(40), 1 + rng.uniform_index(5), rng);
        const int w = rng.uniform_int(1, 3);
        const Matrix d = delta(m, w);
        const Matrix ref = reference_delta(m, w);
        for (std::size_t i = 0; i < d.data.size(); ++i) {
            CHECK(d.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));
        }
        Matrix scaled = m;
        const double a = rng.uniform(-4.0, 4.0);
        for (double& v : scaled.data) {
            v *= a;
        }
        const Matrix ds = delta(scaled, w);
        for (std::size_t i = 0; i < d.data.size(); ++i) {
            CHECK(ds.data[i] == doctest::Approx(a * d.data[i]).epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("segmentation windows and padding")
{
    MelConfig cfg;
    Rng rng(7);
    const Matrix s = random_matrix(298, 64, rng);
    const Matrix d1 = delta(s, 2);
    const Matrix d2 = delta(d1, 2);
    const auto segs = segment(s, d1, d2, cfg, "utt");
    REQUIRE(segs.size() == 7);
    for (std::size_t k = 0; k < segs.size(); ++k) {
        CHECK(segs[k].index == k);
        CHECK(segs[k].utterance_id == "utt");
        CHECK(segs[k].values.size() == 3 * 64 * 64);
        const std::size_t start = 34 * k;
        for (std::size_t f = 0; f < 64; f += 7) {
            for (std::size_t b = 0; b < 64; b += 5) {
                CHECK(segs[k].at(0, b, f) == static_cast<float>(s(start + f, b)));
                CHECK(segs[k].at(1, b, f) == static_cast<float>(d1(start + f, b)));
                CHECK(segs[k].at(2, b, f) == static_cast<float>(d2(start + f, b)));
            }
        }
    }
    CHECK(34 * 6 == 204);

    const Matrix exact = random_matrix(64, 64, rng);
    const auto one = segment(exact, exact, exact, cfg);
    REQUIRE(one.size() == 1);
    CHECK(one[0].at(0, 3, 63) == static_cast<float>(exact(63, 3)));

    const Matrix short_m = random_matrix(10, 64, rng);
    const auto padded = segment(short_m, short_m, short_m, cfg);
    REQUIRE(padded.size() == 1);
    for (std::size_t f = 10; f < 64; ++f) {
        CHECK(padded[0].at(0, 5, f) == static_cast<float>(short_m(9, 5)));
    }
    CHECK(padded[0].at(0, 5, 4) == static_cast<float>(short_m(4, 5)));
}

TEST_CASE("normalization uses training statistics")
{
    Rng rng(8);
    MelConfig cfg;
    std::vector<SegmentTensor> train;
    for (int i = 0; i < 5; ++i) {
        SegmentTensor t;
        t.n_mels = 4;
        t.frames = 6;
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t k = 0; k < 24; ++k) {
                t.values.push_back(c == 2 ? 5.0f : static_cast<float>(rng.uniform(-2.0, 10.0) * (c + 1)));
            }
        }
        train.push_back(t);
    }
    auto [normed, stats] = normalize(train);
    for (std::size_t c = 0; c < 3; ++c) {
        double sum = 0.0;
        double sq = 0.0;
        double n = 0.0;
        for (const auto& t : normed) {
            for (std::size_t k = 0; k < 24; ++k) {
                const double v = t.values[c * 24 + k];
                sum += v;
                sq += v * v;
                n += 1.0;
            }
        }
        const double mean = sum / n;
        CHECK(std::abs(mean) < 1e-6);
        if (c < 2) {
            CHECK(std::abs(std::sqrt(sq / n - mean * mean) - 1.0) < 1e-6);
        } else {
            CHECK(sq == 0.0);
        }
    }
    // A shifted test set keeps the training statistics.
    std::vector<SegmentTensor> test = {train[0]};
    for (float& v : test[0].values) {
        v += 100.0f;
    }
    auto [normed_test, same] = normalize(test, stats);
    CHECK(same.mean == stats.mean);
    CHECK(same.stddev == stats.stddev);
    CHECK(normed_test[0].values[0] ==
          doctest::Approx((train[0].values[0] + 100.0 - stats.mean[0]) / stats.stddev[0]).epsilon(1e-5));
    CHECK(stats.stddev[2] == doctest::Approx(1e-8));
}

TEST_CASE("extraction is deterministic and finite")
{
    MelConfig cfg;
    Rng rng(9);
    std::vector<double> x(16000 + 123);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = 0.3 * std::sin(0.05 * static_cast<double>(i)) + rng.uniform(-0.05, 0.05);
    }
    const auto bytes = encode_wav(x, 16000);
    const auto a = extract_segments(parse_wav(bytes, 16000), cfg, "u");
    const auto b = extract_segments(parse_wav(bytes, 16000), cfg, "u");
    REQUIRE(a.size() == segment_count(frame_count(x.size(), cfg), cfg));
    for (std::size_t k = 0; k < a.size(); ++k) {
        REQUIRE(a[k].values.size() == b[k].values.size());
        CHECK(std::memcmp(a[k].values.data(), b[k].values.data(), a[k].values.size() * sizeof(float)) == 0);
        for (float v : a[k].values) {
            CHECK(std::isfinite(v));
        }
    }
    // Channel 1 is the delta of channel 0 over the utterance.
    const Matrix statics = log_mel(parse_wav(bytes, 16000).samples, cfg);
    const Matrix d1 = delta(statics, 2);
    CHECK(a[1].at(1, 10, 3) == static_cast<float>(d1(34 + 3, 10)));
    CHECK(a[0].at(0, 7, 0) == static_cast<float>(statics(0, 7)));
}
