#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "beamkit/errors.hpp"
#include "beamkit/parallel.hpp"
#include "beamkit/stft.hpp"
#include "beamkit/wav.hpp"
#include "oracles.hpp"

using namespace beamkit;

namespace {

Waveform random_waveform(std::uint64_t seed, std::size_t channels, std::size_t n, double fs = 16000.0) {
    std::mt19937_64 rng(seed);
    Waveform w(fs, channels, n);
    for (auto& c : w.channels) c = oracle::random_signal(rng, n);
    return w;
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST(Stft, ZeroFrameGivesZeroSpectrum) {
    Waveform w(16000.0, 1, 512);
    const auto t = analyze(w);
    for (const auto& v : t.data()) EXPECT_EQ(v, cplx{});
}

TEST(Stft, BinCenteredToneConcentratesInOneBin) {
    const std::size_t n = 256, k0 = 19;
    Waveform w(16000.0, 1, 4 * n);
    for (std::size_t i = 0; i < w.num_samples(); ++i)
        w.channels[0][i] = std::cos(2.0 * std::numbers::pi * static_cast<double>(k0 * i) / static_cast<double>(n));
    const auto t = analyze(w, {n, n, WindowType::Rectangular});
    // Frames 1..4 cover the signal exactly.
    for (std::size_t l = 1; l <= 4; ++l) {
        const double peak = std::abs(t(0, k0, l));
        EXPECT_NEAR(peak, n / 2.0, 1e-9);
        for (std::size_t k = 0; k < t.num_bins(); ++k)
            if (k != k0) EXPECT_LE(std::abs(t(0, k, l)), 1e-10 * peak) << "bin " << k;
    }
}

TEST(Stft, RoundTripOneSecond) {
    const auto w = random_waveform(7, 1, 16000);
    const auto y = synthesize(analyze(w));
    ASSERT_EQ(y.num_samples(), w.num_samples());
    EXPECT_LE(rel_l2(y.channels[0], w.channels[0]), 1e-10);
}

TEST(Stft, RoundTripOtherCola) {
    const auto w = random_waveform(8, 2, 5000);
    for (StftConfig cfg : {StftConfig{256, 64, WindowType::SqrtHann}, StftConfig{300, 150, WindowType::SqrtHann},
                           StftConfig{128, 128, WindowType::Rectangular}, StftConfig{256, 64, WindowType::Hann}}) {
        const auto y = synthesize(analyze(w, cfg));
        for (std::size_t m = 0; m < 2; ++m) EXPECT_LE(rel_l2(y.channels[m], w.channels[m]), 1e-10) << cfg.frame_len;
    }
}

TEST(Stft, MatchesNaiveDftOnThreeFrames) {
    const auto w = random_waveform(9, 2, 3000);
    const StftConfig cfg{};
    const auto t = analyze(w, cfg);
    const auto window = make_window(cfg.window, cfg.frame_len);
    for (std::size_t m = 0; m < 2; ++m) {
        for (std::size_t l : {0, 3, 7}) {
            const auto ref = oracle::naive_dft(oracle::padded_frame(w.channels[m], l, cfg.frame_len, cfg.hop, window));
            double scale = 0.0;
            for (const auto& v : ref) scale = std::max(scale, std::abs(v));
            for (std::size_t k = 0; k < t.num_bins(); ++k)
                EXPECT_LE(std::abs(t(m, k, l) - ref[k]), 1e-10 * std::max(scale, 1.0));
        }
    }
}

TEST(Stft, DcAndNyquistAreReal) {
    const auto t = analyze(random_waveform(10, 3, 2000));
    for (std::size_t m = 0; m < 3; ++m)
        for (std::size_t l = 0; l < t.num_frames(); ++l) {
            EXPECT_EQ(t(m, 0, l).imag(), 0.0);
            EXPECT_EQ(t(m, t.num_bins() - 1, l).imag(), 0.0);
        }
}

TEST(Stft, ParsevalPerFrame) {
    const auto w = random_waveform(11, 1, 4000);
    const StftConfig cfg{};
    const auto t = analyze(w, cfg);
    const auto window = make_window(cfg.window, cfg.frame_len);
    const std::size_t n = cfg.frame_len;
    for (std::size_t l = 0; l < t.num_frames(); ++l) {
        const auto f = oracle::padded_frame(w.channels[0], l, n, cfg.hop, window);
        double time = 0.0;
        for (double v : f) time += v * v;
        double freq = std::norm(t(0, 0, l)) + std::norm(t(0, n / 2, l));
        for (std::size_t k = 1; k < n / 2; ++k) freq += 2.0 * std::norm(t(0, k, l));
        freq /= static_cast<double>(n);
        if (time == 0.0) EXPECT_NEAR(freq, 0.0, 1e-20);
        else EXPECT_NEAR(freq / time, 1.0, 1e-9) << "frame " << l;
    }
}

TEST(Stft, Linearity) {
    const auto x = random_waveform(12, 2, 3000), y = random_waveform(13, 2, 3000);
    const double a = 0.7, b = -1.9;
    Waveform z(16000.0, 2, 3000);
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t i = 0; i < 3000; ++i) z.channels[m][i] = a * x.channels[m][i] + b * y.channels[m][i];
    const auto tx = analyze(x), ty = analyze(y), tz = analyze(z);
    for (std::size_t i = 0; i < tz.data().size(); ++i)
        EXPECT_LE(std::abs(tz.data()[i] - (a * tx.data()[i] + b * ty.data()[i])), 1e-12);
}

TEST(Stft, SingleBinImpulseSynthesizesWindowedSinusoid) {
    const StftConfig cfg{};
    const std::size_t n = cfg.frame_len, len = 4096, k0 = 37, l0 = 6;
    Waveform w(16000.0, 1, len);
    StftTensor t = analyze(w, cfg);
    const cplx x(0.3, -1.1);
    t(0, k0, l0) = x;
    const auto y = synthesize(t);
    const auto window = make_window(cfg.window, n);
    const double cola = cola_constant(cfg.window, n, cfg.hop);
    std::vector<double> expect(len, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const long idx = static_cast<long>(l0 * cfg.hop + i) - static_cast<long>(n);
        if (idx < 0 || idx >= static_cast<long>(len)) continue;
        // One-sided inverse DFT of a single non-edge bin: 2 Re(X e^{j 2 pi k0 i / N}).
        const double s = 2.0 * (x * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k0 * i) / n)).real();
        expect[static_cast<std::size_t>(idx)] = s * window[i] / (static_cast<double>(n) * cola);
    }
    for (std::size_t i = 0; i < len; ++i) EXPECT_NEAR(y.channels[0][i], expect[i], 1e-14);
}

TEST(Stft, ZeroTensorSynthesizesZeros) {
    Waveform w(16000.0, 2, 1000);
    const auto y = synthesize(analyze(w));
    for (const auto& c : y.channels)
        for (double v : c) EXPECT_EQ(v, 0.0);
}

TEST(Stft, NonColaIsConfigError) {
    const auto w = random_waveform(14, 1, 1000);
    EXPECT_THROW(analyze(w, {512, 512, WindowType::SqrtHann}), ConfigError);
    EXPECT_THROW(analyze(w, {512, 200, WindowType::SqrtHann}), ConfigError);
    EXPECT_THROW(analyze(w, {512, 1024, WindowType::Rectangular}), ConfigError);
    EXPECT_THROW(cola_constant(WindowType::Hann, 512, 512), ConfigError);
}

TEST(Stft, EmptySignalIsEmptyInputError) {
    EXPECT_THROW(analyze(Waveform{}), EmptyInputError);
    EXPECT_THROW(analyze(Waveform(16000.0, 2, 0)), EmptyInputError);
}

TEST(Stft, InconsistentMetadataRejected) {
    const auto w = random_waveform(15, 1, 1000);
    const auto t = analyze(w);
    StftTensor bad(1, t.num_frames() + 3, t.config(), 16000.0, 1000);
    EXPECT_THROW(synthesize(bad), ConfigError);
    StftTensor bad_rate(1, t.num_frames(), t.config(), 0.0, 1000);
    EXPECT_THROW(synthesize(bad_rate), ConfigError);
    EXPECT_THROW(synthesize(StftTensor{}), EmptyInputError);
}

TEST(Stft, WaveformValidation) {
    Waveform w(16000.0, 2, 10);
    w.channels[1].resize(9);
    EXPECT_THROW(w.validate(), Error);
    Waveform nan(16000.0, 1, 10);
    nan.channels[0][3] = std::nan("");
    EXPECT_THROW(analyze(nan), Error);
    Waveform rate(-1.0, 1, 10);
    EXPECT_THROW(rate.validate(), Error);
}

TEST(Stft, BinLayout) {
    const auto w = random_waveform(16, 3, 2000);
    const auto t = analyze(w);
    EXPECT_EQ(t.num_bins(), 257u);
    const auto y = t.bin_matrix(40);
    EXPECT_EQ(y.rows(), 3);
    EXPECT_EQ(static_cast<std::size_t>(y.cols()), t.num_frames());
    EXPECT_EQ(y(2, 5), t(2, 40, 5));
    EXPECT_DOUBLE_EQ(bin_frequency(40, 512, 16000.0), 1250.0);
}

TEST(Stft, DeterministicAcrossThreadCounts) {
    const auto w = random_waveform(17, 6, 8000);
    const std::size_t saved = max_threads();
    set_max_threads(1);
    const auto a = analyze(w);
    const auto ya = synthesize(a);
    set_max_threads(4);
    const auto b = analyze(w);
    const auto yb = synthesize(b);
    set_max_threads(saved);
    EXPECT_EQ(a.data(), b.data());
    EXPECT_EQ(ya.channels, yb.channels);
}

TEST(Wav, Float32RoundTripPreservesRateAndChannels) {
    const auto dir = std::filesystem::temp_directory_path() / "beamkit_wav_test";
    std::filesystem::create_directories(dir);
    auto w = random_waveform(18, 5, 777, 22050.0);
    for (auto& c : w.channels)
        for (auto& v : c) v = std::clamp(v, -1.0, 1.0);
    write_wav((dir / "f.wav").string(), w, SampleFormat::Float32);
    const auto r = read_wav((dir / "f.wav").string());
    EXPECT_EQ(r.sample_rate, 22050.0);
    ASSERT_EQ(r.num_channels(), 5u);
    ASSERT_EQ(r.num_samples(), 777u);
    for (std::size_t m = 0; m < 5; ++m)
        for (std::size_t i = 0; i < 777; ++i) EXPECT_NEAR(r.channels[m][i], w.channels[m][i], 1e-7);

    write_wav((dir / "p.wav").string(), w, SampleFormat::Pcm16);
    const auto p = read_wav((dir / "p.wav").string());
    for (std::size_t m = 0; m < 5; ++m)
        for (std::size_t i = 0; i < 777; ++i) EXPECT_NEAR(p.channels[m][i], w.channels[m][i], 1.0 / 32767.0);
}

TEST(Wav, MissingFileIsIoErrorWithPath) {
    try {
        read_wav("/nonexistent/x.wav");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_EQ(e.path(), "/nonexistent/x.wav");
    }
}
