#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "beamkit/errors.hpp"
#include "beamkit/roomsim.hpp"

namespace beamkit {

std::string to_string(SignalKind kind) {
    switch (kind) {
        case SignalKind::SpeechLike: return "speech_like";
        case SignalKind::TonalChirp: return "tonal_chirp";
        case SignalKind::White: return "white";
    }
    return "unknown";
}

SignalKind signal_kind_from_string(const std::string& name) {
    if (name == "speech_like" || name == "speech_like_modulated_noise") return SignalKind::SpeechLike;
    if (name == "tonal_chirp") return SignalKind::TonalChirp;
    if (name == "white") return SignalKind::White;
    throw ConfigError("unknown synthetic signal kind '" + name + "'");
}

namespace {

// Rescales to the given RMS (no-op on silence).
void normalize_rms(std::vector<double>& x, double rms) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    if (acc <= 0.0) return;
    const double g = rms / std::sqrt(acc / static_cast<double>(x.size()));
    for (double& v : x) v *= g;
}

// Syllables of voiced harmonic or fricative sound separated by silent gaps. Energy is
// concentrated in few time-frequency bins, which gives a super-Gaussian distribution.
std::vector<double> speech_like(std::size_t n, double fs, std::mt19937_64& rng) {
    std::vector<double> x(n, 0.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto between = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

    std::size_t pos = static_cast<std::size_t>(between(0.02, 0.25) * fs);
    while (pos < n) {
        const auto len = static_cast<std::size_t>(between(0.12, 0.35) * fs);
        const double level = std::exp(0.5 * gauss(rng));
        const bool voiced = uni(rng) < 0.8;
        const std::size_t attack = static_cast<std::size_t>(0.02 * fs);
        const std::size_t release = static_cast<std::size_t>(0.04 * fs);
        auto envelope = [&](std::size_t i) {
            double e = 1.0;
            if (i < attack) e = std::sin(0.5 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(attack));
            if (i + release > len) {
                const double r = static_cast<double>(len - i) / static_cast<double>(release);
                e = std::min(e, std::sin(0.5 * std::numbers::pi * std::max(r, 0.0)));
            }
            return e * e;
        };

        if (voiced) {
            const double f0_start = between(90.0, 220.0);
            const double f0_end = f0_start * between(0.85, 1.15);
            const std::array<double, 3> formant{between(300.0, 850.0), between(850.0, 2300.0), between(2300.0, 3300.0)};
            const std::array<double, 3> bandwidth{90.0, 130.0, 200.0};
            const std::array<double, 3> gain{1.0, 0.6, 0.3};
            const int harmonics = static_cast<int>(0.45 * fs / f0_start);
            std::vector<double> amp(static_cast<std::size_t>(harmonics) + 1, 0.0);
            std::vector<double> phase(amp.size(), 0.0);
            for (auto& ph : phase) ph = between(0.0, 2.0 * std::numbers::pi);
            double f0_phase = 0.0;
            for (std::size_t i = 0; i < len && pos + i < n; ++i) {
                const double frac = static_cast<double>(i) / static_cast<double>(len);
                const double f0 = f0_start + (f0_end - f0_start) * frac;
                f0_phase += 2.0 * std::numbers::pi * f0 / fs;
                if (i % 32 == 0) {
                    // Formant envelope sampled at the current harmonic frequencies.
                    for (int h = 1; h <= harmonics; ++h) {
                        const double f = h * f0;
                        double a = 0.0;
                        if (f <= 0.45 * fs) {
                            a = 0.01;
                            for (int q = 0; q < 3; ++q) {
                                const double d = (f - formant[q]) / bandwidth[q];
                                a += gain[q] * std::exp(-0.5 * d * d);
                            }
                            a /= std::sqrt(static_cast<double>(h));
                        }
                        amp[static_cast<std::size_t>(h)] = a;
                    }
                }
                double v = 0.0;
                for (int h = 1; h <= harmonics; ++h) {
                    const double a = amp[static_cast<std::size_t>(h)];
                    if (a == 0.0) continue;
                    v += a * std::sin(h * f0_phase + phase[static_cast<std::size_t>(h)]);
                }
                v += 0.02 * gauss(rng);
                x[pos + i] += level * envelope(i) * v;
            }
        } else {
            // Fricative: differenced white noise (high-pass).
            double prev = 0.0;
            for (std::size_t i = 0; i < len && pos + i < n; ++i) {
                const double w = gauss(rng);
                x[pos + i] += 0.4 * level * envelope(i) * (w - prev);
                prev = w;
            }
        }
        pos += len;
        const double gap = uni(rng) < 0.15 ? between(0.4, 0.8) : between(0.08, 0.35);
        pos += static_cast<std::size_t>(gap * fs);
    }
    return x;
}

}  // namespace

Waveform synth_test_signal(SignalKind kind, double duration_s, double sample_rate, std::uint64_t seed) {
    if (!(duration_s > 0.0) || !(sample_rate > 0.0)) throw DomainError("duration and sample rate must be positive");
    const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
    std::mt19937_64 rng(seed);
    Waveform w(sample_rate, 1, n);
    auto& x = w.channels[0];
    switch (kind) {
        case SignalKind::White: {
            std::normal_distribution<double> gauss(0.0, 0.1);
            for (auto& v : x) v = gauss(rng);
            break;
        }
        case SignalKind::TonalChirp: {
            const double f_start = 100.0, f_end = 0.4 * sample_rate;
            for (std::size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) / sample_rate;
                const double phase = 2.0 * std::numbers::pi * (f_start * t + 0.5 * (f_end - f_start) * t * t / duration_s);
                x[i] = 0.5 * std::sin(phase);
            }
            break;
        }
        case SignalKind::SpeechLike:
            x = speech_like(n, sample_rate, rng);
            normalize_rms(x, 0.1);
            break;
    }
    return w;
}

}  // namespace beamkit
