#include "beamkit/stft.hpp"

#include <cmath>
#include <numbers>

#include "beamkit/errors.hpp"
#include "beamkit/parallel.hpp"
#include "fft.hpp"

namespace beamkit {

void Waveform::validate() const {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
        throw DomainError("waveform sample rate must be positive");
    const std::size_t n = num_samples();
    for (const auto& ch : channels) {
        if (ch.size() != n) throw ConfigError("waveform channels have unequal lengths");
        for (double v : ch)
            if (!std::isfinite(v)) throw DomainError("waveform contains non-finite samples");
    }
}

Waveform Waveform::channel(std::size_t m) const {
    Waveform out;
    out.sample_rate = sample_rate;
    out.channels.push_back(channels.at(m));
    return out;
}

std::string to_string(WindowType w) {
    switch (w) {
        case WindowType::Rectangular: return "rectangular";
        case WindowType::Hann: return "hann";
        case WindowType::SqrtHann: return "sqrt_hann";
    }
    return "unknown";
}

WindowType window_from_string(const std::string& name) {
    if (name == "rectangular" || name == "rect") return WindowType::Rectangular;
    if (name == "hann") return WindowType::Hann;
    if (name == "sqrt_hann" || name == "sqrthann") return WindowType::SqrtHann;
    throw ConfigError("unknown window '" + name + "'");
}

std::vector<double> make_window(WindowType type, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (type == WindowType::Rectangular) return w;
    for (std::size_t i = 0; i < n; ++i) {
        const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                 static_cast<double>(n));
        w[i] = type == WindowType::Hann ? hann : std::sqrt(hann);
    }
    return w;
}

double cola_constant(WindowType type, std::size_t frame_len, std::size_t hop) {
    if (frame_len == 0 || hop == 0) throw ConfigError("frame length and hop must be positive");
    if (hop > frame_len) throw ConfigError("hop exceeds frame length");
    if (frame_len % hop != 0) throw ConfigError("hop must divide the frame length");

    const auto w = make_window(type, frame_len);
    std::vector<double> sum(hop, 0.0);
    for (std::size_t i = 0; i < frame_len; ++i) sum[i % hop] += w[i] * w[i];
    const double c = sum[0];
    for (double s : sum) {
        if (!(c > 0.0) || std::abs(s - c) > 1e-10 * c)
            throw ConfigError("window '" + to_string(type) + "' with hop " + std::to_string(hop) +
                              " does not satisfy constant overlap-add");
    }
    return c;
}

StftTensor::StftTensor(std::size_t channels, std::size_t frames, const StftConfig& cfg,
                       double sample_rate, std::size_t signal_length)
    : channels_(channels), bins_(cfg.frame_len / 2 + 1), frames_(frames), cfg_(cfg),
      sample_rate_(sample_rate), signal_length_(signal_length),
      data_(channels * bins_ * frames, cplx{}) {}

Eigen::MatrixXcd StftTensor::bin_matrix(std::size_t k) const {
    Eigen::MatrixXcd y(channels_, frames_);
    for (std::size_t m = 0; m < channels_; ++m) {
        const cplx* row = &data_[(m * bins_ + k) * frames_];
        for (std::size_t l = 0; l < frames_; ++l) y(m, l) = row[l];
    }
    return y;
}

void StftTensor::set_bin_row(std::size_t m, std::size_t k, const Eigen::RowVectorXcd& row) {
    if (static_cast<std::size_t>(row.size()) != frames_) throw DimensionError("frame count mismatch");
    cplx* dst = &data_[(m * bins_ + k) * frames_];
    for (std::size_t l = 0; l < frames_; ++l) dst[l] = row(static_cast<Eigen::Index>(l));
}

StftTensor StftTensor::like(std::size_t channels) const {
    return StftTensor(channels, frames_, cfg_, sample_rate_, signal_length_);
}

namespace {

// Padded length: one frame of zeros at each end, then rounded up to whole hops.
std::size_t frame_count(std::size_t signal_length, const StftConfig& cfg) {
    std::size_t padded = signal_length + 2 * cfg.frame_len;
    const std::size_t span = padded - cfg.frame_len;
    return (span + cfg.hop - 1) / cfg.hop + 1;
}

}  // namespace

StftTensor analyze(const Waveform& w, const StftConfig& cfg) {
    if (w.num_channels() == 0 || w.num_samples() == 0) throw EmptyInputError("empty waveform");
    w.validate();
    cola_constant(cfg.window, cfg.frame_len, cfg.hop);

    const std::size_t n = cfg.frame_len;
    const std::size_t len = w.num_samples();
    const std::size_t frames = frame_count(len, cfg);
    StftTensor out(w.num_channels(), frames, cfg, w.sample_rate, len);
    const auto window = make_window(cfg.window, n);
    const std::size_t bins = out.num_bins();

    parallel_for(w.num_channels(), [&](std::size_t m) {
        detail::RealFft fft(n);
        std::vector<double> frame(n);
        std::vector<cplx> spec(bins);
        const auto& x = w.channels[m];
        for (std::size_t l = 0; l < frames; ++l) {
            // Frame l starts at padded index l*hop, i.e. signal index l*hop - n.
            const auto start = static_cast<std::ptrdiff_t>(l * cfg.hop) - static_cast<std::ptrdiff_t>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto idx = start + static_cast<std::ptrdiff_t>(i);
                const double v = (idx >= 0 && idx < static_cast<std::ptrdiff_t>(len))
                                     ? x[static_cast<std::size_t>(idx)]
                                     : 0.0;
                frame[i] = v * window[i];
            }
            fft.forward(frame, spec);
            // Real input: DC and (even n) Nyquist are real up to rounding; make it exact.
            spec[0].imag(0.0);
            if (n % 2 == 0) spec[bins - 1].imag(0.0);
            for (std::size_t k = 0; k < bins; ++k) out(m, k, l) = spec[k];
        }
    });
    return out;
}

Waveform synthesize(const StftTensor& t) {
    const std::size_t n = t.frame_len();
    if (n == 0 || t.num_channels() == 0 || t.num_frames() == 0)
        throw EmptyInputError("empty STFT tensor");
    if (t.num_bins() != n / 2 + 1) throw ConfigError("bin count inconsistent with frame length");
    if (t.data().size() != t.num_channels() * t.num_bins() * t.num_frames())
        throw ConfigError("STFT data size inconsistent with its shape");
    if (t.num_frames() != frame_count(t.signal_length(), t.config()))
        throw ConfigError("frame count inconsistent with signal length and hop");
    if (!(t.sample_rate() > 0.0)) throw ConfigError("STFT sample rate must be positive");
    const double cola = cola_constant(t.window(), n, t.hop());

    const auto window = make_window(t.window(), n);
    const std::size_t len = t.signal_length();
    const std::size_t frames = t.num_frames();
    const std::size_t bins = t.num_bins();
    const std::size_t padded = (frames - 1) * t.hop() + n;
    Waveform out(t.sample_rate(), t.num_channels(), len);
    const double scale = 1.0 / (static_cast<double>(n) * cola);

    parallel_for(t.num_channels(), [&](std::size_t m) {
        detail::RealFft fft(n);
        std::vector<cplx> spec(bins);
        std::vector<double> frame(n);
        std::vector<double> acc(padded, 0.0);
        for (std::size_t l = 0; l < frames; ++l) {
            for (std::size_t k = 0; k < bins; ++k) spec[k] = t(m, k, l);
            fft.inverse(spec, frame);
            const std::size_t start = l * t.hop();
            for (std::size_t i = 0; i < n; ++i) acc[start + i] += frame[i] * window[i];
        }
        auto& y = out.channels[m];
        for (std::size_t i = 0; i < len; ++i) y[i] = acc[n + i] * scale;
    });
    return out;
}

}  // namespace beamkit
