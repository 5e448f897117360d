#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace beamkit {

using cplx = std::complex<double>;

/// Multichannel real signal, full-scale amplitude +/-1.0.
struct Waveform {
    double sample_rate = 16000.0;
    std::vector<std::vector<double>> channels;

    Waveform() = default;
    Waveform(double fs, std::size_t num_channels, std::size_t num_samples)
        : sample_rate(fs), channels(num_channels, std::vector<double>(num_samples, 0.0)) {}

    std::size_t num_channels() const noexcept { return channels.size(); }
    std::size_t num_samples() const noexcept { return channels.empty() ? 0 : channels.front().size(); }

    /// Throws ConfigError/DomainError if channels are ragged, fs <= 0 or a value is non-finite.
    void validate() const;

    Waveform channel(std::size_t m) const;
};

enum class WindowType { Rectangular, Hann, SqrtHann };

std::string to_string(WindowType w);
WindowType window_from_string(const std::string& name);

/// Periodic window of length n.
std::vector<double> make_window(WindowType type, std::size_t n);

/// Sum of shifted squared windows (analysis * synthesis, same window on both sides).
/// Throws ConfigError if the sum is not constant for the given hop.
double cola_constant(WindowType type, std::size_t frame_len, std::size_t hop);

struct StftConfig {
    std::size_t frame_len = 512;
    std::size_t hop = 256;
    WindowType window = WindowType::SqrtHann;
};

/// One-sided complex spectrogram indexed (channel m, bin k, frame l).
///
/// The signal is zero-padded by one frame at each end before framing; `signal_length`
/// is the original length so synthesis can trim back to it.
class StftTensor {
public:
    StftTensor() = default;
    StftTensor(std::size_t channels, std::size_t frames, const StftConfig& cfg, double sample_rate,
               std::size_t signal_length);

    std::size_t num_channels() const noexcept { return channels_; }
    std::size_t num_bins() const noexcept { return bins_; }
    std::size_t num_frames() const noexcept { return frames_; }
    const StftConfig& config() const noexcept { return cfg_; }
    std::size_t frame_len() const noexcept { return cfg_.frame_len; }
    std::size_t hop() const noexcept { return cfg_.hop; }
    WindowType window() const noexcept { return cfg_.window; }
    double sample_rate() const noexcept { return sample_rate_; }
    std::size_t signal_length() const noexcept { return signal_length_; }

    cplx& operator()(std::size_t m, std::size_t k, std::size_t l) {
        return data_[(m * bins_ + k) * frames_ + l];
    }
    const cplx& operator()(std::size_t m, std::size_t k, std::size_t l) const {
        return data_[(m * bins_ + k) * frames_ + l];
    }

    /// y(k, l) for all l, as an M x L matrix.
    Eigen::MatrixXcd bin_matrix(std::size_t k) const;
    void set_bin_row(std::size_t m, std::size_t k, const Eigen::RowVectorXcd& row);

    /// Same framing metadata, different channel count, zero-filled.
    StftTensor like(std::size_t channels) const;

    const std::vector<cplx>& data() const noexcept { return data_; }
    std::vector<cplx>& data() noexcept { return data_; }

private:
    std::size_t channels_ = 0;
    std::size_t bins_ = 0;
    std::size_t frames_ = 0;
    StftConfig cfg_{};
    double sample_rate_ = 0.0;
    std::size_t signal_length_ = 0;
    std::vector<cplx> data_;
};

StftTensor analyze(const Waveform& w, const StftConfig& cfg = {});
Waveform synthesize(const StftTensor& t);

/// Center frequency in Hz of bin k.
inline double bin_frequency(std::size_t k, std::size_t frame_len, double sample_rate) {
    return static_cast<double>(k) * sample_rate / static_cast<double>(frame_len);
}

}  // namespace beamkit
